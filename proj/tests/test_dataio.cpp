#include <algorithm>
#include <numbers>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "ssae/errors.hpp"

using namespace ssae;
using namespace testutil;

TEST_CASE("dates parse strictly and do calendar arithmetic") {
    CHECK(Date::parse("2019-07-31").iso() == "2019-07-31");
    CHECK(Date::parse("2020-02-28") + 1 == Date(2020, 2, 29));
    CHECK(Date(2021, 3, 1) - Date(2021, 2, 1) == 28);
    for (const char* bad : {"2021-02-30", "2021-1-01", "20210101", "2021-13-01", "abcd-ef-gh", "2021-01-01x"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(Date::parse(bad), DataError);
    }
}

TEST_CASE("CSV parsing and validation errors") {
    const auto t = parse_csv("date,t,precip\n2020-01-01,1.5,0\n2020-01-02,2,3.25\n");
    CHECK(t.rows() == 2);
    CHECK(t.feature_names == std::vector<std::string>{"t"});
    CHECK(t.target[1] == 3.25);
    CHECK(t.input_names() == std::vector<std::string>{"t", "precip"});

    auto throws_with = [](const char* text, const std::string& needle) {
        try {
            parse_csv(text);
        } catch (const DataError& e) {
            CAPTURE(e.what());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
            return;
        }
        FAIL("no DataError for: " << text);
    };
    throws_with("date,t\n2020-01-01,1\n", "precip");
    throws_with("date,t,precip\n2020-01-01,1,0\n2020-01-03,1,0\n", "gap");
    throws_with("date,t,precip\n2020-01-01,1,0\n2020-01-01,1,0\n", "duplicate");
    throws_with("date,t,precip\n2020-01-02,1,0\n2020-01-01,1,0\n", "increasing");
    throws_with("date,t,precip\n2020-01-01,x,0\n", "t");
    throws_with("date,t,precip\n2020-01-01,1,-1\n", "negative");
    throws_with("date,t,precip\n2020-01-01,1\n", "row");
}

TEST_CASE("CSV round trip is bit exact") {
    const auto t = make_table(40, 3, 9);
    const auto back = parse_csv(format_csv(t));
    CHECK(back.dates == t.dates);
    CHECK(back.features == t.features);
    CHECK(back.target == t.target);
    CHECK(back.feature_names == t.feature_names);
}

TEST_CASE("window count is N - T - H + 1 over random shapes") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t T = 1 + rng.below(30), H = 1 + rng.below(5);
        const std::size_t N = T + H + rng.below(60);
        const auto table = make_table(N, 2, trial);
        CHECK(make_windows(table, T, H).size() == N - T - H + 1);
    }
    CHECK_THROWS_AS(make_windows(make_table(5, 1, 1), 4, 2), DataError);
}

TEST_CASE("windows expose the right rows, targets and anchors") {
    const auto table = make_table(30, 2, 4);
    const Matrix all = table.input_matrix();
    const auto w = make_windows(table, 7, 3);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto x = w.input(i);
        for (std::size_t r = 0; r < 7; ++r) {
            for (std::size_t c = 0; c < 3; ++c) CHECK(x(r, c) == all(i + r, c));
        }
        for (std::size_t k = 0; k < 3; ++k) CHECK(w.target(i)[k] == table.target[i + 7 + k]);
        CHECK(w.anchor_date(i) == table.dates[i + 7]);
    }
    const auto sub = w.subset(4, 5);
    CHECK(sub.size() == 5);
    CHECK(sub.target(0)[0] == w.target(4)[0]);
    CHECK(sub.anchor_date(4) == w.anchor_date(8));
}

TEST_CASE("pooled length matches brute-force window enumeration for all l <= T <= 50") {
    for (std::size_t T = 1; T <= 50; ++T) {
        for (std::size_t l = 1; l <= T; ++l) {
            for (std::size_t d = 1; d <= T; ++d) {
                // Windows end at T-1, T-1-d, ... while they still fit.
                std::size_t count = 0;
                for (long end = static_cast<long>(T) - 1; end - static_cast<long>(l) + 1 >= 0; end -= static_cast<long>(d)) {
                    ++count;
                }
                CHECK(pooled_length(T, l, d) == count);
            }
        }
    }
    CHECK(pooled_length(70, 41, 14) == 3);
    CHECK(pooled_length(169, 125, 60) == 1);
}

TEST_CASE("average pooling equals per-window means, oldest first") {
    SplitMix64 rng(8);
    const Matrix seq = random_matrix(17, 3, rng);
    const std::vector<std::size_t> cols{2, 0};
    const Matrix pooled = average_pool(seq, cols, 5, 4);
    const std::size_t P = pooled_length(17, 5, 4);
    REQUIRE(pooled.rows() == P);
    REQUIRE(pooled.cols() == 2);
    for (std::size_t p = 0; p < P; ++p) {
        const std::size_t end = 16 - (P - 1 - p) * 4;
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0;
            for (std::size_t r = end + 1 - 5; r <= end; ++r) s += seq(r, cols[j]);
            CHECK(pooled(p, j) == doctest::Approx(s / 5).epsilon(1e-15));
        }
    }
    const Matrix full = average_pool(seq, 17, 1);
    CHECK(full.rows() == 1);
}

TEST_CASE("min-max scaler maps training extremes to [0, 1] and inverts the target") {
    const auto table = make_table(50, 2, 3);
    const auto stats = fit_scaler(table);
    const auto scaled = apply_scaler(table, stats);
    for (std::size_t j = 0; j < 2; ++j) {
        double lo = 1e9, hi = -1e9;
        for (std::size_t i = 0; i < 50; ++i) {
            lo = std::min(lo, scaled.features(i, j));
            hi = std::max(hi, scaled.features(i, j));
        }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
    for (std::size_t i = 0; i < 50; ++i) CHECK(invert_target(scaled.target[i], stats) == doctest::Approx(table.target[i]));

    auto constant = table;
    for (std::size_t i = 0; i < 50; ++i) constant.features(i, 1) = 4.0;
    CHECK_THROWS_AS(fit_scaler(constant), DataError);

    auto renamed = table;
    renamed.feature_names[0] = "zz";
    CHECK_THROWS_WITH_AS(apply_scaler(renamed, stats), doctest::Contains("zz"), DataError);
}

TEST_CASE("chronological split and test context") {
    const auto table = make_table(100, 1, 5);
    const Date cut = table.dates[69];
    const auto [train, test] = split_by_date(table, cut, cut + 1);
    CHECK(train.rows() == 70);
    CHECK(test.rows() == 30);
    CHECK(test.dates.front() == cut + 1);

    const auto ctx = with_context(table, cut + 1, 10);
    CHECK(ctx.rows() == 40);
    const auto w = make_windows(ctx, 10, 2);
    CHECK(w.anchor_date(0) == cut + 1);
    CHECK_THROWS_AS(with_context(table, table.dates[5], 10), DataError);
}

TEST_CASE("synthetic generator is deterministic and shaped as configured") {
    SynthConfig cfg;
    cfg.days = 400;
    cfg.period = 90;
    const auto a = synth_generate(cfg), b = synth_generate(cfg);
    CHECK(a.features == b.features);
    CHECK(a.target == b.target);
    CHECK(a.rows() == 400);
    CHECK(a.feature_names == std::vector<std::string>{"u1", "u2", "noise"});
    CHECK(std::all_of(a.target.begin(), a.target.end(), [](double v) { return v >= 0.0; }));
    CHECK(std::count_if(a.target.begin(), a.target.end(), [](double v) { return v > 0.0; }) > 40);
    a.validate();

    cfg.seed = 2;
    CHECK(synth_generate(cfg).target != a.target);

    cfg.noise_scale = 0.0;
    const auto quiet = synth_generate(cfg);
    CHECK(std::all_of(quiet.target.begin(), quiet.target.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("synthetic target follows the seasonal factor") {
    SynthConfig cfg;  // 2000 days, P = 365, seed 1
    const auto t = synth_generate(cfg);
    Vector season(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) {
        season[i] = 1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 365.0);
    }
    double my = 0, ms = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        my += t.target[i];
        ms += season[i];
    }
    my /= t.rows();
    ms /= t.rows();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        sxy += (t.target[i] - my) * (season[i] - ms);
        sxx += (season[i] - ms) * (season[i] - ms);
        syy += (t.target[i] - my) * (t.target[i] - my);
    }
    CHECK(sxy / std::sqrt(sxx * syy) > 0.1);

    SynthConfig bad;
    bad.days = 700;
    CHECK_THROWS_AS(synth_generate(bad), DataError);
    bad = {};
    bad.n_features = 1;
    CHECK_THROWS_AS(synth_generate(bad), DataError);
}

TEST_CASE("synthetic CSV round trip keeps full precision") {
    SynthConfig cfg;
    cfg.days = 800;
    const auto t = synth_generate(cfg);
    const auto back = parse_csv(format_csv(t));
    CHECK(back.features == t.features);
    CHECK(back.target == t.target);
}
