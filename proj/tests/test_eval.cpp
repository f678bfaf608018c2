#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "ssae/errors.hpp"
#include "ssae/eval.hpp"
#include "ssae/pipeline.hpp"

using namespace ssae;
using namespace testutil;

TEST_CASE("rmse examples and properties") {
    CHECK(rmse(Vector{1, 2, 3}, Vector{1, 2, 3}) == 0.0);
    CHECK(rmse(Vector{3, 4}, Vector{0, 0}) == std::sqrt(12.5));
    SplitMix64 rng(1);
    const Vector a = random_vector(50, rng), b = random_vector(50, rng);
    Vector a2(50), neg(50);
    for (std::size_t i = 0; i < 50; ++i) {
        a2[i] = b[i] + 2.0 * (a[i] - b[i]);
        neg[i] = b[i] - (a[i] - b[i]);
    }
    CHECK(rmse(a2, b) == doctest::Approx(2.0 * rmse(a, b)).epsilon(1e-14));
    CHECK(rmse(neg, b) == doctest::Approx(rmse(a, b)).epsilon(1e-14));
    CHECK_THROWS(rmse(Vector{}, Vector{}));
}

TEST_CASE("corr examples, affine invariance and the constant-series error") {
    const Vector y{0.0, 1.5, 3.0, 0.2, 7.0};
    CHECK(corr(y, y) == doctest::Approx(1.0).epsilon(1e-15));
    Vector neg(5), aff(5);
    for (std::size_t i = 0; i < 5; ++i) {
        neg[i] = -y[i];
        aff[i] = 2.0 * y[i] + 3.0;
    }
    CHECK(corr(neg, y) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(corr(aff, y) == doctest::Approx(1.0).epsilon(1e-15));

    SplitMix64 rng(2);
    const Vector p = random_vector(40, rng), q = random_vector(40, rng);
    Vector pt(40), qt(40);
    for (std::size_t i = 0; i < 40; ++i) {
        pt[i] = 0.37 * p[i] - 12.0;
        qt[i] = 5.0 * q[i] + 1.0;
    }
    CHECK(std::abs(corr(pt, qt) - corr(p, q)) < 1e-12);
    CHECK_THROWS_AS(corr(Vector{1, 1, 1}, Vector{1, 2, 3}), UndefinedCorrelation);
    CHECK_THROWS_AS(corr(Vector{1, 2, 3}, Vector{4, 4, 4}), UndefinedCorrelation);
}

TEST_CASE("evaluate: zero model gives rmse sqrt(mean y^2) per horizon") {
    const auto table = make_table(60, 2, 3);
    const auto scaler = fit_scaler(table);
    auto h = tiny_hyper();
    h.horizon = 3;
    auto m = make_model(h, scaler);
    m.scaler.mins.back() = 0.0;  // zero scaled output maps to 0 mm
    const auto scaled = apply_scaler(table, m.scaler);
    const auto w = make_windows(scaled, 12, 3);
    const auto report = evaluate(m, w);
    REQUIRE(report.horizons.size() == 3);
    CHECK(report.n_test == w.size());
    for (std::size_t k = 0; k < 3; ++k) {
        double s = 0;
        for (std::size_t i = 0; i < w.size(); ++i) s += table.target[i + 12 + k] * table.target[i + 12 + k];
        CHECK(report.horizons[k].rmse == doctest::Approx(std::sqrt(s / w.size())).epsilon(1e-12));
        CHECK(!report.horizons[k].corr.has_value());  // constant forecasts
    }
}

TEST_CASE("evaluate: targets generated by the model itself score rmse 0 and corr 1") {
    // The model ignores the precip input column, so writing its own forecasts
    // into the target does not change any forecast.
    auto h = tiny_hyper(ModelVariant::s2s2);
    h.horizon = 1;
    const auto scaler = unit_scaler({"a", "b", "precip"});
    auto m = random_model(h, scaler, 8);
    for (auto& U : m.short_branch.encoder.U) {
        for (std::size_t r = 0; r < U.rows(); ++r) U(r, 2) = 0.0;
    }
    m.short_branch.head.b[0] = 5.0;
    SeriesTable t = make_table(60, 2, 9);
    for (std::size_t i = 0; i < 60; ++i) t.target[i] = 0.0;
    const auto w0 = make_windows(t, 12, 1);
    for (std::size_t i = 0; i < w0.size(); ++i) t.target[i + 12] = ssae_forward(m, w0.input(i)).forecast[0];
    const auto report = evaluate(m, make_windows(t, 12, 1));
    CHECK(report.horizons[0].rmse == 0.0);
    CHECK(*report.horizons[0].corr == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("aggregate reports: mean and sample standard deviation") {
    MetricReport a, b, c;
    a.horizons = {{1, 1.0, 0.5}};
    b.horizons = {{1, 2.0, 0.7}};
    c.horizons = {{1, 6.0, 0.3}};
    a.n_test = b.n_test = c.n_test = 10;
    const std::vector<MetricReport> runs{a, b, c};
    const auto agg = aggregate_reports(runs);
    CHECK(agg.runs == 3);
    CHECK(agg.horizons[0].rmse == doctest::Approx(3.0));
    CHECK(*agg.horizons[0].rmse_std == doctest::Approx(std::sqrt((4.0 + 1.0 + 9.0) / 2.0)));
    CHECK(*agg.horizons[0].corr == doctest::Approx(0.5));
    CHECK(*agg.horizons[0].corr_std == doctest::Approx(0.2));

    const auto back = metric_report_from_json(to_json(agg));
    CHECK(to_json(back) == to_json(agg));
}

TEST_CASE("vip re-evaluation on an ignored feature is exactly zero") {
    const auto table = make_table(150, 2, 6);
    const auto scaler = fit_scaler(table);
    auto h = tiny_hyper(ModelVariant::s2s2);
    auto m = random_model(h, scaler, 3);
    for (auto& U : m.short_branch.encoder.U) {
        for (std::size_t r = 0; r < U.rows(); ++r) U(r, 1) = 0.0;  // column "b"
    }
    VipOptions opts;
    opts.repetitions = 3;
    const auto rep = vip_reevaluate(m, table, table.dates[100], "b", opts);
    CHECK(rep.vip_rmse == 0.0);
    CHECK(rep.vip_corr == 0.0);
    CHECK(rep.reps.size() == 3);

    const auto used = vip_reevaluate(m, table, table.dates[100], "a", opts);
    CHECK(used.vip_rmse != 0.0);
    CHECK_THROWS_AS(vip_reevaluate(m, table, table.dates[100], "zz", opts), DataError);
}

TEST_CASE("permute_column shuffles one column only") {
    const auto table = make_table(40, 2, 1);
    SplitMix64 rng(3);
    const auto p = permute_column(table, "a", rng);
    Vector before, after;
    for (std::size_t i = 0; i < 40; ++i) {
        before.push_back(table.features(i, 0));
        after.push_back(p.features(i, 0));
        CHECK(p.features(i, 1) == table.features(i, 1));
    }
    CHECK(after != before);
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    CHECK(after == before);
    CHECK(p.target == table.target);
}

TEST_CASE("vip with retraining, one repetition") {
    SynthConfig sc;
    sc.days = 400;
    sc.period = 150;
    RunConfig cfg;
    cfg.hyper = tiny_hyper();
    cfg.hyper.seasonal_features = {"precip"};
    cfg.train.epochs = 1;
    cfg.split.test_days = 60;
    VipOptions opts;
    const auto rep = vip(cfg, synth_generate(sc), "noise", opts);
    CHECK(rep.repetitions == 1);
    CHECK(rep.reps.size() == 1);
    CHECK(rep.vip_rmse == doctest::Approx(rep.reps[0].rmse - rep.baseline_rmse));
}

namespace {

struct McFixture {
    SeriesTable table = make_table(90, 2, 12);
    ScalerStats scaler = fit_scaler(table);
    SsaeModel model = random_model(tiny_hyper(), scaler, 4);
    WindowSet test = make_windows(apply_scaler(table, scaler), 12, 2).subset(0, 30);
};

}  // namespace

TEST_CASE("empirical quantile interpolates order statistics") {
    const Vector s{1.0, 2.0, 4.0, 8.0};
    CHECK(empirical_quantile(s, 0.0) == 1.0);
    CHECK(empirical_quantile(s, 1.0) == 8.0);
    CHECK(empirical_quantile(s, 0.5) == 3.0);
    CHECK(empirical_quantile(s, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("MC dropout bands: nesting, determinism, vanishing width") {
    McFixture f;
    UncertaintyOptions opts;
    opts.runs = 40;
    const auto a = mc_dropout(f.model, f.test, opts);
    const auto b = mc_dropout(f.model, f.test, opts);
    REQUIRE(a.windows.size() == 30);
    CHECK(to_json(a) == to_json(b));
    for (const auto& w : a.windows) {
        for (const auto& hb : w.horizon) {
            REQUIRE(hb.bands.size() == 2);
            CHECK(hb.bands[1].lower <= hb.bands[0].lower);
            CHECK(hb.bands[0].upper <= hb.bands[1].upper);
            CHECK(hb.bands[0].lower <= hb.median);
            CHECK(hb.median <= hb.bands[0].upper);
        }
    }
    opts.p = 1e-9;
    opts.runs = 5;
    for (const auto& w : mc_dropout(f.model, f.test, opts).windows) {
        for (const auto& hb : w.horizon) CHECK(hb.bands[1].upper - hb.bands[1].lower < 1e-6);
    }
    opts.p = 1.0;
    CHECK_THROWS(mc_dropout(f.model, f.test, opts));
    opts.p = 0.25;
    opts.runs = 1;
    CHECK_THROWS(mc_dropout(f.model, f.test, opts));

    const auto csv = bands_csv(a);
    CHECK(csv.starts_with("anchor,date,step,actual,mean,median,lower_75,upper_75,lower_95,upper_95\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 30 * 2);
}
