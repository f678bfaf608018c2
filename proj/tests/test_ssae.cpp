#include "doctest.h"
#include "helpers.hpp"
#include "ssae/checkpoint.hpp"
#include "ssae/errors.hpp"
#include "ssae/gradcheck.hpp"

using namespace ssae;
using namespace testutil;

namespace {

const ScalerStats kScaler = unit_scaler({"a", "b", "precip"});

Matrix random_window(std::uint64_t seed, std::size_t T = 12) {
    SplitMix64 rng(seed);
    return random_matrix(T, 3, rng, 0.0, 1.0);
}

void set_seasonal_to_ones(SsaeModel& m) {
    for (auto& v : m.seasonal_branch.head.W.flat()) v = 0.0;
    for (auto& v : m.seasonal_branch.head.b) v = 1.0;
}

}  // namespace

TEST_CASE("multiplicative identity: a seasonal head of ones reduces SSAE to S2S-2") {
    auto ssae = random_model(tiny_hyper(), kScaler, 1);
    set_seasonal_to_ones(ssae);
    auto plain = make_model(tiny_hyper(ModelVariant::s2s2), kScaler);
    plain.short_branch = ssae.short_branch;
    const Matrix x = random_window(2);
    const auto a = ssae_forward(ssae, x), b = ssae_forward(plain, x);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.forecast[k] == a.g_short[k]);
        CHECK(std::abs(a.forecast[k] - b.forecast[k]) < 1e-12);
    }
}

TEST_CASE("a zero short branch zeroes multiplicative output and passes g_L through additive") {
    for (auto combo : {Combo::multiplicative, Combo::additive}) {
        auto m = random_model(tiny_hyper(ModelVariant::ssae, combo), kScaler, 3);
        for (auto& v : m.short_branch.head.W.flat()) v = 0.0;
        for (auto& v : m.short_branch.head.b) v = 0.0;
        const auto out = ssae_forward(m, random_window(4));
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(out.g_short[k] == 0.0);
            CHECK(out.forecast[k] == (combo == Combo::additive ? out.g_seasonal[k] : 0.0));
        }
    }
}

TEST_CASE("linear combination uses a and b") {
    auto m = random_model(tiny_hyper(ModelVariant::ssae, Combo::linear), kScaler, 5);
    m.combo_a = 0.3;
    m.combo_b = -1.7;
    const auto out = ssae_forward(m, random_window(6));
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(out.forecast[k] == doctest::Approx(0.3 * out.g_seasonal[k] - 1.7 * out.g_short[k]).epsilon(1e-15));
    }
    const Vector grad{0.25, -0.5};
    const auto g = ssae_backward(m, out.trace, grad);
    CHECK(g.combo_a == doctest::Approx(0.25 * out.g_seasonal[0] - 0.5 * out.g_seasonal[1]));
    CHECK(g.combo_b == doctest::Approx(0.25 * out.g_short[0] - 0.5 * out.g_short[1]));
}

TEST_CASE("seasonal branch reads only the seasonal columns") {
    auto h = tiny_hyper();
    h.seasonal_features = {"a"};
    const auto m = random_model(h, kScaler, 7);
    Matrix x = random_window(8);
    const auto base = ssae_forward(m, x);
    for (std::size_t t = 0; t < 12; ++t) x(t, 1) += 0.3;  // column b
    const auto moved = ssae_forward(m, x);
    CHECK(moved.g_seasonal == base.g_seasonal);
    CHECK(moved.g_short != base.g_short);
}

TEST_CASE("short branch reads only the last c rows") {
    const auto m = random_model(tiny_hyper(), kScaler, 9);
    Matrix x = random_window(10);
    const auto base = ssae_forward(m, x);
    const std::size_t row = 12 - 3 - 1;
    for (std::size_t j = 0; j < 3; ++j) x(row, j) += 0.4;
    const auto moved = ssae_forward(m, x);
    CHECK(moved.g_short == base.g_short);
    CHECK(moved.g_seasonal != base.g_seasonal);
}

TEST_CASE("Providence configuration pools to a 3 x 2 seasonal input") {
    std::vector<std::string> names{"pressure", "tmin", "tmax", "dew", "rh", "wind", "peak_speed", "peak_dir",
                                   "sus_speed", "sus_dir", "precip"};
    SsaeHyper h;
    h.lookback = 70;
    h.short_window = 2;
    h.horizon = 3;
    h.pool_window = 41;
    h.pool_stride = 14;
    h.hidden_short = 100;
    h.hidden_seasonal = 120;
    h.seasonal_features = {"peak_dir", "sus_dir"};
    const auto m = make_model(h, unit_scaler(names));
    SplitMix64 rng(1);
    const Matrix z = seasonal_input(m, random_matrix(70, 11, rng));
    CHECK(z.rows() == 3);
    CHECK(z.cols() == 2);
}

TEST_CASE("parameter counts equal tensor enumeration") {
    SsaeHyper h;
    h.horizon = 1;
    h.seasonal_features = {"precip"};
    const auto scaler = unit_scaler({"precip"});
    CHECK(ssae_count_parameters(make_model(h, scaler)) == 60);
    h.combo = Combo::linear;
    CHECK(ssae_count_parameters(make_model(h, scaler)) == 62);
    h.head_bias = false;
    CHECK(ssae_count_parameters(make_model(h, scaler)) == 60);

    for (auto variant : {ModelVariant::ssae, ModelVariant::s2s1, ModelVariant::s2s2}) {
        for (auto combo : {Combo::multiplicative, Combo::additive, Combo::linear}) {
            if (variant != ModelVariant::ssae && combo != Combo::multiplicative) continue;
            const auto m = random_model(tiny_hyper(variant, combo), kScaler, 1);
            std::size_t total = 0;
            for (const auto& t : model_tensors(m)) total += t.data.size();
            CHECK(ssae_count_parameters(m) == total);
            CHECK(checkpoint_scalar_count(to_json(Checkpoint{m, 0, {}})) == total);
        }
    }
}

TEST_CASE("composed SSAE gradients pass the finite-difference sweep") {
    for (const auto& c : gradcheck_sweep(1)) {
        CAPTURE(c.label);
        CHECK(c.max_error() < 1e-4);
        CHECK(!c.tensors.empty());
    }
}

TEST_CASE("zero forecast gradient gives zero model gradient") {
    const auto m = random_model(tiny_hyper(ModelVariant::ssae, Combo::linear), kScaler, 2);
    const auto out = ssae_forward(m, random_window(3));
    auto g = ssae_backward(m, out.trace, Vector(2, 0.0));
    for (const auto& t : grad_tensors(g)) {
        for (double v : t.data) CHECK(v == 0.0);
    }
}

TEST_CASE("predict_mm scales, inverts and optionally clamps") {
    const auto zero = make_model(tiny_hyper(), kScaler);
    const Matrix x = random_window(5);
    for (double v : predict_mm(zero, x)) CHECK(v == 0.0);

    const auto m = random_model(tiny_hyper(), kScaler, 6);
    const auto direct = ssae_forward(m, x).forecast;
    CHECK(predict_mm(m, x) == direct);

    auto shifted = m;
    shifted.scaler.mins.back() = -4.0;  // target range [-4, 1]
    shifted.scaler.maxs.back() = 1.0;
    auto raw = x;
    for (std::size_t t = 0; t < 12; ++t) raw(t, 2) = -4.0 + 5.0 * x(t, 2);
    const auto mm = predict_mm(shifted, raw);
    const auto clamped = predict_mm(shifted, raw, {.clamp_nonneg = true});
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(mm[k] == doctest::Approx(-4.0 + 5.0 * direct[k]));
        CHECK(clamped[k] == std::max(mm[k], 0.0));
    }
    SplitMix64 rng(1);
    CHECK_THROWS_AS(predict_mm(m, random_matrix(12, 2, rng)), DataError);
}

TEST_CASE("dropout masks: per-sequence masks repeat across steps") {
    const auto m = random_model(tiny_hyper(), kScaler, 1);
    SplitMix64 rng(4);
    const auto seq = sample_masks(m, 0.5, rng, MaskMode::per_sequence);
    REQUIRE(seq.short_branch.encoder.size() == 3);
    CHECK(seq.short_branch.encoder[0] == seq.short_branch.encoder[2]);
    CHECK(seq.seasonal_branch.encoder.size() == m.hyper.pooled_length());
    const auto step = sample_masks(m, 0.5, rng, MaskMode::per_step);
    bool differs = false;
    for (std::size_t t = 1; t < step.short_branch.encoder.size(); ++t) {
        differs |= step.short_branch.encoder[t] != step.short_branch.encoder[0];
    }
    CHECK(differs);
}

TEST_CASE("hyperparameter validation") {
    auto h = tiny_hyper();
    h.short_window = 13;
    CHECK_THROWS_AS(h.validate(), DataError);
    h = tiny_hyper();
    h.pool_window = 0;
    CHECK_THROWS_AS(h.validate(), DataError);
    h = tiny_hyper();
    h.seasonal_features = {"missing"};
    CHECK_THROWS_AS(make_model(h, kScaler), DataError);
}
