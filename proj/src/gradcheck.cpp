#include "ssae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ssae/train.hpp"

namespace ssae {

double GradcheckCase::max_error() const {
    double worst = 0.0;
    for (const auto& t : tensors) worst = std::max(worst, t.rel_error);
    return worst;
}

GradcheckCase gradcheck_model(SsaeModel& model, ConstMatrixView window, std::span<const double> target, double eps) {
    const auto out = ssae_forward(model, window);
    const auto loss = mse_loss(out.forecast, target);
    SsaeGrads grads = ssae_backward(model, out.trace, loss.grad);

    auto params = model_tensors(model);
    const auto analytic = grad_tensors(grads);
    const auto objective = [&] { return mse_loss(ssae_forward(model, window).forecast, target).loss; };

    GradcheckCase result;
    for (std::size_t t = 0; t < params.size(); ++t) {
        const Vector numeric = finite_diff_grad(objective, params[t].data, eps);
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            const double a = analytic[t].data[i];
            diff += (a - numeric[i]) * (a - numeric[i]);
            na += a * a;
            nn += numeric[i] * numeric[i];
        }
        const double denom = std::max(std::sqrt(na) + std::sqrt(nn), 1e-6);
        result.tensors.push_back({params[t].name, numeric.size(), std::sqrt(diff) / denom});
    }
    return result;
}

std::vector<GradcheckCase> gradcheck_sweep(std::uint64_t seed, double eps) {
    ScalerStats scaler{{"u1", "u2", "precip"}, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    SsaeHyper base;
    base.lookback = 12;
    base.short_window = 3;
    base.horizon = 2;
    base.pool_window = 6;
    base.pool_stride = 3;
    base.hidden_short = 4;
    base.hidden_seasonal = 4;
    base.seasonal_features = {"u1", "precip"};

    struct Spec {
        std::string label;
        ModelVariant variant;
        Combo combo;
    };
    const std::vector<Spec> specs{{"ssae/multiplicative", ModelVariant::ssae, Combo::multiplicative},
                                  {"ssae/additive", ModelVariant::ssae, Combo::additive},
                                  {"ssae/linear", ModelVariant::ssae, Combo::linear},
                                  {"s2s1", ModelVariant::s2s1, Combo::multiplicative},
                                  {"s2s2", ModelVariant::s2s2, Combo::multiplicative}};

    std::vector<GradcheckCase> cases;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        SplitMix64 rng(derive_seed(seed, s));
        SsaeHyper hyper = base;
        hyper.variant = specs[s].variant;
        hyper.combo = specs[s].combo;
        SsaeModel model = make_model(hyper, scaler);
        initialize(model, rng);
        // Nonzero biases and combination weights so every path carries gradient.
        for (auto& t : model_tensors(model)) {
            if (t.shape.size() == 1) {
                for (auto& v : t.data) v = 0.5 * (rng.uniform() - 0.5) + (t.name.starts_with("combo") ? 1.0 : 0.0);
            }
        }
        Matrix window(hyper.lookback, scaler.names.size());
        for (auto& v : window.flat()) v = rng.uniform();
        Vector target(hyper.horizon);
        for (auto& v : target) v = rng.uniform();

        auto result = gradcheck_model(model, window, target, eps);
        result.label = specs[s].label;
        cases.push_back(std::move(result));
    }
    return cases;
}

}  // namespace ssae
