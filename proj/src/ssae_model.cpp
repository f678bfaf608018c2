#include "ssae/ssae_model.hpp"

#include <algorithm>

#include "ssae/errors.hpp"

namespace ssae {

std::string_view to_string(Combo c) {
    switch (c) {
        case Combo::multiplicative: return "multiplicative";
        case Combo::additive: return "additive";
        case Combo::linear: return "linear";
    }
    return "multiplicative";
}

Combo parse_combo(std::string_view name) {
    if (name == "multiplicative") return Combo::multiplicative;
    if (name == "additive") return Combo::additive;
    if (name == "linear") return Combo::linear;
    throw DataError("unknown combination mode '" + std::string(name) + "'");
}

std::string_view to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::ssae: return "ssae";
        case ModelVariant::s2s1: return "s2s1";
        case ModelVariant::s2s2: return "s2s2";
    }
    return "ssae";
}

ModelVariant parse_model_variant(std::string_view name) {
    if (name == "ssae") return ModelVariant::ssae;
    if (name == "s2s1") return ModelVariant::s2s1;
    if (name == "s2s2") return ModelVariant::s2s2;
    throw DataError("unknown model variant '" + std::string(name) + "'");
}

void SsaeHyper::validate() const {
    if (lookback < 1) throw DataError("look-back window T must be at least 1");
    if (short_window < 1 || short_window > lookback) throw DataError("short-term window c must satisfy 1 <= c <= T");
    if (horizon < 1) throw DataError("horizon H must be at least 1");
    if (hidden_short < 1) throw DataError("hidden_short must be at least 1");
    if (variant == ModelVariant::ssae) {
        if (hidden_seasonal < 1) throw DataError("hidden_seasonal must be at least 1");
        if (pool_window < 1 || pool_window > lookback) throw DataError("pooling window l must satisfy 1 <= l <= T");
        if (pool_stride < 1) throw DataError("pooling stride must be at least 1");
        if (seasonal_features.empty()) throw DataError("SSAE needs at least one seasonal feature");
    }
}

void SsaeHyper::validate(std::span<const std::string> input_names) const {
    validate();
    if (variant != ModelVariant::ssae) return;
    for (const auto& name : seasonal_features) {
        if (std::find(input_names.begin(), input_names.end(), name) == input_names.end()) {
            throw DataError("seasonal feature '" + name + "' is not a data column");
        }
    }
}

std::size_t SsaeHyper::pooled_length() const { return ssae::pooled_length(lookback, pool_window, pool_stride); }

SsaeModel make_model(const SsaeHyper& hyper, const ScalerStats& scaler) {
    scaler.validate();
    hyper.validate(scaler.names);
    SsaeModel model;
    model.hyper = hyper;
    model.scaler = scaler;
    const std::size_t d = scaler.names.size();

    Seq2SeqShape shape;
    shape.input_dim = d;
    shape.hidden_dim = hyper.hidden_short;
    shape.horizon = hyper.horizon;
    shape.head_bias = hyper.head_bias;
    if (hyper.variant == ModelVariant::s2s1) {
        shape.variant = S2SVariant::s2s1;
        shape.enc_activation = Activation::tanh;
        shape.dec_activation = Activation::tanh;
        shape.feed_encoder_state = true;
        shape.bridge = hyper.s2s1_bridge;
    } else {
        // Short-term branch: encoder state not passed on, ReLU decoder.
        shape.variant = S2SVariant::s2s2;
        shape.enc_activation = Activation::tanh;
        shape.dec_activation = Activation::relu;
        shape.feed_encoder_state = false;
    }
    model.short_branch = Seq2SeqParams::zeros(shape);

    if (hyper.variant == ModelVariant::ssae) {
        for (const auto& name : hyper.seasonal_features) {
            const auto it = std::find(scaler.names.begin(), scaler.names.end(), name);
            model.seasonal_columns.push_back(static_cast<std::size_t>(it - scaler.names.begin()));
        }
        Seq2SeqShape seasonal;
        seasonal.variant = S2SVariant::s2s2;
        seasonal.input_dim = model.seasonal_columns.size();
        seasonal.hidden_dim = hyper.hidden_seasonal;
        seasonal.horizon = hyper.horizon;
        seasonal.enc_activation = Activation::tanh;
        seasonal.dec_activation = Activation::tanh;
        seasonal.feed_encoder_state = true;
        seasonal.head_bias = hyper.head_bias;
        model.seasonal_branch = Seq2SeqParams::zeros(seasonal);
    }
    return model;
}

SsaeGrads zero_grads(const SsaeModel& model) {
    SsaeGrads g;
    g.short_branch = Seq2SeqParams::zeros(model.short_branch.shape());
    g.has_seasonal = model.has_seasonal();
    if (g.has_seasonal) g.seasonal_branch = Seq2SeqParams::zeros(model.seasonal_branch.shape());
    g.linear = g.has_seasonal && model.hyper.combo == Combo::linear;
    return g;
}

std::string_view to_string(MaskMode m) { return m == MaskMode::per_sequence ? "per_sequence" : "per_step"; }

MaskMode parse_mask_mode(std::string_view name) {
    if (name == "per_sequence") return MaskMode::per_sequence;
    if (name == "per_step") return MaskMode::per_step;
    throw DataError("unknown dropout mask mode '" + std::string(name) + "'");
}

namespace {

BranchMasks branch_masks(std::size_t hidden, std::size_t enc_steps, std::size_t dec_steps, double p,
                         SplitMix64& rng, MaskMode mode) {
    BranchMasks masks;
    if (mode == MaskMode::per_sequence) {
        const Vector mask = dropout_mask(hidden, p, rng);
        masks.encoder.assign(enc_steps, mask);
        masks.decoder.assign(dec_steps, mask);
    } else {
        for (std::size_t t = 0; t < enc_steps; ++t) masks.encoder.push_back(dropout_mask(hidden, p, rng));
        for (std::size_t t = 0; t < dec_steps; ++t) masks.decoder.push_back(dropout_mask(hidden, p, rng));
    }
    return masks;
}

}  // namespace

SsaeMasks sample_masks(const SsaeModel& model, double p, SplitMix64& rng, MaskMode mode) {
    const auto& hyper = model.hyper;
    SsaeMasks masks;
    masks.short_branch = branch_masks(hyper.hidden_short, hyper.short_window, hyper.horizon, p, rng, mode);
    if (model.has_seasonal()) {
        masks.seasonal_branch = branch_masks(hyper.hidden_seasonal, hyper.pooled_length(), hyper.horizon, p, rng, mode);
    }
    return masks;
}

Matrix seasonal_input(const SsaeModel& model, ConstMatrixView window) {
    return average_pool(window, model.seasonal_columns, model.hyper.pool_window, model.hyper.pool_stride);
}

SsaeOutput ssae_forward(const SsaeModel& model, ConstMatrixView window, const SsaeMasks* masks) {
    const auto& hyper = model.hyper;
    require(window.rows == hyper.lookback, "ssae_forward: window has " + std::to_string(window.rows) +
                                               " rows, expected T = " + std::to_string(hyper.lookback));
    require(window.cols == model.input_dim(), "ssae_forward: window has " + std::to_string(window.cols) +
                                                  " columns, expected " + std::to_string(model.input_dim()));

    const std::size_t c = hyper.short_window;
    const ConstMatrixView recent{window.data.subspan((window.rows - c) * window.cols, c * window.cols), c, window.cols};
    auto short_out = s2s_forward(model.short_branch, recent, masks ? &masks->short_branch : nullptr);

    SsaeOutput out;
    out.g_short = short_out.forecasts;
    out.trace.short_trace = std::move(short_out.trace);
    out.trace.g_short = out.g_short;
    if (!model.has_seasonal()) {
        out.forecast = out.g_short;
        return out;
    }

    const Matrix pooled = seasonal_input(model, window);
    auto seasonal_out = s2s_forward(model.seasonal_branch, pooled, masks ? &masks->seasonal_branch : nullptr);
    out.g_seasonal = seasonal_out.forecasts;
    out.trace.seasonal_trace = std::move(seasonal_out.trace);
    out.trace.g_seasonal = out.g_seasonal;

    const std::size_t horizon = hyper.horizon;
    out.forecast.resize(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        const double s = out.g_short[k];
        const double l = out.g_seasonal[k];
        switch (hyper.combo) {
            case Combo::multiplicative: out.forecast[k] = s * l; break;
            case Combo::additive: out.forecast[k] = s + l; break;
            case Combo::linear: out.forecast[k] = model.combo_a * l + model.combo_b * s; break;
        }
    }
    return out;
}

void ssae_backward(const SsaeModel& model, const SsaeTrace& trace, std::span<const double> grad, SsaeGrads& acc) {
    const std::size_t horizon = model.hyper.horizon;
    require(grad.size() == horizon, "ssae_backward: gradient length must equal the horizon");
    if (!model.has_seasonal()) {
        s2s_backward(model.short_branch, trace.short_trace, grad, acc.short_branch);
        return;
    }
    require(trace.g_short.size() == horizon && trace.g_seasonal.size() == horizon, "ssae_backward: trace mismatch");

    Vector d_short(horizon), d_seasonal(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        switch (model.hyper.combo) {
            case Combo::multiplicative:
                d_short[k] = grad[k] * trace.g_seasonal[k];
                d_seasonal[k] = grad[k] * trace.g_short[k];
                break;
            case Combo::additive:
                d_short[k] = grad[k];
                d_seasonal[k] = grad[k];
                break;
            case Combo::linear:
                d_short[k] = grad[k] * model.combo_b;
                d_seasonal[k] = grad[k] * model.combo_a;
                acc.combo_a += grad[k] * trace.g_seasonal[k];
                acc.combo_b += grad[k] * trace.g_short[k];
                break;
        }
    }
    s2s_backward(model.short_branch, trace.short_trace, d_short, acc.short_branch);
    s2s_backward(model.seasonal_branch, trace.seasonal_trace, d_seasonal, acc.seasonal_branch);
}

SsaeGrads ssae_backward(const SsaeModel& model, const SsaeTrace& trace, std::span<const double> grad) {
    SsaeGrads g = zero_grads(model);
    ssae_backward(model, trace, grad, g);
    return g;
}

std::size_t ssae_count_parameters(const SsaeModel& model) {
    std::size_t total = count_parameters(model.short_branch);
    if (model.has_seasonal()) {
        total += count_parameters(model.seasonal_branch);
        if (model.hyper.combo == Combo::linear) total += 2;
    }
    return total;
}

Vector predict_mm(const SsaeModel& model, ConstMatrixView raw_window, PredictOptions opts) {
    const std::size_t d = model.input_dim();
    if (raw_window.cols != d) {
        throw DataError("forecast input has " + std::to_string(raw_window.cols) + " columns, model expects " +
                        std::to_string(d));
    }
    Matrix scaled(raw_window.rows, d);
    for (std::size_t t = 0; t < raw_window.rows; ++t) {
        for (std::size_t j = 0; j < d; ++j) {
            scaled(t, j) = (raw_window(t, j) - model.scaler.mins[j]) / (model.scaler.maxs[j] - model.scaler.mins[j]);
        }
    }
    Vector mm = invert_target(ssae_forward(model, scaled).forecast, model.scaler);
    if (opts.clamp_nonneg) {
        for (auto& v : mm) v = std::max(v, 0.0);
    }
    return mm;
}

namespace {

template <class M, class R>
void collect_model(M& model, std::vector<R>& out) {
    collect_tensors(model.short_branch, "short.", out);
    if (model.has_seasonal()) {
        collect_tensors(model.seasonal_branch, "seasonal.", out);
        if (model.hyper.combo == Combo::linear) {
            out.push_back({"combo.a", {1}, {&model.combo_a, 1}});
            out.push_back({"combo.b", {1}, {&model.combo_b, 1}});
        }
    }
}

}  // namespace

std::vector<TensorRef> model_tensors(SsaeModel& model) {
    std::vector<TensorRef> out;
    collect_model(model, out);
    return out;
}

std::vector<ConstTensorRef> model_tensors(const SsaeModel& model) {
    std::vector<ConstTensorRef> out;
    collect_model(model, out);
    return out;
}

std::vector<TensorRef> grad_tensors(SsaeGrads& grads) {
    std::vector<TensorRef> out;
    collect_tensors(grads.short_branch, "short.", out);
    if (grads.has_seasonal) {
        collect_tensors(grads.seasonal_branch, "seasonal.", out);
        if (grads.linear) {
            out.push_back({"combo.a", {1}, {&grads.combo_a, 1}});
            out.push_back({"combo.b", {1}, {&grads.combo_b, 1}});
        }
    }
    return out;
}

}  // namespace ssae
