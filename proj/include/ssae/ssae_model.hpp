#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssae/dataio.hpp"
#include "ssae/seq2seq.hpp"

namespace ssae {

// How the short-term output g_S and seasonal output g_L combine.
enum class Combo {
    multiplicative,  // g_S * g_L
    additive,        // g_S + g_L
    linear,          // a * g_L + b * g_S, with trainable a and b
};

// Which forecaster a model holds. The standalone autoencoders consume the
// last `c` rows of each window and have no seasonal branch.
enum class ModelVariant { ssae, s2s1, s2s2 };

std::string_view to_string(Combo c);
Combo parse_combo(std::string_view name);
std::string_view to_string(ModelVariant v);
ModelVariant parse_model_variant(std::string_view name);

struct SsaeHyper {
    ModelVariant variant = ModelVariant::ssae;
    std::size_t lookback = 1;       // T
    std::size_t short_window = 1;   // c
    std::size_t horizon = 1;        // H
    std::size_t pool_window = 1;    // l
    std::size_t pool_stride = 1;    // Delta
    std::size_t hidden_short = 1;   // h_S
    std::size_t hidden_seasonal = 1;  // h_L
    std::vector<std::string> seasonal_features;
    Combo combo = Combo::multiplicative;
    bool head_bias = true;
    bool s2s1_bridge = true;

    // Checks ranges; throws DataError.
    void validate() const;
    // Also checks the seasonal features exist among `input_names`.
    void validate(std::span<const std::string> input_names) const;
    std::size_t pooled_length() const;
};

struct SsaeModel {
    SsaeHyper hyper;
    ScalerStats scaler;                       // names are the model input columns
    std::vector<std::size_t> seasonal_columns;  // indices into the input columns
    Seq2SeqParams short_branch;
    Seq2SeqParams seasonal_branch;  // empty unless variant == ssae
    double combo_a = 1.0;
    double combo_b = 1.0;

    bool has_seasonal() const { return hyper.variant == ModelVariant::ssae; }
    std::size_t input_dim() const { return scaler.names.size(); }
    const std::vector<std::string>& input_names() const { return scaler.names; }
};

// Zero-weight model for the given hyperparameters and fitted scaler.
SsaeModel make_model(const SsaeHyper& hyper, const ScalerStats& scaler);

// Gradient (or any other parameter-shaped quantity) of an SsaeModel.
struct SsaeGrads {
    Seq2SeqParams short_branch;
    Seq2SeqParams seasonal_branch;
    double combo_a = 0.0;
    double combo_b = 0.0;
    bool has_seasonal = false;
    bool linear = false;
};

SsaeGrads zero_grads(const SsaeModel& model);

struct SsaeMasks {
    BranchMasks short_branch;
    BranchMasks seasonal_branch;
};

struct SsaeTrace {
    Seq2SeqTrace short_trace;
    Seq2SeqTrace seasonal_trace;
    Vector g_short;
    Vector g_seasonal;
};

struct SsaeOutput {
    Vector forecast;
    Vector g_short;
    Vector g_seasonal;  // empty for the standalone variants
    SsaeTrace trace;
};

// Per-sequence masks reuse one mask for every step of a branch; per-step
// masks draw a fresh one for each encoder and decoder step.
enum class MaskMode { per_sequence, per_step };

std::string_view to_string(MaskMode m);
MaskMode parse_mask_mode(std::string_view name);

// Dropout masks on every LSTM hidden output of both branches.
SsaeMasks sample_masks(const SsaeModel& model, double p, SplitMix64& rng, MaskMode mode = MaskMode::per_sequence);

// `window` is a scaled T x d input window.
SsaeOutput ssae_forward(const SsaeModel& model, ConstMatrixView window, const SsaeMasks* masks = nullptr);

// Adds the gradient of a loss with dL/dforecast = `grad` into `acc`.
void ssae_backward(const SsaeModel& model, const SsaeTrace& trace, std::span<const double> grad, SsaeGrads& acc);
SsaeGrads ssae_backward(const SsaeModel& model, const SsaeTrace& trace, std::span<const double> grad);

std::size_t ssae_count_parameters(const SsaeModel& model);

// Raw (unscaled) T x d window in model input-column order -> forecast in mm.
struct PredictOptions {
    bool clamp_nonneg = false;
};
Vector predict_mm(const SsaeModel& model, ConstMatrixView raw_window, PredictOptions opts = {});

// Pooled seasonal input for a scaled window (P x |seasonal features|).
Matrix seasonal_input(const SsaeModel& model, ConstMatrixView window);

// Every trainable tensor, in a fixed order shared by models and gradients.
std::vector<TensorRef> model_tensors(SsaeModel& model);
std::vector<ConstTensorRef> model_tensors(const SsaeModel& model);
std::vector<TensorRef> grad_tensors(SsaeGrads& grads);

}  // namespace ssae
