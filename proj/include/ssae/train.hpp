#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ssae/dataio.hpp"
#include "ssae/rng.hpp"
#include "ssae/ssae_model.hpp"

namespace ssae {

enum class LossKind { mse, quantile };
enum class OptimizerKind { adam, radam, sgd };

std::string_view to_string(LossKind k);
LossKind parse_loss(std::string_view name);
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 256;
    double lr = 1e-3;
    // Per-epoch multiplicative decay of the learning rate.
    double decay = std::pow(0.955, 1.0 / 30.0);
    LossKind loss = LossKind::mse;
    double quantile = 0.5;
    std::uint64_t seed = 1;
    OptimizerKind optimizer = OptimizerKind::radam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t patience = 10;  // 0 disables early stopping
    double dropout = 0.0;
    MaskMode mask_mode = MaskMode::per_sequence;

    void validate() const;
};

struct LossResult {
    double loss = 0.0;
    Vector grad;
};

// (1/H) sum (yhat - y)^2
LossResult mse_loss(std::span<const double> pred, std::span<const double> actual);
// Pinball loss averaged over the horizon; `r` weights under-prediction.
LossResult quantile_loss(std::span<const double> pred, std::span<const double> actual, double r);

// Standard deviation of N(0, 1) truncated to [-2, 2].
inline constexpr double kTruncatedNormalStd = 0.87962566103423978;

// Glorot normal truncated at two standard deviations (redrawn beyond).
// Variance 2 / (rows + cols) after truncation for a rows x cols weight matrix.
Matrix glorot_normal(std::size_t rows, std::size_t cols, SplitMix64& rng);

// Glorot weights, zero biases, combination weights a = b = 1.
void initialize(SsaeModel& model, SplitMix64& rng);
void initialize(Seq2SeqParams& params, SplitMix64& rng);

struct Moments {
    Vector first;
    Vector second;
    std::uint64_t steps = 0;
};

// Optimizer state; one entry per parameter tensor, shaped like it.
struct OptState {
    std::vector<Moments> tensors;

    static OptState for_params(std::span<const TensorRef> params);
};

struct OptimizerHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(OptState& state, std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr,
               const OptimizerHyper& hyper = {});
void radam_step(OptState& state, std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr,
                const OptimizerHyper& hyper = {});
// Plain w <- w - lr * g.
void sgd_step(std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr);

// Length of the approximated simple moving average at step k (rho_k), and
// its limit rho_inf = 2 / (1 - beta2) - 1.
double radam_rho(std::uint64_t k, double beta2);
double radam_rho_inf(double beta2);
// Variance rectification factor; nullopt when rho_k <= 4 (momentum-only step).
std::optional<double> radam_rectifier(std::uint64_t k, double beta2);

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_mse = NAN;  // NaN without a validation set
    // Training loss on the validation set; equals val_mse for MSE training.
    // Early stopping selects on this.
    double val_loss = NAN;
    double best_val_loss = NAN;
    double lr = 0.0;
    std::size_t batches = 0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::optional<std::size_t> best_epoch;
    bool stopped_early = false;
};

struct FitResult {
    SsaeModel model;
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch training on scaled windows. Deterministic given the config seed.
FitResult fit(SsaeModel model, const WindowSet& train, const WindowSet& val, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

// Mean per-window MSE on scaled targets, no dropout.
double mean_mse(const SsaeModel& model, const WindowSet& windows);

LossResult training_loss(const TrainConfig& cfg, std::span<const double> pred, std::span<const double> actual);
// Mean per-window training loss (MSE or pinball per `cfg`), no dropout.
double mean_loss(const SsaeModel& model, const WindowSet& windows, const TrainConfig& cfg);

}  // namespace ssae
