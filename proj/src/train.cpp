#include "ssae/train.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ssae/errors.hpp"

namespace ssae {

std::string_view to_string(LossKind k) { return k == LossKind::mse ? "mse" : "quantile"; }

LossKind parse_loss(std::string_view name) {
    if (name == "mse") return LossKind::mse;
    if (name == "quantile") return LossKind::quantile;
    throw DataError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::radam: return "radam";
        case OptimizerKind::sgd: return "sgd";
    }
    return "radam";
}

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "radam") return OptimizerKind::radam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw DataError("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw DataError("epochs must be at least 1");
    if (batch_size < 1) throw DataError("batch size must be at least 1");
    if (!(lr > 0.0)) throw DataError("learning rate must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) throw DataError("decay rate must be in (0, 1]");
    if (!(quantile >= 0.0 && quantile <= 1.0)) throw DataError("quantile level must be in [0, 1]");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("dropout probability must be in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw DataError("betas must be in [0, 1)");
    if (!(eps > 0.0)) throw DataError("optimizer epsilon must be positive");
}

// ---------------------------------------------------------------------------
// Losses

LossResult mse_loss(std::span<const double> pred, std::span<const double> actual) {
    require(pred.size() == actual.size() && !pred.empty(), "mse_loss: length mismatch");
    const double n = static_cast<double>(pred.size());
    LossResult out;
    out.grad.resize(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double r = pred[k] - actual[k];
        out.loss += r * r;
        out.grad[k] = 2.0 * r / n;
    }
    out.loss /= n;
    return out;
}

LossResult quantile_loss(std::span<const double> pred, std::span<const double> actual, double r) {
    require(pred.size() == actual.size() && !pred.empty(), "quantile_loss: length mismatch");
    require(r >= 0.0 && r <= 1.0, "quantile_loss: level must be in [0, 1]");
    const double n = static_cast<double>(pred.size());
    LossResult out;
    out.grad.resize(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double under = actual[k] - pred[k];
        if (under > 0.0) {
            out.loss += r * under;
            out.grad[k] = -r / n;
        } else if (under < 0.0) {
            out.loss += (1.0 - r) * (-under);
            out.grad[k] = (1.0 - r) / n;
        } else {
            out.grad[k] = 0.0;
        }
    }
    out.loss /= n;
    return out;
}

// ---------------------------------------------------------------------------
// Initialization

Matrix glorot_normal(std::size_t rows, std::size_t cols, SplitMix64& rng) {
    // Dividing by the std of a unit normal truncated at +-2 keeps the variance
    // after truncation at 2 / (rows + cols).
    const double sigma = std::sqrt(2.0 / static_cast<double>(rows + cols)) / kTruncatedNormalStd;
    Matrix w(rows, cols);
    for (auto& v : w.flat()) {
        double z = rng.normal();
        while (std::abs(z) > 2.0) z = rng.normal();
        v = sigma * z;
    }
    return w;
}

namespace {

void init_lstm(LstmParams& p, SplitMix64& rng) {
    for (std::size_t g = 0; g < 4; ++g) {
        p.U[g] = glorot_normal(p.hidden_dim, p.input_dim, rng);
        p.W[g] = glorot_normal(p.hidden_dim, p.hidden_dim, rng);
        std::fill(p.b[g].begin(), p.b[g].end(), 0.0);
    }
}

void init_dense(DenseParams& p, SplitMix64& rng) {
    p.W = glorot_normal(p.W.rows(), p.W.cols(), rng);
    std::fill(p.b.begin(), p.b.end(), 0.0);
}

}  // namespace

void initialize(Seq2SeqParams& params, SplitMix64& rng) {
    init_lstm(params.encoder, rng);
    for (auto& step : params.decoder_steps) init_lstm(step, rng);
    if (params.bridge) init_dense(*params.bridge, rng);
    init_dense(params.head, rng);
}

void initialize(SsaeModel& model, SplitMix64& rng) {
    initialize(model.short_branch, rng);
    if (model.has_seasonal()) initialize(model.seasonal_branch, rng);
    model.combo_a = 1.0;
    model.combo_b = 1.0;
}

// ---------------------------------------------------------------------------
// Optimizers

OptState OptState::for_params(std::span<const TensorRef> params) {
    OptState s;
    for (const auto& t : params) s.tensors.push_back({Vector(t.data.size(), 0.0), Vector(t.data.size(), 0.0), 0});
    return s;
}

namespace {

void check_shapes(const OptState& state, std::span<const TensorRef> params, std::span<const TensorRef> grads) {
    require(params.size() == grads.size() && state.tensors.size() == params.size(), "optimizer: tensor count mismatch");
    for (std::size_t t = 0; t < params.size(); ++t) {
        require(params[t].data.size() == grads[t].data.size() && state.tensors[t].first.size() == params[t].data.size(),
                "optimizer: shape mismatch for " + params[t].name);
    }
}

// Shared Adam/RAdam update; `rectified` selects the RAdam rule.
void adaptive_step(OptState& state, std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr,
                   const OptimizerHyper& hyper, bool rectified) {
    check_shapes(state, params, grads);
    const double b1 = hyper.beta1;
    const double b2 = hyper.beta2;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Moments& m = state.tensors[t];
        const std::uint64_t k = ++m.steps;
        const double kd = static_cast<double>(k);
        const double c1 = 1.0 - std::pow(b1, kd);
        const double c2 = 1.0 - std::pow(b2, kd);
        std::optional<double> rect;
        if (rectified) rect = radam_rectifier(k, b2);
        auto w = params[t].data;
        auto g = grads[t].data;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m.first[i] = b1 * m.first[i] + (1.0 - b1) * g[i];
            m.second[i] = b2 * m.second[i] + (1.0 - b2) * g[i] * g[i];
            const double r_hat = m.first[i] / c1;
            if (rectified && !rect) {
                w[i] -= lr * r_hat;
                continue;
            }
            const double s_hat = m.second[i] / c2;
            const double step = lr * r_hat / (std::sqrt(s_hat) + hyper.eps);
            w[i] -= rectified ? *rect * step : step;
        }
    }
}

}  // namespace

void adam_step(OptState& state, std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr,
               const OptimizerHyper& hyper) {
    adaptive_step(state, params, grads, lr, hyper, false);
}

void radam_step(OptState& state, std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr,
                const OptimizerHyper& hyper) {
    adaptive_step(state, params, grads, lr, hyper, true);
}

void sgd_step(std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr) {
    require(params.size() == grads.size(), "sgd_step: tensor count mismatch");
    for (std::size_t t = 0; t < params.size(); ++t) {
        require(params[t].data.size() == grads[t].data.size(), "sgd_step: shape mismatch for " + params[t].name);
        for (std::size_t i = 0; i < params[t].data.size(); ++i) params[t].data[i] -= lr * grads[t].data[i];
    }
}

double radam_rho_inf(double beta2) { return 2.0 / (1.0 - beta2) - 1.0; }

double radam_rho(std::uint64_t k, double beta2) {
    const double kd = static_cast<double>(k);
    const double b2k = std::pow(beta2, kd);
    return radam_rho_inf(beta2) - 2.0 * kd * b2k / (1.0 - b2k);
}

std::optional<double> radam_rectifier(std::uint64_t k, double beta2) {
    const double rho = radam_rho(k, beta2);
    if (!(rho > 4.0)) return std::nullopt;
    const double inf = radam_rho_inf(beta2);
    return std::sqrt((rho - 4.0) * (rho - 2.0) * inf / ((inf - 4.0) * (inf - 2.0) * rho));
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
    return cfg.lr * std::pow(cfg.decay, static_cast<double>(epoch));
}

// ---------------------------------------------------------------------------
// Training loop

double mean_mse(const SsaeModel& model, const WindowSet& windows) {
    if (windows.empty()) return NAN;
    double total = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        total += mse_loss(ssae_forward(model, windows.input(i)).forecast, windows.target(i)).loss;
    }
    return total / static_cast<double>(windows.size());
}

LossResult training_loss(const TrainConfig& cfg, std::span<const double> pred, std::span<const double> actual) {
    return cfg.loss == LossKind::mse ? mse_loss(pred, actual) : quantile_loss(pred, actual, cfg.quantile);
}

double mean_loss(const SsaeModel& model, const WindowSet& windows, const TrainConfig& cfg) {
    if (windows.empty()) return NAN;
    double total = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        total += training_loss(cfg, ssae_forward(model, windows.input(i)).forecast, windows.target(i)).loss;
    }
    return total / static_cast<double>(windows.size());
}

namespace {

void zero(std::vector<TensorRef>& tensors) {
    for (auto& t : tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
}

void check_windows(const SsaeModel& model, const WindowSet& windows, const char* which) {
    if (windows.empty()) return;
    if (windows.lookback() != model.hyper.lookback || windows.horizon() != model.hyper.horizon) {
        throw DataError(std::string(which) + " windows have T=" + std::to_string(windows.lookback()) + ", H=" +
                        std::to_string(windows.horizon()) + "; model expects T=" +
                        std::to_string(model.hyper.lookback) + ", H=" + std::to_string(model.hyper.horizon));
    }
    if (windows.input_dim() != model.input_dim()) throw DataError(std::string(which) + " windows have the wrong width");
}

}  // namespace

FitResult fit(SsaeModel model, const WindowSet& train, const WindowSet& val, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.empty()) throw DataError("training set is empty");
    check_windows(model, train, "training");
    check_windows(model, val, "validation");

    SplitMix64 shuffle_rng(derive_seed(cfg.seed, 2));
    SplitMix64 dropout_rng(derive_seed(cfg.seed, 3));

    auto params = model_tensors(model);
    SsaeGrads grads = zero_grads(model);
    auto grad_refs = grad_tensors(grads);
    OptState opt = OptState::for_params(params);
    const OptimizerHyper hyper{cfg.beta1, cfg.beta2, cfg.eps};
    const bool early_stopping = cfg.patience > 0 && !val.empty();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    FitResult result;
    std::optional<SsaeModel> best;
    double best_val = NAN;
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(std::span<std::size_t>(order), shuffle_rng);
        const double lr = lr_at_epoch(cfg, epoch);
        double epoch_loss = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            zero(grad_refs);
            double batch_loss = 0.0;
            for (std::size_t pos = start; pos < end; ++pos) {
                const std::size_t i = order[pos];
                std::optional<SsaeMasks> masks;
                if (cfg.dropout > 0.0) masks = sample_masks(model, cfg.dropout, dropout_rng, cfg.mask_mode);
                auto out = ssae_forward(model, train.input(i), masks ? &*masks : nullptr);
                const auto loss = training_loss(cfg, out.forecast, train.target(i));
                if (!std::isfinite(loss.loss)) {
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                       std::to_string(batches + 1) + " (window " + train.anchor_date(i).iso() + ")");
                }
                batch_loss += loss.loss;
                ssae_backward(model, out.trace, loss.grad, grads);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& t : grad_refs) {
                for (auto& g : t.data) {
                    g *= inv;
                    if (!std::isfinite(g)) {
                        throw NumericError("non-finite gradient in " + t.name + " at epoch " +
                                           std::to_string(epoch + 1) + ", batch " + std::to_string(batches + 1));
                    }
                }
            }
            switch (cfg.optimizer) {
                case OptimizerKind::adam: adam_step(opt, params, grad_refs, lr, hyper); break;
                case OptimizerKind::radam: radam_step(opt, params, grad_refs, lr, hyper); break;
                case OptimizerKind::sgd: sgd_step(params, grad_refs, lr); break;
            }
            epoch_loss += batch_loss;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = epoch_loss / static_cast<double>(train.size());
        rec.lr = lr;
        rec.batches = batches;
        if (!val.empty()) {
            rec.val_mse = mean_mse(model, val);
            rec.val_loss = cfg.loss == LossKind::mse ? rec.val_mse : mean_loss(model, val, cfg);
            if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.val_mse)) {
                throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
            }
            if (std::isnan(best_val) || rec.val_loss < best_val) {
                best_val = rec.val_loss;
                result.history.best_epoch = rec.epoch;
                since_best = 0;
                if (early_stopping) best = model;
            } else {
                ++since_best;
            }
            rec.best_val_loss = best_val;
        }
        result.history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (early_stopping && since_best >= cfg.patience) {
            result.history.stopped_early = true;
            break;
        }
    }

    result.model = best ? std::move(*best) : std::move(model);
    return result;
}

}  // namespace ssae
