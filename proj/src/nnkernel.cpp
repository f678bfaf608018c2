#include "ssae/nnkernel.hpp"

#include <cmath>

#include "ssae/errors.hpp"
#include "ssae/kernels.hpp"

namespace ssae {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double activate(Activation act, double z) {
    return act == Activation::tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// Derivative expressed through the pre-activation z and the output a = phi(z).
// ReLU'(0) is taken as 0.
double activate_grad(Activation act, double z, double a) {
    return act == Activation::tanh ? 1.0 - a * a : (z > 0.0 ? 1.0 : 0.0);
}

}  // namespace

std::string_view to_string(Activation act) { return act == Activation::tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw ContractError("unknown activation '" + std::string(name) + "'");
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim, Activation act) {
    require(input_dim >= 1 && hidden_dim >= 1, "LSTM dimensions must be positive");
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.act = act;
    for (std::size_t g = 0; g < 4; ++g) {
        p.U[g] = Matrix(hidden_dim, input_dim);
        p.W[g] = Matrix(hidden_dim, hidden_dim);
        p.b[g] = Vector(hidden_dim, 0.0);
    }
    return p;
}

StepResult lstm_step(const LstmParams& params, std::span<const double> x, const LstmState& prev,
                     std::span<const double> mask) {
    const std::size_t h = params.hidden_dim;
    require(x.size() == params.input_dim, "lstm_step: input has " + std::to_string(x.size()) + " entries, expected " +
                                              std::to_string(params.input_dim));
    require(prev.h.size() == h && prev.c.size() == h, "lstm_step: state size mismatch");
    require(mask.empty() || mask.size() == h, "lstm_step: mask size mismatch");

    StepResult out;
    StepCache& cache = out.cache;
    cache.x.assign(x.begin(), x.end());
    cache.h_prev = prev.h;
    cache.c_prev = prev.c;
    for (std::size_t g = 0; g < 4; ++g) {
        Vector& pre = cache.pre[g];
        pre = params.b[g];
        kernels::gemv(params.U[g], x, pre);
        kernels::gemv(params.W[g], prev.h, pre);
        Vector& a = cache.gate[g];
        a.resize(h);
        if (g == kCandidate) {
            for (std::size_t k = 0; k < h; ++k) a[k] = activate(params.act, pre[k]);
        } else {
            for (std::size_t k = 0; k < h; ++k) a[k] = sigmoid(pre[k]);
        }
    }
    const Vector& f = cache.gate[kForget];
    const Vector& in = cache.gate[kInput];
    const Vector& o = cache.gate[kOutput];
    const Vector& cand = cache.gate[kCandidate];

    cache.c.resize(h);
    cache.phi_c.resize(h);
    out.state.h.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        cache.c[k] = f[k] * prev.c[k] + in[k] * cand[k];
        cache.phi_c[k] = activate(params.act, cache.c[k]);
        out.state.h[k] = o[k] * cache.phi_c[k];
    }
    if (!mask.empty()) {
        cache.mask.assign(mask.begin(), mask.end());
        for (std::size_t k = 0; k < h; ++k) out.state.h[k] *= mask[k];
    }
    out.state.c = cache.c;
    return out;
}

ForwardResult lstm_forward(const LstmParams& params, ConstMatrixView xs, const LstmState& init,
                           std::span<const Vector> masks) {
    require(xs.rows >= 1, "lstm_forward: empty input sequence");
    require(masks.empty() || masks.size() == xs.rows, "lstm_forward: need one mask per step");
    ForwardResult out;
    out.states.reserve(xs.rows);
    out.caches.reserve(xs.rows);
    const LstmState* prev = &init;
    for (std::size_t t = 0; t < xs.rows; ++t) {
        auto step = lstm_step(params, xs.row(t), *prev, masks.empty() ? std::span<const double>{} : masks[t]);
        out.states.push_back(std::move(step.state));
        out.caches.push_back(std::move(step.cache));
        prev = &out.states.back();
    }
    return out;
}

StepGrads lstm_step_backward(const LstmParams& params, const StepCache& cache, std::span<const double> grad_h,
                             std::span<const double> grad_c, LstmParams& acc) {
    const std::size_t h = params.hidden_dim;
    require(grad_h.size() == h && grad_c.size() == h, "lstm_step_backward: gradient size mismatch");
    require(acc.hidden_dim == h && acc.input_dim == params.input_dim, "lstm_step_backward: accumulator shape");

    const Vector& f = cache.gate[kForget];
    const Vector& in = cache.gate[kInput];
    const Vector& o = cache.gate[kOutput];
    const Vector& cand = cache.gate[kCandidate];

    std::array<Vector, 4> dpre;
    for (auto& v : dpre) v.assign(h, 0.0);
    StepGrads out;
    out.c_prev.assign(h, 0.0);
    for (std::size_t k = 0; k < h; ++k) {
        const double dh = cache.mask.empty() ? grad_h[k] : grad_h[k] * cache.mask[k];
        const double d_o = dh * cache.phi_c[k];
        const double dc = grad_c[k] + dh * o[k] * activate_grad(params.act, cache.c[k], cache.phi_c[k]);
        const double df = dc * cache.c_prev[k];
        const double di = dc * cand[k];
        const double dcand = dc * in[k];
        out.c_prev[k] = dc * f[k];
        dpre[kForget][k] = df * f[k] * (1.0 - f[k]);
        dpre[kInput][k] = di * in[k] * (1.0 - in[k]);
        dpre[kOutput][k] = d_o * o[k] * (1.0 - o[k]);
        dpre[kCandidate][k] = dcand * activate_grad(params.act, cache.pre[kCandidate][k], cand[k]);
    }

    out.x.assign(params.input_dim, 0.0);
    out.h_prev.assign(h, 0.0);
    for (std::size_t g = 0; g < 4; ++g) {
        kernels::ger(1.0, dpre[g], cache.x, acc.U[g]);
        kernels::ger(1.0, dpre[g], cache.h_prev, acc.W[g]);
        kernels::axpy(1.0, dpre[g], acc.b[g]);
        kernels::gemv_t(params.U[g], dpre[g], out.x);
        kernels::gemv_t(params.W[g], dpre[g], out.h_prev);
    }
    return out;
}

LstmGrads lstm_backward(const LstmParams& params, std::span<const StepCache> caches, std::span<const Vector> grad_h,
                        std::span<const double> grad_final_c) {
    const std::size_t h = params.hidden_dim;
    require(!caches.empty(), "lstm_backward: no cached steps");
    require(grad_h.size() == caches.size(), "lstm_backward: need one hidden-state gradient per step");
    require(grad_final_c.empty() || grad_final_c.size() == h, "lstm_backward: final cell gradient size");

    LstmGrads out;
    out.params = LstmParams::zeros(params.input_dim, h, params.act);
    out.inputs.resize(caches.size());
    Vector dh_next(h, 0.0);
    Vector dc_next = grad_final_c.empty() ? Vector(h, 0.0) : Vector(grad_final_c.begin(), grad_final_c.end());
    for (std::size_t t = caches.size(); t-- > 0;) {
        require(grad_h[t].size() == h, "lstm_backward: hidden-state gradient size");
        Vector dh = grad_h[t];
        kernels::axpy(1.0, dh_next, dh);
        auto step = lstm_step_backward(params, caches[t], dh, dc_next, out.params);
        out.inputs[t] = std::move(step.x);
        dh_next = std::move(step.h_prev);
        dc_next = std::move(step.c_prev);
    }
    out.init = {std::move(dh_next), std::move(dc_next)};
    return out;
}

DenseParams DenseParams::zeros(std::size_t out, std::size_t in, bool bias) {
    DenseParams p;
    p.W = Matrix(out, in);
    if (bias) p.b.assign(out, 0.0);
    return p;
}

Vector dense_forward(const DenseParams& params, std::span<const double> x) {
    require(x.size() == params.W.cols(), "dense_forward: input size mismatch");
    Vector y = params.has_bias() ? params.b : Vector(params.W.rows(), 0.0);
    kernels::gemv(params.W, x, y);
    return y;
}

DenseGrads dense_backward(const DenseParams& params, std::span<const double> x, std::span<const double> grad_y) {
    require(x.size() == params.W.cols() && grad_y.size() == params.W.rows(), "dense_backward: shape mismatch");
    DenseGrads out;
    out.params = DenseParams::zeros(params.W.rows(), params.W.cols(), params.has_bias());
    kernels::ger(1.0, grad_y, x, out.params.W);
    if (params.has_bias()) out.params.b.assign(grad_y.begin(), grad_y.end());
    out.x.assign(x.size(), 0.0);
    kernels::gemv_t(params.W, grad_y, out.x);
    return out;
}

Vector dropout_mask(std::size_t dim, double p, SplitMix64& rng) {
    require(p >= 0.0 && p < 1.0, "dropout probability must be in [0, 1)");
    const double keep = 1.0 / (1.0 - p);
    Vector mask(dim);
    for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep;
    return mask;
}

Vector finite_diff_grad(const std::function<double()>& loss, std::span<double> weights, double eps) {
    Vector grad(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double saved = weights[i];
        weights[i] = saved + eps;
        const double up = loss();
        weights[i] = saved - eps;
        const double down = loss();
        weights[i] = saved;
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

}  // namespace ssae
