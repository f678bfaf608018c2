#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ssae/rng.hpp"
#include "ssae/tensor.hpp"

namespace ssae {

enum class Activation { tanh, relu };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

// Gate order used throughout: forget, input, output, candidate.
enum Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCandidate = 3 };
inline constexpr std::array<std::string_view, 4> kGateNames{"f", "i", "o", "c"};

struct LstmParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Activation act = Activation::tanh;
    std::array<Matrix, 4> U;  // hidden x input
    std::array<Matrix, 4> W;  // hidden x hidden
    std::array<Vector, 4> b;  // hidden

    static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim, Activation act);
    std::size_t parameter_count() const { return 4 * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim); }
};

struct LstmState {
    Vector h;
    Vector c;

    static LstmState zeros(std::size_t hidden_dim) { return {Vector(hidden_dim, 0.0), Vector(hidden_dim, 0.0)}; }
};

// Intermediates of one step, consumed by the backward pass.
struct StepCache {
    Vector x;
    Vector h_prev;
    Vector c_prev;
    std::array<Vector, 4> pre;   // gate pre-activations
    std::array<Vector, 4> gate;  // sigma(pre) for f, i, o; phi(pre) for the candidate
    Vector c;
    Vector phi_c;
    Vector mask;  // dropout mask on h; empty when inactive
};

struct StepResult {
    LstmState state;
    StepCache cache;
};

// One application of the LSTM recurrence. A non-empty `mask` multiplies the
// emitted hidden state elementwise (dropout on h_t).
StepResult lstm_step(const LstmParams& params, std::span<const double> x, const LstmState& prev,
                     std::span<const double> mask = {});

struct ForwardResult {
    std::vector<LstmState> states;
    std::vector<StepCache> caches;
};

// `masks` is empty or holds one mask per step.
ForwardResult lstm_forward(const LstmParams& params, ConstMatrixView xs, const LstmState& init,
                           std::span<const Vector> masks = {});

struct StepGrads {
    Vector x;
    Vector h_prev;
    Vector c_prev;
};

// Reverse-mode pass through one step. `grad_h`/`grad_c` are the total
// gradients arriving at h_t and c_t; parameter gradients accumulate into `acc`.
StepGrads lstm_step_backward(const LstmParams& params, const StepCache& cache, std::span<const double> grad_h,
                             std::span<const double> grad_c, LstmParams& acc);

struct LstmGrads {
    LstmParams params;
    std::vector<Vector> inputs;
    LstmState init;
};

// `grad_h[t]` is dL/dh_t from outside the recurrence; `grad_final_c` is dL/dc_T.
LstmGrads lstm_backward(const LstmParams& params, std::span<const StepCache> caches, std::span<const Vector> grad_h,
                        std::span<const double> grad_final_c);

// y = W x + b. An empty `b` means the layer has no bias.
struct DenseParams {
    Matrix W;
    Vector b;

    static DenseParams zeros(std::size_t out, std::size_t in, bool bias);
    bool has_bias() const { return !b.empty(); }
    std::size_t parameter_count() const { return W.size() + b.size(); }
};

Vector dense_forward(const DenseParams& params, std::span<const double> x);

struct DenseGrads {
    DenseParams params;
    Vector x;
};

DenseGrads dense_backward(const DenseParams& params, std::span<const double> x, std::span<const double> grad_y);

// Inverted dropout: 0 with probability p, otherwise 1/(1-p).
Vector dropout_mask(std::size_t dim, double p, SplitMix64& rng);

// Central differences (L(w+eps) - L(w-eps)) / (2 eps) for every scalar in
// `weights`. `loss` must read the weights through the same storage.
Vector finite_diff_grad(const std::function<double()>& loss, std::span<double> weights, double eps);

// Named view of one parameter tensor, used for optimizers, checkpoints and
// gradient checks. Shape is row-major.
template <class T>
struct TensorRefT {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<T> data;
};
using TensorRef = TensorRefT<double>;
using ConstTensorRef = TensorRefT<const double>;

namespace detail {
template <class P>
using Elem = std::conditional_t<std::is_const_v<P>, const double, double>;
}

// Appends U_g, W_g, b_g for every gate, in gate order.
template <class P>
void collect_tensors(P& p, const std::string& prefix, std::vector<TensorRefT<detail::Elem<P>>>& out)
    requires std::is_same_v<std::remove_const_t<P>, LstmParams>
{
    for (std::size_t g = 0; g < 4; ++g) {
        const std::string gate(kGateNames[g]);
        out.push_back({prefix + "U_" + gate, {p.U[g].rows(), p.U[g].cols()}, p.U[g].flat()});
        out.push_back({prefix + "W_" + gate, {p.W[g].rows(), p.W[g].cols()}, p.W[g].flat()});
        out.push_back({prefix + "b_" + gate, {p.b[g].size()}, std::span<detail::Elem<P>>(p.b[g])});
    }
}

template <class P>
void collect_tensors(P& p, const std::string& prefix, std::vector<TensorRefT<detail::Elem<P>>>& out)
    requires std::is_same_v<std::remove_const_t<P>, DenseParams>
{
    out.push_back({prefix + "W", {p.W.rows(), p.W.cols()}, p.W.flat()});
    if (p.has_bias()) out.push_back({prefix + "b", {p.b.size()}, std::span<detail::Elem<P>>(p.b)});
}

}  // namespace ssae
