#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssae/nnkernel.hpp"
#include "ssae/tensor.hpp"

namespace ssae {

// S2S1: one decoder LSTM shared by every horizon step, fed the context only.
// S2S2: an independent decoder LSTM per step, fed [context ; previous forecast].
enum class S2SVariant { s2s1, s2s2 };

std::string_view to_string(S2SVariant v);
S2SVariant parse_s2s_variant(std::string_view name);

struct Seq2SeqShape {
    S2SVariant variant = S2SVariant::s2s2;
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 1;
    std::size_t horizon = 1;
    Activation enc_activation = Activation::tanh;
    Activation dec_activation = Activation::relu;
    bool feed_encoder_state = false;
    bool head_bias = true;
    bool bridge = false;  // S2S1 only: hidden -> hidden tanh layer after the encoder
};

struct Seq2SeqParams {
    S2SVariant variant = S2SVariant::s2s2;
    bool feed_encoder_state = false;
    LstmParams encoder;
    std::vector<LstmParams> decoder_steps;  // H entries for S2S2, one for S2S1
    DenseParams head;                       // H x hidden; row k produces forecast k
    std::optional<DenseParams> bridge;

    // All-zero parameters of the requested shape.
    static Seq2SeqParams zeros(const Seq2SeqShape& shape);

    std::size_t input_dim() const { return encoder.input_dim; }
    std::size_t hidden_dim() const { return encoder.hidden_dim; }
    std::size_t horizon() const { return head.W.rows(); }
    const LstmParams& decoder(std::size_t k) const { return decoder_steps.size() == 1 ? decoder_steps[0] : decoder_steps[k]; }
    Seq2SeqShape shape() const;
};

// Dropout masks on LSTM hidden outputs: one per encoder step and one per
// decoder step. Empty vectors disable dropout for that half.
struct BranchMasks {
    std::vector<Vector> encoder;
    std::vector<Vector> decoder;
};

struct Seq2SeqTrace {
    std::vector<StepCache> encoder;
    Vector encoder_h;  // h_T before the bridge
    Vector context;
    std::vector<StepCache> decoder;
    std::vector<Vector> decoder_h;
    Vector forecasts;
};

struct EncodeResult {
    Vector context;
    LstmState final_state;
    std::vector<StepCache> caches;
};

EncodeResult encode(const Seq2SeqParams& params, ConstMatrixView xs, const BranchMasks* masks = nullptr);

struct DecodeResult {
    std::vector<Vector> hiddens;
    Vector forecasts;
    std::vector<StepCache> caches;
};

DecodeResult decode(const Seq2SeqParams& params, std::span<const double> context, const LstmState& enc_final,
                    const BranchMasks* masks = nullptr);

struct Seq2SeqOutput {
    Vector forecasts;
    Seq2SeqTrace trace;
};

Seq2SeqOutput s2s_forward(const Seq2SeqParams& params, ConstMatrixView xs, const BranchMasks* masks = nullptr);

// Adds the parameter gradients into `grads`, which has the layout of `params`.
void s2s_backward(const Seq2SeqParams& params, const Seq2SeqTrace& trace, std::span<const double> grad_forecasts,
                  Seq2SeqParams& grads);
// Gradients with the same layout as `params`.
Seq2SeqParams s2s_backward(const Seq2SeqParams& params, const Seq2SeqTrace& trace, std::span<const double> grad_forecasts);

std::size_t count_parameters(const Seq2SeqParams& params);

// Encoder, decoder steps, bridge, head; names are prefixed with `prefix`.
template <class P>
void collect_tensors(P& p, const std::string& prefix, std::vector<TensorRefT<detail::Elem<P>>>& out)
    requires std::is_same_v<std::remove_const_t<P>, Seq2SeqParams>
{
    collect_tensors(p.encoder, prefix + "encoder.", out);
    for (std::size_t k = 0; k < p.decoder_steps.size(); ++k) {
        collect_tensors(p.decoder_steps[k], prefix + "decoder" + std::to_string(k) + ".", out);
    }
    if (p.bridge) collect_tensors(*p.bridge, prefix + "bridge.", out);
    collect_tensors(p.head, prefix + "head.", out);
}

}  // namespace ssae
