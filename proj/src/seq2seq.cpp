#include "ssae/seq2seq.hpp"

#include <cmath>

#include "ssae/errors.hpp"
#include "ssae/kernels.hpp"

namespace ssae {

std::string_view to_string(S2SVariant v) { return v == S2SVariant::s2s1 ? "s2s1" : "s2s2"; }

S2SVariant parse_s2s_variant(std::string_view name) {
    if (name == "s2s1") return S2SVariant::s2s1;
    if (name == "s2s2") return S2SVariant::s2s2;
    throw ContractError("unknown seq2seq variant '" + std::string(name) + "'");
}

Seq2SeqParams Seq2SeqParams::zeros(const Seq2SeqShape& shape) {
    require(shape.horizon >= 1, "seq2seq horizon must be at least 1");
    require(!shape.bridge || shape.variant == S2SVariant::s2s1, "bridge layer exists only in S2S1");
    Seq2SeqParams p;
    p.variant = shape.variant;
    p.feed_encoder_state = shape.feed_encoder_state;
    const std::size_t h = shape.hidden_dim;
    p.encoder = LstmParams::zeros(shape.input_dim, h, shape.enc_activation);
    if (shape.variant == S2SVariant::s2s2) {
        for (std::size_t k = 0; k < shape.horizon; ++k) {
            p.decoder_steps.push_back(LstmParams::zeros(h + 1, h, shape.dec_activation));
        }
    } else {
        p.decoder_steps.push_back(LstmParams::zeros(h, h, shape.dec_activation));
    }
    p.head = DenseParams::zeros(shape.horizon, h, shape.head_bias);
    if (shape.bridge) p.bridge = DenseParams::zeros(h, h, true);
    return p;
}

Seq2SeqShape Seq2SeqParams::shape() const {
    Seq2SeqShape s;
    s.variant = variant;
    s.input_dim = input_dim();
    s.hidden_dim = hidden_dim();
    s.horizon = horizon();
    s.enc_activation = encoder.act;
    s.dec_activation = decoder_steps.front().act;
    s.feed_encoder_state = feed_encoder_state;
    s.head_bias = head.has_bias();
    s.bridge = bridge.has_value();
    return s;
}

EncodeResult encode(const Seq2SeqParams& params, ConstMatrixView xs, const BranchMasks* masks) {
    require(xs.cols == params.input_dim(), "encode: input has " + std::to_string(xs.cols) + " columns, expected " +
                                               std::to_string(params.input_dim()));
    std::span<const Vector> enc_masks;
    if (masks && !masks->encoder.empty()) enc_masks = masks->encoder;
    auto fwd = lstm_forward(params.encoder, xs, LstmState::zeros(params.hidden_dim()), enc_masks);

    EncodeResult out;
    out.final_state = std::move(fwd.states.back());
    out.caches = std::move(fwd.caches);
    if (params.bridge) {
        out.context = dense_forward(*params.bridge, out.final_state.h);
        for (auto& v : out.context) v = std::tanh(v);
    } else {
        out.context = out.final_state.h;
    }
    return out;
}

DecodeResult decode(const Seq2SeqParams& params, std::span<const double> context, const LstmState& enc_final,
                    const BranchMasks* masks) {
    const std::size_t h = params.hidden_dim();
    const std::size_t horizon = params.horizon();
    require(context.size() == h, "decode: context size mismatch");
    require(!masks || masks->decoder.empty() || masks->decoder.size() == horizon, "decode: need one mask per step");

    DecodeResult out;
    out.forecasts.assign(horizon, 0.0);
    out.hiddens.reserve(horizon);
    out.caches.reserve(horizon);

    LstmState state = params.feed_encoder_state ? enc_final : LstmState::zeros(h);
    Vector input(params.variant == S2SVariant::s2s2 ? h + 1 : h, 0.0);
    std::copy(context.begin(), context.end(), input.begin());
    double previous = 0.0;
    for (std::size_t k = 0; k < horizon; ++k) {
        if (params.variant == S2SVariant::s2s2) input[h] = previous;
        std::span<const double> mask;
        if (masks && !masks->decoder.empty()) mask = masks->decoder[k];
        auto step = lstm_step(params.decoder(k), input, state, mask);
        double y = params.head.has_bias() ? params.head.b[k] : 0.0;
        y += kernels::dot(params.head.W.row(k), step.state.h);
        out.forecasts[k] = y;
        previous = y;
        out.hiddens.push_back(step.state.h);
        out.caches.push_back(std::move(step.cache));
        state = std::move(step.state);
    }
    return out;
}

Seq2SeqOutput s2s_forward(const Seq2SeqParams& params, ConstMatrixView xs, const BranchMasks* masks) {
    auto enc = encode(params, xs, masks);
    auto dec = decode(params, enc.context, enc.final_state, masks);
    Seq2SeqOutput out;
    out.forecasts = dec.forecasts;
    out.trace.encoder = std::move(enc.caches);
    out.trace.encoder_h = std::move(enc.final_state.h);
    out.trace.context = std::move(enc.context);
    out.trace.decoder = std::move(dec.caches);
    out.trace.decoder_h = std::move(dec.hiddens);
    out.trace.forecasts = std::move(dec.forecasts);
    return out;
}

void s2s_backward(const Seq2SeqParams& params, const Seq2SeqTrace& trace, std::span<const double> grad_forecasts,
                  Seq2SeqParams& grads) {
    const std::size_t h = params.hidden_dim();
    const std::size_t horizon = params.horizon();
    require(grad_forecasts.size() == horizon, "s2s_backward: gradient length must equal the horizon");
    require(trace.decoder.size() == horizon && trace.decoder_h.size() == horizon, "s2s_backward: trace mismatch");
    require(grads.decoder_steps.size() == params.decoder_steps.size() && grads.horizon() == horizon &&
                grads.bridge.has_value() == params.bridge.has_value(),
            "s2s_backward: gradient accumulator shape mismatch");

    Vector d_context(h, 0.0);
    Vector dh_next(h, 0.0);
    Vector dc_next(h, 0.0);
    double d_feedback = 0.0;  // dL/d(forecast k) through step k+1's input

    for (std::size_t k = horizon; k-- > 0;) {
        const double gy = grad_forecasts[k] + d_feedback;
        kernels::axpy(gy, trace.decoder_h[k], grads.head.W.row(k));
        if (params.head.has_bias()) grads.head.b[k] += gy;

        Vector dh = dh_next;
        kernels::axpy(gy, params.head.W.row(k), dh);
        LstmParams& acc = grads.decoder_steps.size() == 1 ? grads.decoder_steps[0] : grads.decoder_steps[k];
        auto step = lstm_step_backward(params.decoder(k), trace.decoder[k], dh, dc_next, acc);
        kernels::axpy(1.0, std::span<const double>(step.x).first(h), d_context);
        d_feedback = params.variant == S2SVariant::s2s2 ? step.x[h] : 0.0;
        dh_next = std::move(step.h_prev);
        dc_next = std::move(step.c_prev);
    }

    // Gradients reaching the encoder's final hidden and cell state.
    Vector dh_enc(h, 0.0);
    Vector dc_enc(h, 0.0);
    if (params.feed_encoder_state) {
        dh_enc = std::move(dh_next);
        dc_enc = std::move(dc_next);
    }
    if (params.bridge) {
        Vector dpre(h);
        for (std::size_t i = 0; i < h; ++i) dpre[i] = d_context[i] * (1.0 - trace.context[i] * trace.context[i]);
        kernels::ger(1.0, dpre, trace.encoder_h, grads.bridge->W);
        kernels::axpy(1.0, dpre, grads.bridge->b);
        kernels::gemv_t(params.bridge->W, dpre, dh_enc);
    } else {
        kernels::axpy(1.0, d_context, dh_enc);
    }

    // Only the last encoder output leaves the encoder.
    Vector dh = std::move(dh_enc);
    Vector dc = std::move(dc_enc);
    for (std::size_t t = trace.encoder.size(); t-- > 0;) {
        auto step = lstm_step_backward(params.encoder, trace.encoder[t], dh, dc, grads.encoder);
        dh = std::move(step.h_prev);
        dc = std::move(step.c_prev);
    }
}

Seq2SeqParams s2s_backward(const Seq2SeqParams& params, const Seq2SeqTrace& trace, std::span<const double> grad_forecasts) {
    Seq2SeqParams grads = Seq2SeqParams::zeros(params.shape());
    s2s_backward(params, trace, grad_forecasts, grads);
    return grads;
}

std::size_t count_parameters(const Seq2SeqParams& params) {
    std::size_t total = params.encoder.parameter_count() + params.head.parameter_count();
    for (const auto& step : params.decoder_steps) total += step.parameter_count();
    if (params.bridge) total += params.bridge->parameter_count();
    return total;
}

}  // namespace ssae
