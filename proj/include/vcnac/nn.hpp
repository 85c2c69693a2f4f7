#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vcnac/tensor.hpp"

namespace vcnac::nn {

struct Conv1dOptions {
    std::size_t stride = 1;
    std::size_t dilation = 1;
    std::size_t pad_left = 0;
    std::size_t pad_right = 0;
};

// Padding that maps T to ceil(T / stride) for a stride-s kernel of size K
// (exactly T/s when T is a multiple of s and K >= s).
Conv1dOptions same_by_stride(std::size_t kernel, std::size_t stride, std::size_t dilation = 1);

// input [C_in x T], kernel [C_out x C_in x K], bias [C_out] or empty.
// Cross-correlation; T_out = floor((T + pl + pr - dilation*(K-1) - 1) / stride) + 1.
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Conv1dOptions& opt);

// input [C_in x T], kernel [C_in x C_out x K] (the layout of the forward conv it
// transposes). Full output has (T-1)*stride + K samples; trim_left/trim_right
// drop samples from each end.
Tensor conv1d_transposed(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
                         std::size_t trim_left = 0, std::size_t trim_right = 0);

// Trim that yields exactly T * stride output samples for K = 2 * stride.
struct TransposedTrim {
    std::size_t left = 0;
    std::size_t right = 0;
};
TransposedTrim transposed_trim_for(std::size_t kernel, std::size_t stride);

// y = x + sin^2(alpha_c * x) / alpha_c per channel row of a [C x T] tensor.
void snake_inplace(Tensor& x, std::span<const float> alpha);
Tensor snake(const Tensor& x, std::span<const float> alpha);
void elu_inplace(Tensor& x);

// [T x D] row-wise layer normalisation with gain and bias.
void layer_norm_rows(Tensor& x, std::span<const float> gain, std::span<const float> bias, float eps = 1e-5f);

// y = x W^T + b for x [N x D_in], W [D_out x D_in].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Transposes a rank-2 tensor.
Tensor transpose(const Tensor& x);

struct AttentionSpec {
    std::size_t heads = 4;
    std::size_t temporal_window = 2;
    std::size_t layers = 1;
    std::size_t ffn_mult = 2;
    double rope_base = 10000.0;
};

// One pre-norm attention layer plus feed-forward sublayer, each with a residual.
struct AttentionWeights {
    Tensor ln1_gain, ln1_bias;
    Tensor q_w, q_b, k_w, k_b, v_w, v_b, o_w, o_b;
    Tensor ln2_gain, ln2_bias;
    Tensor ff1_w, ff1_b, ff2_w, ff2_b;
};

// A channel stream taking part in attention. slot is the channel identity
// (embedding index); it fixes the canonical key order so that results do not
// depend on the order in which streams are passed.
struct AttentionStream {
    Tensor tokens;  // [T x D]
    std::size_t slot = 0;
    bool active = true;
};

// Rotary position embedding on the temporal index, applied per head to a [T x D] tensor.
void apply_rotary(Tensor& x, std::size_t heads, double base);

// Tokens from all active streams are interleaved in time; token (t, c) attends to
// every active (t', c') with |t - t'| <= temporal_window. Inactive streams are
// returned unchanged and contribute no keys.
std::vector<AttentionStream> interleaved_window_attention(std::vector<AttentionStream> streams,
                                                          const AttentionSpec& spec,
                                                          std::span<const AttentionWeights> layers);

}  // namespace vcnac::nn
