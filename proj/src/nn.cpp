#include "vcnac/nn.hpp"

#include <algorithm>
#include <cmath>

namespace vcnac::nn {

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw InputError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
    }
}

void require_bias(const Tensor& bias, std::size_t n, const char* what) {
    if (bias.size() != 0 && bias.size() != n) {
        throw InputError(std::string(what) + " bias has " + std::to_string(bias.size()) + " entries, expected " +
                         std::to_string(n));
    }
}

float gelu(float x) { return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f)); }

}  // namespace

Conv1dOptions same_by_stride(std::size_t kernel, std::size_t stride, std::size_t dilation) {
    const std::size_t span = dilation * (kernel - 1) + 1;
    const std::size_t total = span > stride ? span - stride : 0;
    return {stride, dilation, total / 2, total - total / 2};
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Conv1dOptions& opt) {
    require_rank(input, 2, "conv1d input");
    require_rank(kernel, 3, "conv1d kernel");
    const std::size_t c_in = input.dim(0), t_in = input.dim(1);
    const std::size_t c_out = kernel.dim(0), k_size = kernel.dim(2);
    if (kernel.dim(1) != c_in) {
        throw InputError("conv1d kernel " + shape_string(kernel.shape()) + " does not match input " +
                         shape_string(input.shape()));
    }
    require_bias(bias, c_out, "conv1d");
    if (opt.stride == 0 || opt.dilation == 0 || k_size == 0) throw InputError("conv1d stride, dilation and K must be positive");

    const std::size_t padded = t_in + opt.pad_left + opt.pad_right;
    const std::size_t span = opt.dilation * (k_size - 1) + 1;
    if (padded < span) throw InputError("conv1d input shorter than the kernel span");
    const std::size_t t_out = (padded - span) / opt.stride + 1;

    Tensor out({c_out, t_out});
    const auto pl = static_cast<std::ptrdiff_t>(opt.pad_left);
    const auto s = static_cast<std::ptrdiff_t>(opt.stride);
    const auto t_in_s = static_cast<std::ptrdiff_t>(t_in);
    for (std::size_t co = 0; co < c_out; ++co) {
        float* y = out.data().data() + co * t_out;
        if (bias.size()) std::fill(y, y + t_out, bias[co]);
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const float* x = input.data().data() + ci * t_in;
            const float* w = kernel.data().data() + (co * c_in + ci) * k_size;
            for (std::size_t k = 0; k < k_size; ++k) {
                const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k * opt.dilation) - pl;
                // valid t: 0 <= t*s + off < t_in
                std::ptrdiff_t t0 = off >= 0 ? 0 : (-off + s - 1) / s;
                std::ptrdiff_t t1 = off >= t_in_s ? -1 : (t_in_s - 1 - off) / s;
                t1 = std::min<std::ptrdiff_t>(t1, static_cast<std::ptrdiff_t>(t_out) - 1);
                const float wk = w[k];
                if (s == 1) {
                    const float* xs = x + off;
                    for (std::ptrdiff_t t = t0; t <= t1; ++t) y[t] += wk * xs[t];
                } else {
                    for (std::ptrdiff_t t = t0; t <= t1; ++t) y[t] += wk * x[t * s + off];
                }
            }
        }
    }
    return out;
}

TransposedTrim transposed_trim_for(std::size_t kernel, std::size_t stride) {
    const std::size_t total = kernel > stride ? kernel - stride : 0;
    return {total / 2, total - total / 2};
}

Tensor conv1d_transposed(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
                         std::size_t trim_left, std::size_t trim_right) {
    require_rank(input, 2, "conv1d_transposed input");
    require_rank(kernel, 3, "conv1d_transposed kernel");
    const std::size_t c_in = input.dim(0), t_in = input.dim(1);
    const std::size_t c_out = kernel.dim(1), k_size = kernel.dim(2);
    if (kernel.dim(0) != c_in) {
        throw InputError("conv1d_transposed kernel " + shape_string(kernel.shape()) + " does not match input " +
                         shape_string(input.shape()));
    }
    require_bias(bias, c_out, "conv1d_transposed");
    if (stride == 0 || k_size == 0) throw InputError("conv1d_transposed stride and K must be positive");
    if (t_in == 0) throw InputError("conv1d_transposed input is empty");

    const std::size_t full = (t_in - 1) * stride + k_size;
    if (trim_left + trim_right >= full) throw InputError("conv1d_transposed trim removes the whole output");
    const std::size_t t_out = full - trim_left - trim_right;

    Tensor out({c_out, t_out});
    const auto tl = static_cast<std::ptrdiff_t>(trim_left);
    const auto t_out_s = static_cast<std::ptrdiff_t>(t_out);
    for (std::size_t co = 0; co < c_out; ++co) {
        float* y = out.data().data() + co * t_out;
        if (bias.size()) std::fill(y, y + t_out, bias[co]);
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const float* x = input.data().data() + ci * t_in;
            const float* w = kernel.data().data() + (ci * c_out + co) * k_size;
            for (std::size_t t = 0; t < t_in; ++t) {
                const float xv = x[t];
                const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t * stride) - tl;
                const std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(0, -base);
                const std::ptrdiff_t k1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k_size), t_out_s - base);
                for (std::ptrdiff_t k = k0; k < k1; ++k) y[base + k] += xv * w[k];
            }
        }
    }
    return out;
}

void snake_inplace(Tensor& x, std::span<const float> alpha) {
    require_rank(x, 2, "snake input");
    const std::size_t c = x.dim(0), t = x.dim(1);
    if (alpha.size() != c) throw InputError("snake alpha has wrong length");
    for (std::size_t i = 0; i < c; ++i) {
        const float a = alpha[i];
        if (!(a > 0.0f)) throw InputError("snake alpha must be positive");
        const float inv = 1.0f / a;
        float* row = x.data().data() + i * t;
        for (std::size_t j = 0; j < t; ++j) {
            const float s = std::sin(a * row[j]);
            row[j] += inv * s * s;
        }
    }
}

Tensor snake(const Tensor& x, std::span<const float> alpha) {
    Tensor y = x;
    snake_inplace(y, alpha);
    return y;
}

void elu_inplace(Tensor& x) {
    for (auto& v : x.data()) v = v > 0.0f ? v : std::expm1(v);
}

void layer_norm_rows(Tensor& x, std::span<const float> gain, std::span<const float> bias, float eps) {
    require_rank(x, 2, "layer_norm input");
    const std::size_t n = x.dim(0), d = x.dim(1);
    if (gain.size() != d || bias.size() != d) throw InputError("layer_norm parameters have wrong length");
    for (std::size_t r = 0; r < n; ++r) {
        auto row = x.row(r);
        double mean = 0.0;
        for (float v : row) mean += v;
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (float v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = static_cast<float>((row[j] - mean) * inv) * gain[j] + bias[j];
        }
    }
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_rank(x, 2, "linear input");
    require_rank(weight, 2, "linear weight");
    const std::size_t n = x.dim(0), d_in = x.dim(1), d_out = weight.dim(0);
    if (weight.dim(1) != d_in) {
        throw InputError("linear weight " + shape_string(weight.shape()) + " does not match input " +
                         shape_string(x.shape()));
    }
    require_bias(bias, d_out, "linear");
    Tensor y({n, d_out});
    for (std::size_t r = 0; r < n; ++r) {
        const auto xr = x.row(r);
        auto yr = y.row(r);
        for (std::size_t o = 0; o < d_out; ++o) {
            const auto wr = weight.row(o);
            float acc = bias.size() ? bias[o] : 0.0f;
            for (std::size_t i = 0; i < d_in; ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

Tensor transpose(const Tensor& x) {
    require_rank(x, 2, "transpose input");
    const std::size_t r = x.dim(0), c = x.dim(1);
    Tensor y({c, r});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) y[j * r + i] = x[i * c + j];
    }
    return y;
}

void apply_rotary(Tensor& x, std::size_t heads, double base) {
    require_rank(x, 2, "rotary input");
    const std::size_t t_len = x.dim(0), d = x.dim(1);
    if (heads == 0 || d % heads != 0) throw InputError("width must be divisible by the number of heads");
    const std::size_t hd = d / heads;
    if (hd % 2 != 0) throw InputError("rotary embedding needs an even head dimension");
    for (std::size_t t = 0; t < t_len; ++t) {
        auto row = x.row(t);
        for (std::size_t j = 0; j < hd / 2; ++j) {
            const double freq = std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(hd));
            const double ang = static_cast<double>(t) * freq;
            const auto c = static_cast<float>(std::cos(ang));
            const auto s = static_cast<float>(std::sin(ang));
            for (std::size_t h = 0; h < heads; ++h) {
                float& a = row[h * hd + 2 * j];
                float& b = row[h * hd + 2 * j + 1];
                const float a0 = a, b0 = b;
                a = a0 * c - b0 * s;
                b = a0 * s + b0 * c;
            }
        }
    }
}

namespace {

void attention_layer(std::vector<AttentionStream*>& active, const AttentionSpec& spec, const AttentionWeights& w) {
    const std::size_t t_len = active.front()->tokens.dim(0);
    const std::size_t d = active.front()->tokens.dim(1);
    const std::size_t heads = spec.heads;
    const std::size_t hd = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
    const auto win = static_cast<std::ptrdiff_t>(spec.temporal_window);

    std::vector<Tensor> q, k, v;
    for (auto* s : active) {
        Tensor h = s->tokens;
        layer_norm_rows(h, w.ln1_gain.data(), w.ln1_bias.data());
        q.push_back(linear(h, w.q_w, w.q_b));
        k.push_back(linear(h, w.k_w, w.k_b));
        v.push_back(linear(h, w.v_w, w.v_b));
        apply_rotary(q.back(), heads, spec.rope_base);
        apply_rotary(k.back(), heads, spec.rope_base);
    }

    const std::size_t n_streams = active.size();
    std::vector<float> scores;
    std::vector<Tensor> ctx(n_streams, Tensor({t_len, d}));
    for (std::size_t a = 0; a < n_streams; ++a) {
        for (std::size_t t = 0; t < t_len; ++t) {
            const auto t0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(t) - win);
            const auto t1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t_len) - 1,
                                                     static_cast<std::ptrdiff_t>(t) + win);
            const auto qrow = q[a].row(t);
            auto out = ctx[a].row(t);
            for (std::size_t h = 0; h < heads; ++h) {
                scores.clear();
                float max_score = -INFINITY;
                for (std::ptrdiff_t tk = t0; tk <= t1; ++tk) {
                    for (std::size_t b = 0; b < n_streams; ++b) {
                        const auto krow = k[b].row(static_cast<std::size_t>(tk));
                        float dot = 0.0f;
                        for (std::size_t j = 0; j < hd; ++j) dot += qrow[h * hd + j] * krow[h * hd + j];
                        scores.push_back(dot * scale);
                        max_score = std::max(max_score, scores.back());
                    }
                }
                double denom = 0.0;
                for (auto& sc : scores) {
                    sc = std::exp(sc - max_score);
                    denom += sc;
                }
                std::size_t idx = 0;
                for (std::ptrdiff_t tk = t0; tk <= t1; ++tk) {
                    for (std::size_t b = 0; b < n_streams; ++b, ++idx) {
                        const auto p = static_cast<float>(scores[idx] / denom);
                        const auto vrow = v[b].row(static_cast<std::size_t>(tk));
                        for (std::size_t j = 0; j < hd; ++j) out[h * hd + j] += p * vrow[h * hd + j];
                    }
                }
            }
        }
    }

    for (std::size_t a = 0; a < n_streams; ++a) {
        Tensor& x = active[a]->tokens;
        const Tensor o = linear(ctx[a], w.o_w, w.o_b);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += o[i];

        Tensor h = x;
        layer_norm_rows(h, w.ln2_gain.data(), w.ln2_bias.data());
        Tensor f = linear(h, w.ff1_w, w.ff1_b);
        for (auto& val : f.data()) val = gelu(val);
        const Tensor g = linear(f, w.ff2_w, w.ff2_b);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += g[i];
    }
}

}  // namespace

std::vector<AttentionStream> interleaved_window_attention(std::vector<AttentionStream> streams,
                                                          const AttentionSpec& spec,
                                                          std::span<const AttentionWeights> layers) {
    std::vector<AttentionStream*> active;
    for (auto& s : streams) {
        require_rank(s.tokens, 2, "attention stream");
        if (s.active) active.push_back(&s);
    }
    if (active.empty()) throw InputError("attention needs at least one active channel");
    const Shape& shape = active.front()->tokens.shape();
    for (auto* s : active) {
        if (s->tokens.shape() != shape) throw InputError("attention streams have inconsistent shapes");
    }
    std::stable_sort(active.begin(), active.end(),
                     [](const AttentionStream* a, const AttentionStream* b) { return a->slot < b->slot; });
    for (std::size_t i = 1; i < active.size(); ++i) {
        if (active[i]->slot == active[i - 1]->slot) throw InputError("attention streams share a channel slot");
    }
    const std::size_t d = shape[1];
    if (spec.heads == 0 || d % spec.heads != 0) throw InputError("width must be divisible by the number of heads");
    if (layers.size() != spec.layers) throw InputError("attention weight count does not match spec.layers");

    for (const auto& w : layers) attention_layer(active, spec, w);
    return streams;
}

}  // namespace vcnac::nn
