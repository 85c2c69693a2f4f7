#include "vcnac/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcnac/bitstream.hpp"
#include "vcnac/error.hpp"
#include "vcnac/hash.hpp"
#include "vcnac/rng.hpp"

namespace vcnac {

using nn::Shape;
using nn::Tensor;

// ---- configuration -------------------------------------------------------

CodecConfig CodecConfig::full_size() { return CodecConfig{}; }

CodecConfig CodecConfig::tiny() {
    CodecConfig c;
    c.encoder_widths = {8, 8, 8, 16, 16, 16};
    c.decoder_widths = {16, 16, 16, 8, 8, 8};
    return c;
}

CodecConfig CodecConfig::from_preset_or_file(const std::string& name_or_path) {
    if (name_or_path == "tiny") return tiny();
    if (name_or_path == "full") return full_size();
    return from_key_values(read_key_values(name_or_path));
}

std::size_t CodecConfig::hop() const {
    return std::accumulate(strides.begin(), strides.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t CodecConfig::frames_for(std::size_t samples) const {
    const std::size_t h = hop();
    return std::max<std::size_t>(1, (samples + h - 1) / h);
}

void CodecConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("codec config: " + msg); };
    if (strides.empty()) fail("no strides");
    if (hop() != 1920) fail("product of strides must be 1920, got " + std::to_string(hop()));
    if (sample_rate != kCodecSampleRate) fail("sample_rate must be 48000");
    if (sample_rate % static_cast<int>(hop()) != 0 || sample_rate / hop() != 25) fail("frame rate must be 25 Hz");
    if (latent_dim != kLatentDim) fail("latent_dim must be 16");
    if (max_channels < 1 || max_channels > 6) fail("max_channels must be in [1, 6]");
    if (encoder_widths.size() != strides.size() + 1) fail("encoder_widths needs one entry per stride plus one");
    if (decoder_widths.size() != strides.size() + 1) fail("decoder_widths needs one entry per stride plus one");
    for (auto w : encoder_widths) if (w == 0) fail("zero encoder width");
    for (auto w : decoder_widths) if (w == 0) fail("zero decoder width");
    if (encoder_widths.front() < max_channels || decoder_widths.front() < max_channels) {
        fail("embedding widths must be at least max_channels for orthogonal channel embeddings");
    }
    if (attention.heads == 0 || attention.layers == 0) fail("attention needs at least one head and one layer");
    for (auto d : {encoder_widths.back(), decoder_widths.front()}) {
        if (d % attention.heads != 0 || (d / attention.heads) % 2 != 0) {
            fail("attention width " + std::to_string(d) + " must split into heads of even size");
        }
    }
    if (attention.ffn_mult == 0) fail("attention ffn_mult must be positive");
    if (io_kernel % 2 == 0 || residual_kernel % 2 == 0) fail("io and residual kernels must be odd");
    if (residual_dilations.empty()) fail("no residual dilations");
    if (!(embedding_sigma > 0.0)) fail("embedding_sigma must be positive");
    if (rvq.dim != latent_dim) fail("rvq dim must equal latent_dim");
    rvq.validate();
}

namespace {

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (auto v : parse_int_list(key, value)) {
        if (v < 0) throw ConfigError("'" + key + "' must be nonnegative");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace

KeyValues CodecConfig::to_key_values() const {
    return {
        {"sample_rate", std::to_string(sample_rate)},
        {"strides", join(strides)},
        {"latent_dim", std::to_string(latent_dim)},
        {"max_channels", std::to_string(max_channels)},
        {"encoder_widths", join(encoder_widths)},
        {"decoder_widths", join(decoder_widths)},
        {"attention_heads", std::to_string(attention.heads)},
        {"attention_window", std::to_string(attention.temporal_window)},
        {"attention_layers", std::to_string(attention.layers)},
        {"attention_ffn_mult", std::to_string(attention.ffn_mult)},
        {"attention_rope_base", format_double(attention.rope_base)},
        {"activation", activation == Activation::Snake ? "snake" : "elu"},
        {"fusion", fusion == Fusion::Sum ? "sum" : "mean"},
        {"io_kernel", std::to_string(io_kernel)},
        {"residual_kernel", std::to_string(residual_kernel)},
        {"residual_dilations", join(residual_dilations)},
        {"embedding_sigma", format_double(embedding_sigma)},
        {"rvq_dim", std::to_string(rvq.dim)},
        {"rvq_sizes", join(rvq.sizes)},
    };
}

CodecConfig CodecConfig::from_key_values(const KeyValues& kv) {
    CodecConfig c;
    for (const auto& [key, value] : kv) {
        if (key == "sample_rate") c.sample_rate = static_cast<int>(parse_int(key, value));
        else if (key == "strides") c.strides = to_sizes(key, value);
        else if (key == "latent_dim") c.latent_dim = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "max_channels") c.max_channels = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "encoder_widths") c.encoder_widths = to_sizes(key, value);
        else if (key == "decoder_widths") c.decoder_widths = to_sizes(key, value);
        else if (key == "attention_heads") c.attention.heads = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "attention_window") c.attention.temporal_window = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "attention_layers") c.attention.layers = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "attention_ffn_mult") c.attention.ffn_mult = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "attention_rope_base") c.attention.rope_base = parse_double(key, value);
        else if (key == "activation") {
            if (value == "snake") c.activation = Activation::Snake;
            else if (value == "elu") c.activation = Activation::Elu;
            else throw ConfigError("activation must be snake or elu");
        } else if (key == "fusion") {
            if (value == "sum") c.fusion = Fusion::Sum;
            else if (value == "mean") c.fusion = Fusion::Mean;
            else throw ConfigError("fusion must be sum or mean");
        }
        else if (key == "io_kernel") c.io_kernel = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "residual_kernel") c.residual_kernel = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "residual_dilations") c.residual_dilations = to_sizes(key, value);
        else if (key == "embedding_sigma") c.embedding_sigma = parse_double(key, value);
        else if (key == "rvq_dim") c.rvq.dim = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "rvq_sizes") c.rvq.sizes = to_sizes(key, value);
        else throw ConfigError("unknown codec config key '" + key + "'");
    }
    c.validate();
    return c;
}

std::uint64_t CodecConfig::digest() const { return fnv1a64(format_key_values(to_key_values())); }

// ---- weight layout -------------------------------------------------------

namespace {

void add_attention(std::vector<std::pair<std::string, Shape>>& m, const std::string& prefix, std::size_t d,
                   const nn::AttentionSpec& spec) {
    for (std::size_t l = 0; l < spec.layers; ++l) {
        const std::string p = prefix + std::to_string(l) + ".";
        const std::size_t h = spec.ffn_mult * d;
        m.emplace_back(p + "ln1.g", Shape{d});
        m.emplace_back(p + "ln1.b", Shape{d});
        for (const char* proj : {"q", "k", "v", "o"}) {
            m.emplace_back(p + proj + ".w", Shape{d, d});
            m.emplace_back(p + proj + ".b", Shape{d});
        }
        m.emplace_back(p + "ln2.g", Shape{d});
        m.emplace_back(p + "ln2.b", Shape{d});
        m.emplace_back(p + "ff1.w", Shape{h, d});
        m.emplace_back(p + "ff1.b", Shape{h});
        m.emplace_back(p + "ff2.w", Shape{d, h});
        m.emplace_back(p + "ff2.b", Shape{d});
    }
}

void add_residual_units(std::vector<std::pair<std::string, Shape>>& m, const std::string& prefix, std::size_t w,
                        const CodecConfig& c) {
    const bool snake = c.activation == Activation::Snake;
    for (std::size_t r = 0; r < c.residual_dilations.size(); ++r) {
        const std::string p = prefix + "res" + std::to_string(r) + ".";
        if (snake) m.emplace_back(p + "alpha1", Shape{w});
        m.emplace_back(p + "conv1.w", Shape{w, w, c.residual_kernel});
        m.emplace_back(p + "conv1.b", Shape{w});
        if (snake) m.emplace_back(p + "alpha2", Shape{w});
        m.emplace_back(p + "conv2.w", Shape{w, w, 1});
        m.emplace_back(p + "conv2.b", Shape{w});
    }
}

std::string block_prefix(const char* side, std::size_t i) { return std::string(side) + ".block" + std::to_string(i) + "."; }

}  // namespace

std::vector<std::pair<std::string, Shape>> weight_manifest(const CodecConfig& c) {
    c.validate();
    const bool snake = c.activation == Activation::Snake;
    const auto& ew = c.encoder_widths;
    const auto& dw = c.decoder_widths;
    const std::size_t n = c.strides.size();
    std::vector<std::pair<std::string, Shape>> m;

    m.emplace_back("enc.in.w", Shape{ew[0], 1, c.io_kernel});
    m.emplace_back("enc.in.b", Shape{ew[0]});
    m.emplace_back("enc.emb", Shape{6, ew[0]});
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = block_prefix("enc", i);
        add_residual_units(m, p, ew[i], c);
        if (snake) m.emplace_back(p + "alpha", Shape{ew[i]});
        m.emplace_back(p + "down.w", Shape{ew[i + 1], ew[i], 2 * c.strides[i]});
        m.emplace_back(p + "down.b", Shape{ew[i + 1]});
    }
    add_attention(m, "enc.attn.", ew[n], c.attention);
    if (snake) m.emplace_back("enc.out.alpha", Shape{ew[n]});
    m.emplace_back("enc.out.w", Shape{c.latent_dim, ew[n], 1});
    m.emplace_back("enc.out.b", Shape{c.latent_dim});

    m.emplace_back("dec.in.w", Shape{dw[0], c.latent_dim, 1});
    m.emplace_back("dec.in.b", Shape{dw[0]});
    m.emplace_back("dec.emb", Shape{6, dw[0]});
    add_attention(m, "dec.attn.", dw[0], c.attention);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = block_prefix("dec", i);
        const std::size_t s = c.strides[n - 1 - i];
        if (snake) m.emplace_back(p + "alpha", Shape{dw[i]});
        m.emplace_back(p + "up.w", Shape{dw[i], dw[i + 1], 2 * s});
        m.emplace_back(p + "up.b", Shape{dw[i + 1]});
        add_residual_units(m, p, dw[i + 1], c);
    }
    if (snake) m.emplace_back("dec.out.alpha", Shape{dw[n]});
    m.emplace_back("dec.out.w", Shape{1, dw[n], c.io_kernel});
    m.emplace_back("dec.out.b", Shape{1});

    for (std::size_t i = 0; i < c.rvq.n_codebooks(); ++i) {
        m.emplace_back("rvq.codebook." + std::to_string(i), Shape{c.rvq.sizes[i], c.rvq.dim});
    }
    return m;
}

ParamCounts param_count(const CodecConfig& config) {
    ParamCounts pc;
    for (const auto& [name, shape] : weight_manifest(config)) {
        const auto n = nn::shape_size(shape);
        if (name == "enc.emb" || name == "dec.emb") pc.embeddings += n;
        else if (name.starts_with("enc.")) pc.encoder += n;
        else if (name.starts_with("dec.")) pc.decoder += n;
        else pc.quantizer += n;
    }
    return pc;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) { return s.ends_with(suffix); }

Tensor orthogonal_embeddings(std::size_t count, std::size_t width, double sigma, Rng& rng) {
    std::vector<std::vector<double>> basis;
    while (basis.size() < count) {
        std::vector<double> v(width);
        for (auto& x : v) x = rng.normal();
        // Two Gram-Schmidt passes keep the set orthogonal to double precision.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                double dot = 0.0;
                for (std::size_t j = 0; j < width; ++j) dot += v[j] * b[j];
                for (std::size_t j = 0; j < width; ++j) v[j] -= dot * b[j];
            }
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-6) continue;
        for (auto& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    const double scale = sigma * std::sqrt(static_cast<double>(width));
    Tensor out({count, width});
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < width; ++j) out[i * width + j] = static_cast<float>(scale * basis[i][j]);
    }
    return out;
}

}  // namespace

std::pair<Tensor, Tensor> init_channel_embeddings(const CodecConfig& config, std::uint64_t seed) {
    config.validate();
    Rng enc(seed ^ fnv1a64("enc.emb")), dec(seed ^ fnv1a64("dec.emb"));
    return {orthogonal_embeddings(6, config.encoder_widths.front(), config.embedding_sigma, enc),
            orthogonal_embeddings(6, config.decoder_widths.front(), config.embedding_sigma, dec)};
}

nn::WeightStore random_init(const CodecConfig& config, std::uint64_t seed) {
    config.validate();
    nn::WeightStore store(config.digest());
    for (const auto& [name, shape] : weight_manifest(config)) {
        if (name.starts_with("rvq.")) continue;
        Rng rng(seed ^ fnv1a64(name));
        Tensor t(shape);
        if (name == "enc.emb" || name == "dec.emb") {
            t = orthogonal_embeddings(shape[0], shape[1], config.embedding_sigma, rng);
        } else if (name.find("alpha") != std::string::npos || ends_with(name, ".g")) {
            std::fill(t.data().begin(), t.data().end(), 1.0f);
        } else if (name.find(".ln") != std::string::npos) {
            // layer-norm bias stays zero
        } else if (shape.size() >= 2) {
            const std::size_t fan_in = shape[1] * (shape.size() == 3 ? shape[2] : 1);
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-bound, bound));
        } else {
            for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-0.01, 0.01));
        }
        store.insert(name, std::move(t));
    }
    random_rvq_stack(config.rvq, seed ^ fnv1a64("rvq")).store_into(store);
    return store;
}

// ---- fusion / splitting --------------------------------------------------

Tensor fuse(std::span<const Tensor> streams, std::span<const std::size_t> slots) {
    if (streams.empty()) throw InputError("fuse needs at least one stream");
    if (!slots.empty() && slots.size() != streams.size()) throw InputError("fuse: one slot per stream required");
    std::vector<std::size_t> order(streams.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!slots.empty()) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return slots[a] < slots[b]; });
    }
    Tensor out(streams[order[0]].shape());
    for (std::size_t idx : order) {
        const Tensor& s = streams[idx];
        if (s.shape() != out.shape()) throw InputError("fuse: streams have different shapes");
        for (std::size_t i = 0; i < s.size(); ++i) out[i] += s[i];
    }
    return out;
}

std::vector<Tensor> split(const Tensor& fused, std::size_t target_channels, const Tensor& decoder_set) {
    if (target_channels < 1 || target_channels > 6) throw InputError("split: target channel count must be in [1, 6]");
    if (fused.rank() != 2) throw InputError("split: fused tensor must be [T x D]");
    const std::size_t t_len = fused.dim(0), d = fused.dim(1);
    if (decoder_set.rank() != 2 || decoder_set.dim(1) != d || decoder_set.dim(0) < target_channels) {
        throw InputError("split: decoder embeddings do not match the fused width");
    }
    std::vector<Tensor> out;
    for (std::size_t c = 0; c < target_channels; ++c) {
        Tensor s = fused;
        const auto e = decoder_set.row(c);
        for (std::size_t t = 0; t < t_len; ++t) {
            auto row = s.row(t);
            for (std::size_t j = 0; j < d; ++j) row[j] += e[j];
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---- pipeline ------------------------------------------------------------

namespace {

nn::AttentionWeights attention_weights(const nn::WeightStore& w, const std::string& p) {
    nn::AttentionWeights a;
    a.ln1_gain = w.at(p + "ln1.g");
    a.ln1_bias = w.at(p + "ln1.b");
    a.q_w = w.at(p + "q.w");
    a.q_b = w.at(p + "q.b");
    a.k_w = w.at(p + "k.w");
    a.k_b = w.at(p + "k.b");
    a.v_w = w.at(p + "v.w");
    a.v_b = w.at(p + "v.b");
    a.o_w = w.at(p + "o.w");
    a.o_b = w.at(p + "o.b");
    a.ln2_gain = w.at(p + "ln2.g");
    a.ln2_bias = w.at(p + "ln2.b");
    a.ff1_w = w.at(p + "ff1.w");
    a.ff1_b = w.at(p + "ff1.b");
    a.ff2_w = w.at(p + "ff2.w");
    a.ff2_b = w.at(p + "ff2.b");
    return a;
}

void add_inplace(Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

Codec::Codec(CodecConfig config, nn::WeightStore weights) : config_(std::move(config)), weights_(std::move(weights)) {
    config_.validate();
    if (weights_.config_digest() != config_.digest()) {
        throw ConfigError("weight store was built for a different codec config (digest mismatch)");
    }
    for (const auto& [name, shape] : weight_manifest(config_)) {
        const auto& t = weights_.at(name);
        if (t.shape() != shape) {
            throw ConfigError("weight '" + name + "' has shape " + nn::shape_string(t.shape()) + ", expected " +
                              nn::shape_string(shape));
        }
    }
    rvq_ = RvqStack::from_weights(weights_, config_.rvq);
    for (std::size_t l = 0; l < config_.attention.layers; ++l) {
        enc_attention_.push_back(attention_weights(weights_, "enc.attn." + std::to_string(l) + "."));
        dec_attention_.push_back(attention_weights(weights_, "dec.attn." + std::to_string(l) + "."));
    }
}

Tensor Codec::act(Tensor x, const std::string& alpha_name) const {
    if (config_.activation == Activation::Snake) {
        nn::snake_inplace(x, weights_.at(alpha_name).data());
    } else {
        nn::elu_inplace(x);
    }
    return x;
}

Tensor Codec::residual_unit(const Tensor& x, const std::string& p, std::size_t dilation) const {
    Tensor h = act(x, p + "alpha1");
    h = nn::conv1d(h, weights_.at(p + "conv1.w"), weights_.at(p + "conv1.b"),
                   nn::same_by_stride(config_.residual_kernel, 1, dilation));
    h = act(std::move(h), p + "alpha2");
    h = nn::conv1d(h, weights_.at(p + "conv2.w"), weights_.at(p + "conv2.b"), {});
    add_inplace(h, x);
    return h;
}

Tensor Codec::encode_channel(std::span<const float> samples, std::size_t padded, std::size_t slot) const {
    Tensor x({1, padded});
    std::copy(samples.begin(), samples.end(), x.data().begin());
    x = nn::conv1d(x, weights_.at("enc.in.w"), weights_.at("enc.in.b"), nn::same_by_stride(config_.io_kernel, 1));

    const auto emb = encoder_embeddings().row(slot);
    const std::size_t t_len = x.dim(1);
    for (std::size_t ch = 0; ch < x.dim(0); ++ch) {
        float* row = x.data().data() + ch * t_len;
        for (std::size_t t = 0; t < t_len; ++t) row[t] += emb[ch];
    }

    for (std::size_t i = 0; i < config_.strides.size(); ++i) {
        const auto p = block_prefix("enc", i);
        for (std::size_t r = 0; r < config_.residual_dilations.size(); ++r) {
            x = residual_unit(x, p + "res" + std::to_string(r) + ".", config_.residual_dilations[r]);
        }
        x = act(std::move(x), p + "alpha");
        const std::size_t s = config_.strides[i];
        x = nn::conv1d(x, weights_.at(p + "down.w"), weights_.at(p + "down.b"), nn::same_by_stride(2 * s, s));
    }
    return nn::transpose(x);  // [T x D]
}

LatentSequence Codec::encode(const AudioBuffer& audio, std::span<const std::size_t> slots) const {
    if (audio.sample_rate() != config_.sample_rate) {
        throw InputError("unsupported sample rate " + std::to_string(audio.sample_rate()) + " (codec runs at " +
                         std::to_string(config_.sample_rate) + " Hz)");
    }
    if (audio.frames() == 0) throw InputError("cannot encode empty audio");
    const auto n_ch = static_cast<std::size_t>(audio.channels());
    if (n_ch > config_.max_channels) throw LayoutError("too many channels for this codec config");

    std::vector<std::size_t> slot_of(n_ch);
    if (slots.empty()) {
        std::iota(slot_of.begin(), slot_of.end(), std::size_t{0});
    } else {
        if (slots.size() != n_ch) throw InputError("one embedding slot per channel required");
        slot_of.assign(slots.begin(), slots.end());
        auto sorted = slot_of;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.back() >= 6) {
            throw InputError("embedding slots must be distinct and below 6");
        }
    }

    const std::size_t frames = config_.frames_for(audio.frames());
    const std::size_t padded = frames * config_.hop();

    std::vector<nn::AttentionStream> streams;
    for (std::size_t c = 0; c < n_ch; ++c) {
        streams.push_back({encode_channel(audio.channel(c), padded, slot_of[c]), slot_of[c], true});
    }
    streams = nn::interleaved_window_attention(std::move(streams), config_.attention, enc_attention_);

    std::vector<Tensor> tokens;
    for (auto& s : streams) tokens.push_back(std::move(s.tokens));
    Tensor fused = fuse(tokens, slot_of);
    if (config_.fusion == Fusion::Mean) {
        const float inv = 1.0f / static_cast<float>(n_ch);
        for (auto& v : fused.data()) v *= inv;
    }

    Tensor h = act(nn::transpose(fused), "enc.out.alpha");
    h = nn::conv1d(h, weights_.at("enc.out.w"), weights_.at("enc.out.b"), {});  // [16 x T]

    LatentSequence out(frames, config_.latent_dim, audio.layout());
    const Tensor z = nn::transpose(h);
    std::copy(z.data().begin(), z.data().end(), out.values.begin());
    return out;
}

AudioBuffer Codec::decode(const LatentSequence& latents, ChannelLayout target) const {
    if (latents.dim != config_.latent_dim) {
        throw InputError("latent dimension " + std::to_string(latents.dim) + " does not match codec latent_dim " +
                         std::to_string(config_.latent_dim));
    }
    if (latents.frames == 0) throw InputError("cannot decode zero latent frames");
    const auto n_out = static_cast<std::size_t>(channel_count(target));
    if (n_out > config_.max_channels) throw LayoutError("too many output channels for this codec config");

    Tensor z({latents.frames, latents.dim}, latents.values);
    Tensor h = nn::conv1d(nn::transpose(z), weights_.at("dec.in.w"), weights_.at("dec.in.b"), {});  // [d0 x T]
    const auto split_streams = split(nn::transpose(h), n_out, decoder_embeddings());

    std::vector<nn::AttentionStream> streams;
    for (std::size_t c = 0; c < n_out; ++c) streams.push_back({split_streams[c], c, true});
    streams = nn::interleaved_window_attention(std::move(streams), config_.attention, dec_attention_);

    const std::size_t n = config_.strides.size();
    std::vector<std::vector<float>> channels;
    for (auto& s : streams) {
        Tensor x = nn::transpose(s.tokens);
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = block_prefix("dec", i);
            const std::size_t st = config_.strides[n - 1 - i];
            x = act(std::move(x), p + "alpha");
            const auto trim = nn::transposed_trim_for(2 * st, st);
            x = nn::conv1d_transposed(x, weights_.at(p + "up.w"), weights_.at(p + "up.b"), st, trim.left, trim.right);
            for (std::size_t r = 0; r < config_.residual_dilations.size(); ++r) {
                x = residual_unit(x, p + "res" + std::to_string(r) + ".", config_.residual_dilations[r]);
            }
        }
        x = act(std::move(x), "dec.out.alpha");
        x = nn::conv1d(x, weights_.at("dec.out.w"), weights_.at("dec.out.b"), nn::same_by_stride(config_.io_kernel, 1));
        std::vector<float> wave(x.data().begin(), x.data().end());
        for (auto& v : wave) v = std::tanh(v);
        channels.push_back(std::move(wave));
    }
    return AudioBuffer(config_.sample_rate, target, std::move(channels));
}

std::pair<AudioBuffer, RoundtripDiagnostics> Codec::roundtrip(const AudioBuffer& audio, std::size_t n_codebooks,
                                                              ChannelLayout target) const {
    const auto latents = encode(audio);
    const auto q = quantize(latents, rvq_, n_codebooks);
    auto deq = dequantize(q.codes, rvq_, n_codebooks);
    deq.source_layout = latents.source_layout;
    const auto decoded = decode(deq, target);

    std::vector<std::vector<float>> trimmed;
    for (const auto& ch : decoded.data()) {
        trimmed.emplace_back(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(audio.frames()));
    }
    RoundtripDiagnostics diag;
    diag.latent_frames = latents.frames;
    diag.residual_energy = q.residual_energy;
    diag.bits_per_frame = bits_per_frame(n_codebooks);
    diag.bits_used = diag.bits_per_frame * latents.frames;
    diag.bitrate = static_cast<double>(diag.bits_per_frame) * config_.frame_rate();
    return {AudioBuffer(decoded.sample_rate(), target, std::move(trimmed)), diag};
}

LatentSequence encode(const AudioBuffer& audio, const nn::WeightStore& weights, const CodecConfig& config) {
    return Codec(config, weights).encode(audio);
}

AudioBuffer decode(const LatentSequence& latents, ChannelLayout target, const nn::WeightStore& weights,
                   const CodecConfig& config) {
    return Codec(config, weights).decode(latents, target);
}

std::pair<AudioBuffer, RoundtripDiagnostics> roundtrip(const AudioBuffer& audio, const nn::WeightStore& weights,
                                                       const CodecConfig& config, std::size_t n_codebooks,
                                                       ChannelLayout target) {
    return Codec(config, weights).roundtrip(audio, n_codebooks, target);
}

}  // namespace vcnac
