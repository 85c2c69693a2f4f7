#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcnac/audio.hpp"
#include "vcnac/kv.hpp"
#include "vcnac/latent.hpp"
#include "vcnac/nn.hpp"
#include "vcnac/rvq.hpp"
#include "vcnac/weights.hpp"

namespace vcnac {

enum class Activation { Snake, Elu };
enum class Fusion { Sum, Mean };

struct CodecConfig {
    int sample_rate = kCodecSampleRate;
    std::vector<std::size_t> strides{2, 4, 5, 6, 8};  // encoder order; the decoder runs them reversed
    std::size_t latent_dim = kLatentDim;
    std::size_t max_channels = 6;
    // Width after the input conv and after each encoder block (strides.size() + 1 entries).
    std::vector<std::size_t> encoder_widths{45, 90, 180, 360, 720, 1440};
    // Width after the latent projection and after each decoder block.
    std::vector<std::size_t> decoder_widths{2048, 1024, 512, 256, 128, 64};
    nn::AttentionSpec attention{};
    Activation activation = Activation::Snake;
    Fusion fusion = Fusion::Sum;
    std::size_t io_kernel = 7;
    std::size_t residual_kernel = 7;
    std::vector<std::size_t> residual_dilations{1, 3, 9};
    double embedding_sigma = 0.01;
    RvqSpec rvq = RvqSpec::standard();

    // ~164M parameters, decoder about twice the encoder.
    static CodecConfig full_size();
    // Same topology with narrow layers, for tests and quick experiments.
    static CodecConfig tiny();
    // "tiny" | "full" or a key=value file path.
    static CodecConfig from_preset_or_file(const std::string& name_or_path);

    std::size_t hop() const;  // product of strides (1920)
    double frame_rate() const { return static_cast<double>(sample_rate) / static_cast<double>(hop()); }
    std::size_t frames_for(std::size_t samples) const;  // ceil(samples / hop), at least 1

    void validate() const;
    KeyValues to_key_values() const;
    static CodecConfig from_key_values(const KeyValues& kv);
    std::uint64_t digest() const;
};

struct ParamCounts {
    std::size_t encoder = 0;
    std::size_t decoder = 0;
    std::size_t quantizer = 0;
    std::size_t embeddings = 0;

    std::size_t total() const { return encoder + decoder + quantizer + embeddings; }
    double decoder_encoder_ratio() const { return static_cast<double>(decoder) / static_cast<double>(encoder); }
};

// Every learned tensor of a config, by name, without allocating it.
std::vector<std::pair<std::string, nn::Shape>> weight_manifest(const CodecConfig& config);
ParamCounts param_count(const CodecConfig& config);

// Deterministic initialisation. Channel embeddings are mutually orthogonal
// within each set, with norm sigma * sqrt(width).
nn::WeightStore random_init(const CodecConfig& config, std::uint64_t seed);
// The two [6 x width] embedding sets exactly as random_init builds them.
std::pair<nn::Tensor, nn::Tensor> init_channel_embeddings(const CodecConfig& config, std::uint64_t seed);

// Sum in ascending slot order regardless of the order of `streams`.
// Each stream is [T x D].
nn::Tensor fuse(std::span<const nn::Tensor> streams, std::span<const std::size_t> slots = {});
// stream c = fused + decoder_set[c] for c < target_channels. decoder_set is [6 x D].
std::vector<nn::Tensor> split(const nn::Tensor& fused, std::size_t target_channels, const nn::Tensor& decoder_set);

struct RoundtripDiagnostics {
    std::size_t latent_frames = 0;
    std::vector<double> residual_energy;
    std::size_t bits_per_frame = 0;
    std::size_t bits_used = 0;
    double bitrate = 0.0;
};

class Codec {
public:
    // Throws ConfigError when the store was built for a different config or
    // a tensor is missing or misshapen.
    Codec(CodecConfig config, nn::WeightStore weights);

    const CodecConfig& config() const noexcept { return config_; }
    const nn::WeightStore& weights() const noexcept { return weights_; }
    const RvqStack& rvq() const noexcept { return rvq_; }
    const nn::Tensor& encoder_embeddings() const { return weights_.at("enc.emb"); }
    const nn::Tensor& decoder_embeddings() const { return weights_.at("dec.emb"); }

    // slots[c] is the embedding index for input channel c (default: c).
    LatentSequence encode(const AudioBuffer& audio, std::span<const std::size_t> slots = {}) const;
    // Output has frames * hop samples per channel.
    AudioBuffer decode(const LatentSequence& latents, ChannelLayout target) const;

    // encode -> quantize -> dequantize -> decode, output trimmed to the input length.
    std::pair<AudioBuffer, RoundtripDiagnostics> roundtrip(const AudioBuffer& audio, std::size_t n_codebooks,
                                                           ChannelLayout target) const;

private:
    nn::Tensor act(nn::Tensor x, const std::string& alpha_name) const;
    nn::Tensor residual_unit(const nn::Tensor& x, const std::string& prefix, std::size_t dilation) const;
    nn::Tensor encode_channel(std::span<const float> samples, std::size_t padded, std::size_t slot) const;

    CodecConfig config_;
    nn::WeightStore weights_;
    RvqStack rvq_;
    std::vector<nn::AttentionWeights> enc_attention_;
    std::vector<nn::AttentionWeights> dec_attention_;
};

LatentSequence encode(const AudioBuffer& audio, const nn::WeightStore& weights, const CodecConfig& config);
AudioBuffer decode(const LatentSequence& latents, ChannelLayout target, const nn::WeightStore& weights,
                   const CodecConfig& config);
std::pair<AudioBuffer, RoundtripDiagnostics> roundtrip(const AudioBuffer& audio, const nn::WeightStore& weights,
                                                       const CodecConfig& config, std::size_t n_codebooks,
                                                       ChannelLayout target);

}  // namespace vcnac
