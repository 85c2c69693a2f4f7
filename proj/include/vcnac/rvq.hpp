#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vcnac/latent.hpp"
#include "vcnac/tensor.hpp"

namespace vcnac {

namespace nn {
class WeightStore;
}

struct RvqSpec {
    std::vector<std::size_t> sizes;  // entries per stage, powers of two
    std::size_t dim = kLatentDim;

    // 26 stages: 16384 entries, then 25 x 4096.
    static RvqSpec standard();

    std::size_t n_codebooks() const noexcept { return sizes.size(); }
    std::size_t max_size() const;
    bool is_standard() const;
    void validate() const;

    friend bool operator==(const RvqSpec&, const RvqSpec&) = default;
};

// Per-stage codebooks, each [size x dim]. Immutable once constructed.
class RvqStack {
public:
    RvqStack() = default;
    RvqStack(RvqSpec spec, std::vector<nn::Tensor> codebooks);

    const RvqSpec& spec() const noexcept { return spec_; }
    const nn::Tensor& codebook(std::size_t stage) const { return codebooks_.at(stage); }
    // Dimension-major copy of a codebook: entry e, component j at [j * size + e].
    std::span<const float> codebook_by_dim(std::size_t stage) const { return by_dim_.at(stage); }

    // Reads/writes "rvq.codebook.{i}".
    static RvqStack from_weights(const nn::WeightStore& store, const RvqSpec& spec);
    void store_into(nn::WeightStore& store) const;

    std::uint64_t digest() const;

private:
    RvqSpec spec_;
    std::vector<nn::Tensor> codebooks_;
    std::vector<std::vector<float>> by_dim_;
};

// indices[t * n_used + stage]
struct CodeIndices {
    std::size_t frames = 0;
    std::size_t n_used = 0;
    std::vector<std::uint32_t> indices;

    std::uint32_t at(std::size_t t, std::size_t stage) const { return indices[t * n_used + stage]; }

    friend bool operator==(const CodeIndices&, const CodeIndices&) = default;
};

struct QuantizeResult {
    CodeIndices codes;
    LatentSequence quantized;            // sum of the chosen entries
    LatentSequence residual;             // latent - quantized
    std::vector<double> residual_energy; // per stage, mean over frames of ||residual||^2 after that stage
};

// Greedy residual quantization with the first n_used stages. Nearest entry by
// squared Euclidean distance, ties to the lowest index.
QuantizeResult quantize(const LatentSequence& latents, const RvqStack& stack, std::size_t n_used);

// Index of the nearest entry of `stage` to v (ties to the lowest index).
std::uint32_t nearest_entry(const RvqStack& stack, std::size_t stage, std::span<const float> v,
                            std::vector<float>& scratch);

LatentSequence dequantize(const CodeIndices& codes, const RvqStack& stack, std::size_t n_used);

// Objective (mean squared distance to the assigned centroid) after every
// assignment step, per stage.
struct KMeansTrace {
    std::vector<std::vector<double>> objective;
};

// Stage-wise k-means (k-means++ seeding, Lloyd iterations) on successive residuals.
// Stages at index >= fit_stages are left as zero codebooks.
RvqStack fit_codebooks_kmeans(std::span<const float> samples, const RvqSpec& spec, std::size_t iters,
                              std::uint64_t seed, KMeansTrace* trace = nullptr, std::size_t fit_stages = SIZE_MAX);

// Random stack: entry 0 of every stage is the zero vector, the rest are Gaussian
// with a scale that shrinks geometrically per stage.
RvqStack random_rvq_stack(const RvqSpec& spec, std::uint64_t seed);

struct CodebookStats {
    double usage = 0.0;       // distinct indices / codebook size
    double perplexity = 1.0;  // exp(entropy of the empirical index distribution)
};

std::vector<CodebookStats> codebook_stats(const CodeIndices& codes, const RvqSpec& spec);

}  // namespace vcnac
