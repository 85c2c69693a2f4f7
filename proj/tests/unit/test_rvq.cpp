#include <doctest.h>

#include <cmath>

#include "vcnac/error.hpp"
#include "vcnac/rvq.hpp"
#include "vcnac/rng.hpp"
#include "vcnac/weights.hpp"

using namespace vcnac;

namespace {
LatentSequence random_latents(Rng& rng, std::size_t frames, double scale = 1.0) {
    LatentSequence z(frames, kLatentDim);
    for (auto& v : z.values) v = static_cast<float>(rng.normal() * scale);
    return z;
}

std::uint32_t brute_nearest(const nn::Tensor& cb, std::span<const float> v) {
    std::uint32_t best = 0;
    double best_d = INFINITY;
    for (std::size_t e = 0; e < cb.dim(0); ++e) {
        double d = 0;
        for (std::size_t j = 0; j < cb.dim(1); ++j) {
            const double diff = static_cast<double>(v[j]) - cb[e * cb.dim(1) + j];
            d += diff * diff;
        }
        if (d < best_d) { best_d = d; best = static_cast<std::uint32_t>(e); }
    }
    return best;
}
}  // namespace

TEST_CASE("standard spec") {
    const auto s = RvqSpec::standard();
    CHECK(s.n_codebooks() == 26);
    CHECK(s.sizes[0] == 16384);
    CHECK(s.sizes[25] == 4096);
    CHECK(s.is_standard());
    CHECK_THROWS_AS((RvqSpec{{100}, 16}).validate(), ConfigError);
}

TEST_CASE("nearest entry matches brute force") {
    Rng rng(1);
    const RvqSpec spec{{64, 32}, 16};
    const auto stack = random_rvq_stack(spec, 3);
    std::vector<float> scratch;
    for (int i = 0; i < 200; ++i) {
        const auto z = random_latents(rng, 1);
        CHECK(nearest_entry(stack, 0, z.frame(0), scratch) == brute_nearest(stack.codebook(0), z.frame(0)));
    }
}

TEST_CASE("quantize/dequantize agree and energy is non-increasing") {
    Rng rng(2);
    const auto stack = random_rvq_stack(RvqSpec{{256, 128, 128, 64}, 16}, 5);
    const auto z = random_latents(rng, 300);
    const auto q = quantize(z, stack, 4);
    CHECK(q.codes.frames == 300);
    CHECK(q.codes.n_used == 4);
    CHECK(dequantize(q.codes, stack, 4).values == q.quantized.values);
    for (std::size_t s = 1; s < 4; ++s) CHECK(q.residual_energy[s] <= q.residual_energy[s - 1]);
    for (std::size_t i = 0; i < z.values.size(); ++i) CHECK(q.residual.values[i] == z.values[i] - q.quantized.values[i]);
    const auto q2 = quantize(z, stack, 2);
    for (std::size_t t = 0; t < 300; ++t)
        for (std::size_t s = 0; s < 2; ++s) CHECK(q2.codes.at(t, s) == q.codes.at(t, s));
}

TEST_CASE("codebook entries quantize exactly") {
    const auto stack = random_rvq_stack(RvqSpec{{128, 64}, 16}, 9);
    LatentSequence z(10, 16);
    for (std::size_t t = 0; t < 10; ++t) {
        const auto row = stack.codebook(0).row(3 + t);
        std::copy(row.begin(), row.end(), z.frame(t).begin());
    }
    const auto q = quantize(z, stack, 2);
    for (double e : q.residual_energy) CHECK(e == 0.0);
    for (std::size_t t = 0; t < 10; ++t) {
        CHECK(q.codes.at(t, 0) == 3 + t);
        CHECK(q.codes.at(t, 1) == 0);
    }
}

TEST_CASE("quantize and dequantize argument errors") {
    const auto stack = random_rvq_stack(RvqSpec{{16, 16}, 16}, 1);
    LatentSequence z(2, 16);
    CHECK_THROWS_AS(quantize(z, stack, 0), InputError);
    CHECK_THROWS_AS(quantize(z, stack, 3), InputError);
    LatentSequence wrong(2, 8);
    CHECK_THROWS_AS(quantize(wrong, stack, 1), InputError);
    CodeIndices c{1, 1, {16}};
    CHECK_THROWS_AS(dequantize(c, stack, 1), InputError);
}

TEST_CASE("k-means recovers separated clusters") {
    Rng rng(3);
    const std::size_t k = 32, per = 40;
    std::vector<std::vector<float>> centers(k, std::vector<float>(16));
    for (auto& c : centers) for (auto& v : c) v = static_cast<float>(rng.normal() * 10.0);
    std::vector<float> samples;
    for (std::size_t i = 0; i < k * per; ++i)
        for (std::size_t j = 0; j < 16; ++j) samples.push_back(centers[i % k][j] + static_cast<float>(rng.normal() * 0.01));
    KMeansTrace trace;
    const RvqSpec spec{{k, 8}, 16};
    const auto stack = fit_codebooks_kmeans(samples, spec, 20, 7, &trace);
    for (const auto& obj : trace.objective)
        for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] <= obj[i - 1] * (1 + 1e-9) + 1e-12);
    LatentSequence z(k * per, 16);
    z.values = samples;
    const auto q = quantize(z, stack, 1);
    const auto stats = codebook_stats(q.codes, spec);
    CHECK(stats[0].usage >= 0.99);
    CHECK(stats[0].perplexity == doctest::Approx(static_cast<double>(k)).epsilon(0.01));
    CHECK(q.residual_energy[0] < 16 * 0.01 * 0.01 * 1.5);
    CHECK_THROWS_AS(fit_codebooks_kmeans(std::span(samples).first(16 * 10), spec, 2, 0), InputError);
}

TEST_CASE("k-means is seed deterministic and respects fit_stages") {
    Rng rng(4);
    std::vector<float> samples(16 * 200);
    for (auto& v : samples) v = static_cast<float>(rng.normal());
    const RvqSpec spec{{16, 16, 16}, 16};
    const auto a = fit_codebooks_kmeans(samples, spec, 5, 11, nullptr, 2);
    const auto b = fit_codebooks_kmeans(samples, spec, 5, 11, nullptr, 2);
    CHECK(a.digest() == b.digest());
    for (float v : a.codebook(2).data()) CHECK(v == 0.0f);
}

TEST_CASE("stack stores into and loads from a weight store") {
    const RvqSpec spec{{32, 16}, 16};
    const auto s = random_rvq_stack(spec, 2);
    nn::WeightStore w;
    s.store_into(w);
    CHECK(w.contains("rvq.codebook.1"));
    CHECK(RvqStack::from_weights(w, spec).digest() == s.digest());
    CHECK_THROWS_AS(RvqStack::from_weights(w, RvqSpec{{32, 16, 16}, 16}), ConfigError);
}
