#include "vcnac/rvq.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>

#include "vcnac/error.hpp"
#include "vcnac/hash.hpp"
#include "vcnac/rng.hpp"
#include "vcnac/weights.hpp"

namespace vcnac {

RvqSpec RvqSpec::standard() {
    RvqSpec s;
    s.sizes.push_back(16384);
    s.sizes.insert(s.sizes.end(), 25, 4096);
    return s;
}

std::size_t RvqSpec::max_size() const {
    return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
}

bool RvqSpec::is_standard() const { return *this == standard(); }

void RvqSpec::validate() const {
    if (sizes.empty()) throw ConfigError("RVQ spec has no codebooks");
    if (dim == 0) throw ConfigError("RVQ dimension must be positive");
    for (auto s : sizes) {
        if (!std::has_single_bit(s)) throw ConfigError("RVQ codebook sizes must be powers of two");
    }
}

RvqStack::RvqStack(RvqSpec spec, std::vector<nn::Tensor> codebooks)
    : spec_(std::move(spec)), codebooks_(std::move(codebooks)) {
    spec_.validate();
    if (codebooks_.size() != spec_.n_codebooks()) throw ConfigError("RVQ stack has the wrong number of codebooks");
    for (std::size_t i = 0; i < codebooks_.size(); ++i) {
        const auto& cb = codebooks_[i];
        if (cb.shape() != nn::Shape{spec_.sizes[i], spec_.dim}) {
            throw ConfigError("codebook " + std::to_string(i) + " has shape " + nn::shape_string(cb.shape()));
        }
        for (float v : cb.data()) {
            if (!std::isfinite(v)) throw ConfigError("codebook " + std::to_string(i) + " has non-finite entries");
        }
        const std::size_t n = spec_.sizes[i];
        std::vector<float> t(n * spec_.dim);
        for (std::size_t e = 0; e < n; ++e) {
            for (std::size_t j = 0; j < spec_.dim; ++j) t[j * n + e] = cb[e * spec_.dim + j];
        }
        by_dim_.push_back(std::move(t));
    }
}

RvqStack RvqStack::from_weights(const nn::WeightStore& store, const RvqSpec& spec) {
    std::vector<nn::Tensor> books;
    for (std::size_t i = 0; i < spec.n_codebooks(); ++i) books.push_back(store.at("rvq.codebook." + std::to_string(i)));
    return RvqStack(spec, std::move(books));
}

void RvqStack::store_into(nn::WeightStore& store) const {
    for (std::size_t i = 0; i < codebooks_.size(); ++i) store.insert("rvq.codebook." + std::to_string(i), codebooks_[i]);
}

std::uint64_t RvqStack::digest() const {
    Fnv1a64 h;
    for (const auto& cb : codebooks_) h.update(std::as_bytes(cb.data()));
    return h.value();
}

namespace {

// Squared distances from v to every entry of a dimension-major codebook, each
// accumulated over components in order 0..dim-1.
void distances_by_dim(std::span<const float> by_dim, std::size_t n, std::span<const float> v, float* out) {
    std::fill(out, out + n, 0.0f);
    for (std::size_t j = 0; j < v.size(); ++j) {
        const float vj = v[j];
        const float* col = by_dim.data() + j * n;
        for (std::size_t e = 0; e < n; ++e) {
            const float diff = vj - col[e];
            out[e] += diff * diff;
        }
    }
}

std::size_t argmin_first(const float* d, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t e = 1; e < n; ++e) {
        if (d[e] < d[best]) best = e;
    }
    return best;
}

}  // namespace

std::uint32_t nearest_entry(const RvqStack& stack, std::size_t stage, std::span<const float> v,
                            std::vector<float>& scratch) {
    const std::size_t n = stack.spec().sizes.at(stage);
    scratch.resize(n);
    distances_by_dim(stack.codebook_by_dim(stage), n, v, scratch.data());
    return static_cast<std::uint32_t>(argmin_first(scratch.data(), n));
}

QuantizeResult quantize(const LatentSequence& latents, const RvqStack& stack, std::size_t n_used) {
    const auto& spec = stack.spec();
    if (latents.dim != spec.dim) {
        throw InputError("latent dimension " + std::to_string(latents.dim) + " does not match RVQ dimension " +
                         std::to_string(spec.dim));
    }
    if (n_used < 1 || n_used > spec.n_codebooks()) {
        throw InputError("number of codebooks must be in [1, " + std::to_string(spec.n_codebooks()) + "]");
    }
    const std::size_t d = spec.dim;
    QuantizeResult out;
    out.codes.frames = latents.frames;
    out.codes.n_used = n_used;
    out.codes.indices.resize(latents.frames * n_used);
    out.quantized = LatentSequence(latents.frames, d, latents.source_layout);
    out.residual = LatentSequence(latents.frames, d, latents.source_layout);
    out.residual_energy.assign(n_used, 0.0);

    std::vector<float> scratch;
    std::vector<float> r(d);
    for (std::size_t t = 0; t < latents.frames; ++t) {
        const auto x = latents.frame(t);
        auto q = out.quantized.frame(t);
        std::copy(x.begin(), x.end(), r.begin());
        for (std::size_t stage = 0; stage < n_used; ++stage) {
            const auto idx = nearest_entry(stack, stage, r, scratch);
            out.codes.indices[t * n_used + stage] = idx;
            const auto entry = stack.codebook(stage).row(idx);
            // The residual is recomputed as x - q so it matches dequantize bit for bit.
            double energy = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                q[j] += entry[j];
                r[j] = x[j] - q[j];
                energy += static_cast<double>(r[j]) * r[j];
            }
            out.residual_energy[stage] += energy;
        }
        std::copy(r.begin(), r.end(), out.residual.frame(t).begin());
    }
    if (latents.frames > 0) {
        for (auto& e : out.residual_energy) e /= static_cast<double>(latents.frames);
    }
    return out;
}

LatentSequence dequantize(const CodeIndices& codes, const RvqStack& stack, std::size_t n_used) {
    const auto& spec = stack.spec();
    if (n_used < 1 || n_used > spec.n_codebooks() || n_used > codes.n_used) {
        throw InputError("cannot dequantize " + std::to_string(n_used) + " stages from " +
                         std::to_string(codes.n_used) + " coded stages");
    }
    if (codes.indices.size() != codes.frames * codes.n_used) throw InputError("code index array has the wrong size");
    LatentSequence out(codes.frames, spec.dim);
    for (std::size_t t = 0; t < codes.frames; ++t) {
        auto q = out.frame(t);
        for (std::size_t stage = 0; stage < n_used; ++stage) {
            const auto idx = codes.at(t, stage);
            if (idx >= spec.sizes[stage]) {
                throw InputError("index " + std::to_string(idx) + " out of range for codebook " +
                                 std::to_string(stage) + " of size " + std::to_string(spec.sizes[stage]));
            }
            const auto entry = stack.codebook(stage).row(idx);
            for (std::size_t j = 0; j < spec.dim; ++j) q[j] += entry[j];
        }
    }
    return out;
}

namespace {

struct KMeansResult {
    std::vector<float> centroids;  // k x d
    std::vector<double> objective;
};

// Points are dimension-major: component j of point i at [j * n + i].
KMeansResult kmeans(const std::vector<float>& points_by_dim, std::size_t n, std::size_t d, std::size_t k,
                    std::size_t iters, Rng& rng) {
    auto point = [&](std::size_t i, std::size_t j) { return points_by_dim[j * n + i]; };

    // k-means++ seeding.
    std::vector<float> centroids(k * d);
    std::vector<double> nearest(n, INFINITY);
    std::vector<float> dist(n);
    std::size_t chosen = rng.index(n);
    for (std::size_t c = 0; c < k; ++c) {
        if (c > 0) {
            double total = 0.0;
            for (double v : nearest) total += v;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                chosen = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += nearest[i];
                    if (acc > target && nearest[i] > 0.0) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = rng.index(n);  // every point already coincides with a centre
            }
        }
        for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = point(chosen, j);
        std::fill(dist.begin(), dist.end(), 0.0f);
        for (std::size_t j = 0; j < d; ++j) {
            const float cj = centroids[c * d + j];
            const float* col = points_by_dim.data() + j * n;
            for (std::size_t i = 0; i < n; ++i) {
                const float diff = col[i] - cj;
                dist[i] += diff * diff;
            }
        }
        for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min<double>(nearest[i], dist[i]);
    }

    KMeansResult out;
    std::vector<std::size_t> assign(n);
    std::vector<float> best_dist(n);
    std::vector<float> scratch(k);
    std::vector<float> c_by_dim(k * d);
    std::vector<float> v(d);
    for (std::size_t it = 0; it <= iters; ++it) {
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < d; ++j) c_by_dim[j * k + c] = centroids[c * d + j];
        }
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) v[j] = point(i, j);
            distances_by_dim(c_by_dim, k, v, scratch.data());
            assign[i] = argmin_first(scratch.data(), k);
            best_dist[i] = scratch[assign[i]];
            obj += best_dist[i];
        }
        out.objective.push_back(obj / static_cast<double>(n));
        if (it == iters) break;

        // Update step; empty clusters move onto the currently worst-served points.
        std::vector<double> sums(k * d, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t j = 0; j < d; ++j) sums[assign[i] * d + j] += point(i, j);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t j = 0; j < d; ++j) {
                    centroids[c * d + j] = static_cast<float>(sums[c * d + j] / static_cast<double>(counts[c]));
                }
                continue;
            }
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (best_dist[i] > best_dist[far]) far = i;
            }
            for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = point(far, j);
            best_dist[far] = 0.0f;
        }
    }
    out.centroids = std::move(centroids);
    return out;
}

}  // namespace

RvqStack fit_codebooks_kmeans(std::span<const float> samples, const RvqSpec& spec, std::size_t iters,
                              std::uint64_t seed, KMeansTrace* trace, std::size_t fit_stages) {
    spec.validate();
    const std::size_t d = spec.dim;
    if (samples.size() % d != 0) throw InputError("sample array length is not a multiple of the latent dimension");
    const std::size_t n = samples.size() / d;
    if (n < spec.max_size()) {
        throw InputError("k-means needs at least " + std::to_string(spec.max_size()) + " samples, got " +
                         std::to_string(n));
    }

    std::vector<float> residual(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) residual[j * n + i] = samples[i * d + j];
    }

    Rng rng(seed);
    std::vector<nn::Tensor> books;
    if (trace) trace->objective.clear();
    for (std::size_t stage = 0; stage < spec.n_codebooks(); ++stage) {
        const std::size_t k = spec.sizes[stage];
        if (stage >= fit_stages) {
            books.emplace_back(nn::Shape{k, d});
            continue;
        }
        auto fit = kmeans(residual, n, d, k, iters, rng);
        if (trace) trace->objective.push_back(fit.objective);

        nn::Tensor book({k, d}, std::move(fit.centroids));
        RvqSpec one{{k}, d};
        const RvqStack single(one, {book});
        std::vector<float> scratch, v(d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) v[j] = residual[j * n + i];
            const auto e = single.codebook(0).row(nearest_entry(single, 0, v, scratch));
            for (std::size_t j = 0; j < d; ++j) residual[j * n + i] = v[j] - e[j];
        }
        books.push_back(std::move(book));
    }
    return RvqStack(spec, std::move(books));
}

RvqStack random_rvq_stack(const RvqSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::vector<nn::Tensor> books;
    double scale = 1.0;
    for (std::size_t stage = 0; stage < spec.n_codebooks(); ++stage, scale *= 0.75) {
        nn::Tensor book({spec.sizes[stage], spec.dim});
        for (std::size_t i = spec.dim; i < book.size(); ++i) book[i] = static_cast<float>(scale * rng.normal());
        books.push_back(std::move(book));
    }
    return RvqStack(spec, std::move(books));
}

std::vector<CodebookStats> codebook_stats(const CodeIndices& codes, const RvqSpec& spec) {
    std::vector<CodebookStats> out;
    for (std::size_t stage = 0; stage < codes.n_used && stage < spec.n_codebooks(); ++stage) {
        std::vector<std::size_t> counts(spec.sizes[stage], 0);
        for (std::size_t t = 0; t < codes.frames; ++t) {
            const auto idx = codes.at(t, stage);
            if (idx < counts.size()) ++counts[idx];
        }
        CodebookStats s;
        if (codes.frames > 0) {
            std::size_t used = 0;
            double entropy = 0.0;
            for (auto c : counts) {
                if (c == 0) continue;
                ++used;
                const double p = static_cast<double>(c) / static_cast<double>(codes.frames);
                entropy -= p * std::log(p);
            }
            s.usage = static_cast<double>(used) / static_cast<double>(spec.sizes[stage]);
            s.perplexity = std::exp(entropy);
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace vcnac
