#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "vcnac/error.hpp"
#include "vcnac/nn.hpp"

using namespace vcnac;
using namespace vcnac::nn;

TEST_CASE("strided conv matches brute force") {
    Rng rng(1);
    for (int it = 0; it < 60; ++it) {
        const std::size_t cin = 1 + rng.index(4), cout = 1 + rng.index(4), k = 1 + rng.index(7);
        const std::size_t s = 1 + rng.index(4), d = 1 + rng.index(3), pl = rng.index(5), pr = rng.index(5);
        const std::size_t t = d * (k - 1) + 1 + rng.index(30);
        const auto x = oracle::random_tensor(rng, {cin, t});
        const auto w = oracle::random_tensor(rng, {cout, cin, k});
        const auto b = oracle::random_tensor(rng, {cout});
        const auto y = conv1d(x, w, b, {s, d, pl, pr});
        const auto ref = oracle::conv1d(x, w, b, s, d, pl, pr);
        REQUIRE(y.shape() == ref.shape());
        CHECK(oracle::max_abs_diff(y.data(), ref.data()) < 1e-5);
    }
}

TEST_CASE("transposed conv matches brute force") {
    Rng rng(2);
    for (int it = 0; it < 60; ++it) {
        const std::size_t cin = 1 + rng.index(4), cout = 1 + rng.index(4), s = 1 + rng.index(5);
        const std::size_t k = 2 * s, t = 1 + rng.index(20);
        const auto x = oracle::random_tensor(rng, {cin, t});
        const auto w = oracle::random_tensor(rng, {cin, cout, k});
        const auto b = oracle::random_tensor(rng, {cout});
        const auto tr = transposed_trim_for(k, s);
        const auto y = conv1d_transposed(x, w, b, s, tr.left, tr.right);
        CHECK(y.dim(1) == t * s);
        const auto ref = oracle::conv1d_transposed(x, w, b, s, tr.left, tr.right);
        CHECK(oracle::max_abs_diff(y.data(), ref.data()) < 1e-5);
    }
}

TEST_CASE("same_by_stride keeps T/s") {
    for (std::size_t s : {1u, 2u, 4u, 5u, 6u, 8u}) {
        const auto o = same_by_stride(2 * s, s);
        Tensor x({1, 240}), w({1, 1, 2 * s}), b;
        CHECK(conv1d(x, w, b, o).dim(1) == 240 / s);
    }
    const auto o = same_by_stride(7, 1, 9);
    Tensor x({1, 100}), w({1, 1, 7}), b;
    CHECK(conv1d(x, w, b, o).dim(1) == 100);
}

TEST_CASE("conv shape errors") {
    Tensor x({2, 10}), w({3, 4, 3}), b({3});
    CHECK_THROWS_AS(conv1d(x, w, b, {}), InputError);
    Tensor w2({3, 2, 20});
    CHECK_THROWS_AS(conv1d(x, w2, b, {}), InputError);
    Tensor w3({3, 2, 3}), bad_b({2});
    CHECK_THROWS_AS(conv1d(x, w3, bad_b, {}), InputError);
    CHECK_THROWS_AS(conv1d(x, w3, b, {0, 1, 0, 0}), InputError);
}

TEST_CASE("snake and elu") {
    Tensor x({1, 3}, {0.0f, 1.0f, -2.0f});
    const float alpha[] = {2.0f};
    const auto y = snake(x, alpha);
    CHECK(y[0] == 0.0f);
    CHECK(y[1] == doctest::Approx(1.0 + std::pow(std::sin(2.0), 2) / 2.0));
    Tensor e = x;
    elu_inplace(e);
    CHECK(e[1] == 1.0f);
    CHECK(e[2] == doctest::Approx(std::exp(-2.0) - 1.0));
    const float zero[] = {0.0f};
    CHECK_THROWS_AS(snake(x, zero), InputError);
}

TEST_CASE("layer norm and linear") {
    Tensor x({2, 4}, {1, 2, 3, 4, -1, -1, -1, -1});
    const float g[] = {1, 1, 1, 1}, b[] = {0, 0, 0, 0};
    layer_norm_rows(x, g, b);
    double m = 0, v = 0;
    for (std::size_t j = 0; j < 4; ++j) m += x[j];
    for (std::size_t j = 0; j < 4; ++j) v += x[j] * x[j];
    CHECK(std::abs(m) < 1e-6);
    CHECK(v / 4 == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(x[4] == 0.0f);
    Tensor in({1, 2}, {1, 2}), w({3, 2}, {1, 0, 0, 1, 1, 1}), bias({3}, {0, 0, 10});
    const auto y = linear(in, w, bias);
    CHECK(y[0] == 1.0f);
    CHECK(y[1] == 2.0f);
    CHECK(y[2] == 13.0f);
}

TEST_CASE("rotary preserves norms and is relative") {
    Rng rng(3);
    auto q = oracle::random_tensor(rng, {6, 8});
    Tensor q_row({6, 8});
    for (std::size_t t = 0; t < 6; ++t)
        for (std::size_t j = 0; j < 8; ++j) q_row[t * 8 + j] = q[j];  // same vector at every position
    auto k_row = q_row;
    apply_rotary(q_row, 2, 10000.0);
    apply_rotary(k_row, 2, 10000.0);
    // <R_t q, R_s q> depends only on t - s.
    auto dotr = [&](std::size_t a, std::size_t b) {
        double s = 0;
        for (std::size_t j = 0; j < 4; ++j) s += q_row[a * 8 + j] * k_row[b * 8 + j];
        return s;
    };
    CHECK(dotr(3, 1) == doctest::Approx(dotr(4, 2)).epsilon(1e-5));
    CHECK(dotr(5, 5) == doctest::Approx(dotr(0, 0)).epsilon(1e-5));
    Tensor odd({2, 6});
    CHECK_THROWS_AS(apply_rotary(odd, 2, 1e4), InputError);
}

TEST_CASE("interleaved attention equals the dense masked oracle") {
    Rng rng(4);
    for (int it = 0; it < 25; ++it) {
        AttentionSpec spec;
        spec.heads = 1 + rng.index(2) * 1;  // 1 or 2
        const std::size_t d = spec.heads * 2 * (1 + rng.index(3));
        spec.temporal_window = rng.index(4);
        spec.layers = 1 + rng.index(2);
        const std::size_t t = 1 + rng.index(10), c = 1 + rng.index(6);
        std::vector<AttentionWeights> layers;
        for (std::size_t l = 0; l < spec.layers; ++l) layers.push_back(oracle::random_attention(rng, d, spec.ffn_mult));
        std::vector<AttentionStream> streams;
        std::vector<Tensor> tokens;
        for (std::size_t i = 0; i < c; ++i) {
            tokens.push_back(oracle::random_tensor(rng, {t, d}));
            streams.push_back({tokens.back(), i, true});
        }
        const auto out = interleaved_window_attention(streams, spec, layers);
        const auto ref = oracle::dense_attention(tokens, spec, layers);
        for (std::size_t i = 0; i < c; ++i) CHECK(oracle::max_abs_diff(out[i].tokens.data(), ref[i].data()) < 1e-5);
    }
}

TEST_CASE("attention skips inactive streams and is order independent") {
    Rng rng(5);
    AttentionSpec spec;
    const std::size_t d = 8;
    std::vector<AttentionWeights> layers{oracle::random_attention(rng, d, spec.ffn_mult)};
    const auto a = oracle::random_tensor(rng, {5, d}), b = oracle::random_tensor(rng, {5, d}),
               c = oracle::random_tensor(rng, {5, d});
    const auto with_inactive = interleaved_window_attention({{a, 0, true}, {b, 1, false}, {c, 2, true}}, spec, layers);
    const auto without = interleaved_window_attention({{a, 0, true}, {c, 2, true}}, spec, layers);
    CHECK(with_inactive[1].tokens == b);
    CHECK(with_inactive[0].tokens == without[0].tokens);
    CHECK(with_inactive[2].tokens == without[1].tokens);
    const auto swapped = interleaved_window_attention({{c, 2, true}, {a, 0, true}}, spec, layers);
    CHECK(swapped[0].tokens == without[1].tokens);
    CHECK(swapped[1].tokens == without[0].tokens);
    CHECK_THROWS_AS(interleaved_window_attention({{a, 0, true}, {c, 0, true}}, spec, layers), InputError);
}
