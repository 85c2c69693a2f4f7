#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../oracles.hpp"
#include "vcnac/dsp.hpp"
#include "vcnac/error.hpp"

using namespace vcnac;
using namespace vcnac::dsp;

TEST_CASE("fft matches naive DFT") {
    Rng rng(1);
    for (std::size_t n : {1u, 2u, 8u, 64u, 256u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = rng.uniform(-1, 1);
        std::vector<std::complex<double>> y(x.begin(), x.end());
        fft(y);
        const auto ref = oracle::naive_dft(x);
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(y[k] - ref[k]) < 1e-9);
    }
    std::vector<std::complex<double>> bad(6);
    CHECK_THROWS_AS(fft(bad), InputError);
}

TEST_CASE("stft frame count and oracle") {
    CHECK(stft_frame_count(48000, {}) == 1 + 48000 / 512);
    Rng rng(2);
    std::vector<float> x(700);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
    const StftParams p{256, 64};
    const auto s = stft(x, p);
    const auto ref = oracle::naive_stft(x, 256, 64);
    REQUIRE(s.frames == ref.size());
    REQUIRE(s.bins == 129);
    double num = 0, den = 0;
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t b = 0; b < s.bins; ++b) {
            num += std::norm(std::complex<double>(s.at(b, f)) - ref[f][b]);
            den += std::norm(ref[f][b]);
        }
    CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("stft parameter validation") {
    std::vector<float> x(100);
    CHECK_THROWS_AS(stft(x, {300, 10}), InputError);
    CHECK_THROWS_AS(stft(x, {256, 0}), InputError);
    CHECK_THROWS_AS(stft(x, {256, 512}), InputError);
}

TEST_CASE("hann window is periodic") {
    const auto w = hann_window(8);
    CHECK(w[0] == 0.0);
    CHECK(w[4] == doctest::Approx(1.0));
    CHECK(w[2] == doctest::Approx(0.5));
}

TEST_CASE("mel filterbank shape and coverage") {
    const auto fb = mel_filterbank(2048, 320, 48000, 0, 24000);
    CHECK(fb.bins == 1025);
    CHECK(fb.matrix.size() == 320 * 1025);
    for (std::size_t m = 0; m < fb.n_mels; ++m) {
        float mx = 0;
        for (std::size_t b = 0; b < fb.bins; ++b) {
            CHECK(fb.weight(m, b) >= 0.0f);
            mx = std::max(mx, fb.weight(m, b));
        }
        CHECK(mx > 0.0f);
    }
    CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
    CHECK(hz_to_mel(1000.0) == doctest::Approx(999.99).epsilon(1e-3));
    CHECK_THROWS_AS(mel_filterbank(2048, 10, 48000, 100, 50), InputError);
}

TEST_CASE("mel spectrogram of a tone peaks near the tone") {
    std::vector<float> x(8192);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = static_cast<float>(std::sin(2 * std::numbers::pi * 3000.0 * n / 48000.0));
    const auto fb = mel_filterbank(2048, 64, 48000, 0, 24000);
    const auto mel = mel_spectrogram(x, {2048, 512}, fb);
    const std::size_t f = mel.frames / 2;
    std::size_t best = 0;
    for (std::size_t m = 0; m < mel.n_mels; ++m) if (mel.at(m, f) > mel.at(best, f)) best = m;
    CHECK(std::abs(fb.centers_hz[best] - 3000.0) < 400.0);
}

TEST_CASE("butterworth magnitude follows the prewarped prototype") {
    for (int order : {2, 4, 6}) {
        const auto bq = butterworth_lowpass(order, 100.0, 48000.0);
        CHECK(bq.sections.size() == static_cast<std::size_t>(order / 2));
        CHECK(bq.is_stable());
        for (double f : {10.0, 50.0, 100.0, 200.0, 1000.0}) {
            CHECK(std::abs(bq.response(f, 48000)) ==
                  doctest::Approx(oracle::butterworth_magnitude(order, f, 100.0, 48000)).epsilon(1e-6));
        }
    }
    CHECK(20 * std::log10(std::abs(butterworth_lowpass(4, 100, 48000).response(100, 48000))) ==
          doctest::Approx(-3.0103).epsilon(1e-3));
    CHECK_THROWS_AS(butterworth_lowpass(3, 100, 48000), InputError);
    CHECK_THROWS_AS(butterworth_lowpass(4, 30000, 48000), InputError);
}

TEST_CASE("filter_apply impulse response matches the analytic response") {
    const auto bq = butterworth_lowpass(4, 1000.0, 48000.0);
    std::vector<float> imp(1 << 14, 0.0f);
    imp[0] = 1.0f;
    const auto h = filter_apply(bq, imp);
    std::vector<std::complex<double>> spec(h.begin(), h.end());
    fft(spec);
    for (std::size_t k : {10u, 100u, 341u, 700u}) {
        const double f = 48000.0 * k / spec.size();
        CHECK(std::abs(spec[k]) == doctest::Approx(std::abs(bq.response(f, 48000))).epsilon(1e-3));
    }
    double dc = 0;
    for (float v : h) dc += v;
    CHECK(dc == doctest::Approx(1.0).epsilon(1e-4));
}
