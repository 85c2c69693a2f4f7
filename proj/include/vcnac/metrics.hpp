#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vcnac/audio.hpp"

namespace vcnac::metrics {

inline constexpr double kDbCap = 100.0;

// Scale-invariant SNR with mean removal. Capped at +100 dB.
double si_snr(std::span<const float> reference, std::span<const float> estimate);
// As si_snr without mean removal.
double si_sdr(std::span<const float> reference, std::span<const float> estimate);

struct MelScale {
    std::size_t n_fft = 2048;
    std::size_t hop = 512;
    std::size_t n_mels = 128;
};

struct MultiScaleMelParams {
    std::vector<MelScale> scales{{2048, 512, 128}, {512, 128, 64}, {128, 32, 16}};
    double eps = 1e-5;
    double sample_rate = kCodecSampleRate;
    double f_min = 0.0;
    double f_max = 0.0;  // 0 means Nyquist

    void validate() const;
};

// Mean over scales of mean |log(mel_ref + eps) - log(mel_est + eps)|.
double multiscale_mel_distance(std::span<const float> reference, std::span<const float> estimate,
                               const MultiScaleMelParams& params = {});

struct StftScale {
    std::size_t n_fft = 2048;
    std::size_t hop = 512;
};

struct StftDistanceParams {
    std::vector<StftScale> scales{{2048, 512}, {512, 128}};
    double eps = 1e-5;
};

// Mean over scales of mean |log(|X_ref| + eps) - log(|X_est| + eps)|.
double stft_distance(std::span<const float> reference, std::span<const float> estimate,
                     const StftDistanceParams& params = {});

struct SpatialMetricParams {
    std::size_t n_fft = 2048;
    std::size_t hop = 512;
    std::size_t n_mels = 320;
    double eps = 1e-8;
    double active_bin_threshold = 1e-4;  // relative to the reference peak magnitude
    double sample_rate = kCodecSampleRate;

    void validate() const;
};

struct ChannelPair {
    std::span<const float> left;
    std::span<const float> right;
};

// Wraps to (-pi, pi].
double wrap_phase(double x);

// Mean |wrap(IPD_ref - IPD_est)| over bins where both reference channels are active.
double delta_ipd(ChannelPair reference, ChannelPair estimate, const SpatialMetricParams& params = {});
// Mean |ILD_ref - ILD_est| over all mel bins and frames, ILD in dB.
double delta_ild(ChannelPair reference, ChannelPair estimate, const SpatialMetricParams& params = {});

// Per-channel averages over multichannel buffers of equal layout and length.
double mean_over_channels(const AudioBuffer& reference, const AudioBuffer& estimate,
                          double (*metric)(std::span<const float>, std::span<const float>));
double multiscale_mel_distance(const AudioBuffer& reference, const AudioBuffer& estimate,
                               const MultiScaleMelParams& params = {});

}  // namespace vcnac::metrics
