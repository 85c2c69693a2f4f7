#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcnac/audio.hpp"
#include "vcnac/kv.hpp"

namespace vcnac {

struct MidSide {
    std::vector<float> mid;
    std::vector<float> side;
};

struct FrontRearMidSide {
    MidSide front;
    MidSide rear;
};

// M = L + R, S = L - R.
MidSide mid_side(const AudioBuffer& stereo);
// L = (M + S) / 2, R = (M - S) / 2.
AudioBuffer inverse_mid_side(std::span<const float> mid, std::span<const float> side, int sample_rate = kCodecSampleRate);
// (L, R) and (Ls, Rs) pairs; C and LFE are not used.
FrontRearMidSide front_rear_midside(const AudioBuffer& surround);

struct DownmixCoeffs {
    double center_gain = 0.70710678118654752;    // -3 dB
    double surround_gain = 0.70710678118654752;  // -3 dB
    double lfe_gain = 0.0;

    void validate() const;
};

// Lo = L + c*C + s*Ls + g*LFE, Ro = R + c*C + s*Rs + g*LFE. No clipping.
AudioBuffer downmix_51_to_stereo(const AudioBuffer& surround, const DownmixCoeffs& coeffs = {});

struct GainRange {
    double low = 0.0;
    double high = 0.0;
};

struct SurroundSimParams {
    double p_center = 0.7;
    GainRange center_gain_range{0.4, 1.0};
    GainRange front_gain_range{0.5, 1.0};
    double p_rear = 0.8;
    GainRange rear_gain_range{0.3, 0.8};
    GainRange bleed_range{0.0, 0.1};
    GainRange lfe_cutoff_range_hz{80.0, 120.0};
    GainRange lfe_gain_range{0.5, 1.0};
    int lfe_filter_order = 4;
    std::uint64_t rng_seed = 0;

    void validate() const;

    KeyValues to_key_values() const;
    // Keys not present keep their defaults; unknown keys are rejected.
    static SurroundSimParams from_key_values(const KeyValues& kv);
};

// Everything drawn during one simulation, for logging and reproducibility.
struct SurroundSimDraws {
    bool center_active = false;
    double center_gain = 0.0;
    double front_gain_l = 0.0;
    double front_gain_r = 0.0;
    bool rear_active = false;
    double rear_gain_l = 0.0;
    double rear_gain_r = 0.0;
    // bleed[dst][src] over main channels in the order L, R, C, Ls, Rs; diagonal unused.
    std::array<std::array<double, 5>, 5> bleed{};
    double lfe_cutoff_hz = 0.0;
    double lfe_gain = 0.0;
};

struct SurroundSimResult {
    AudioBuffer audio;
    SurroundSimDraws draws;
};

// Builds a 5.1 mix from mono speech (centre), a primary stereo bed (fronts) and
// a secondary stereo bed (rears), with pairwise bleed among the active main
// channels and a Butterworth LFE. Channels drawn inactive are exactly zero.
// Deterministic in (inputs, params).
SurroundSimResult simulate_surround(const AudioBuffer& speech, const AudioBuffer& primary, const AudioBuffer& secondary,
                                    const SurroundSimParams& params);

}  // namespace vcnac
