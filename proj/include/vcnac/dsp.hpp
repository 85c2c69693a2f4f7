#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vcnac::dsp {

enum class Window { Hann };

struct StftParams {
    std::size_t n_fft = 2048;  // power of two
    std::size_t hop = 512;     // 0 < hop <= n_fft
    Window window = Window::Hann;
    bool center = true;        // reflect-pad n_fft/2 on both sides

    void validate() const;
};

// values[frame * bins + bin]
struct ComplexSpectrogram {
    std::size_t bins = 0;
    std::size_t frames = 0;
    std::vector<std::complex<float>> values;

    std::complex<float> at(std::size_t bin, std::size_t frame) const { return values[frame * bins + bin]; }
};

// Row-major n_mels x bins; weights are nonnegative and each row has a nonzero entry.
struct MelFilterbank {
    std::size_t n_fft = 0;
    std::size_t n_mels = 0;
    std::size_t bins = 0;
    double f_min = 0.0;
    double f_max = 0.0;
    std::vector<float> matrix;
    std::vector<double> centers_hz;

    float weight(std::size_t mel, std::size_t bin) const { return matrix[mel * bins + bin]; }
};

// Nonnegative matrix stored row-major as n_mels x frames.
struct MelSpectrogram {
    std::size_t n_mels = 0;
    std::size_t frames = 0;
    std::vector<float> values;

    float at(std::size_t mel, std::size_t frame) const { return values[mel * frames + frame]; }
};

// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

struct BiquadCascade {
    std::vector<Biquad> sections;

    bool is_stable() const;
    std::complex<double> response(double freq_hz, double sample_rate) const;
};

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::span<std::complex<double>> data);

std::vector<double> hann_window(std::size_t n);
std::size_t stft_frame_count(std::size_t signal_length, const StftParams& params);

ComplexSpectrogram stft(std::span<const float> signal, const StftParams& params);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank mel_filterbank(std::size_t n_fft, std::size_t n_mels, double sample_rate, double f_min, double f_max);

MelSpectrogram mel_spectrogram(std::span<const float> signal, const StftParams& params, const MelFilterbank& fb);

BiquadCascade butterworth_lowpass(int order, double cutoff_hz, double sample_rate);

// Causal single pass, transposed direct form II, zero initial state.
std::vector<float> filter_apply(const BiquadCascade& cascade, std::span<const float> signal);

}  // namespace vcnac::dsp
