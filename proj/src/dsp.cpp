#include "vcnac/dsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "vcnac/error.hpp"

namespace vcnac::dsp {

void StftParams::validate() const {
    if (n_fft < 2 || !std::has_single_bit(n_fft)) throw InputError("n_fft must be a power of two >= 2");
    if (hop == 0 || hop > n_fft) throw InputError("hop must satisfy 0 < hop <= n_fft");
}

void fft(std::span<std::complex<double>> data) {
    const std::size_t n = data.size();
    if (n <= 1) return;
    if (!std::has_single_bit(n)) throw InputError("fft size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            const std::complex<double> w(std::cos(ang * k), std::sin(ang * k));
            for (std::size_t i = k; i < n; i += len) {
                const auto u = data[i];
                const auto v = data[i + half] * w;
                data[i] = u + v;
                data[i + half] = u - v;
            }
        }
    }
}

std::vector<double> hann_window(std::size_t n) {
    // Periodic Hann, as used for spectral analysis.
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

std::size_t stft_frame_count(std::size_t signal_length, const StftParams& params) {
    if (params.center) return 1 + signal_length / params.hop;
    if (signal_length < params.n_fft) return 0;
    return 1 + (signal_length - params.n_fft) / params.hop;
}

namespace {

// Index into a reflect-padded signal (mirror without repeating the edge sample).
float reflect_at(std::span<const float> x, std::ptrdiff_t i) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    if (n == 1) return x[0];
    const std::ptrdiff_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    if (i >= n) i = period - i;
    return x[static_cast<std::size_t>(i)];
}

}  // namespace

ComplexSpectrogram stft(std::span<const float> signal, const StftParams& params) {
    params.validate();
    if (signal.empty()) throw InputError("stft needs at least one sample");

    const std::size_t n_fft = params.n_fft;
    const auto window = hann_window(n_fft);
    ComplexSpectrogram out;
    out.bins = n_fft / 2 + 1;
    out.frames = stft_frame_count(signal.size(), params);
    out.values.resize(out.bins * out.frames);

    const std::ptrdiff_t offset = params.center ? static_cast<std::ptrdiff_t>(n_fft / 2) : 0;
    std::vector<std::complex<double>> buf(n_fft);
    for (std::size_t f = 0; f < out.frames; ++f) {
        const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(f * params.hop) - offset;
        for (std::size_t n = 0; n < n_fft; ++n) {
            buf[n] = window[n] * static_cast<double>(reflect_at(signal, start + static_cast<std::ptrdiff_t>(n)));
        }
        fft(buf);
        for (std::size_t k = 0; k < out.bins; ++k) {
            out.values[f * out.bins + k] = std::complex<float>(buf[k]);
        }
    }
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_fft, std::size_t n_mels, double sample_rate, double f_min, double f_max) {
    if (n_mels < 1) throw InputError("n_mels must be >= 1");
    if (n_fft < 2) throw InputError("n_fft must be >= 2");
    if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0)) {
        throw InputError("mel range must satisfy 0 <= f_min < f_max <= sample_rate/2");
    }

    MelFilterbank fb;
    fb.n_fft = n_fft;
    fb.n_mels = n_mels;
    fb.bins = n_fft / 2 + 1;
    fb.f_min = f_min;
    fb.f_max = f_max;
    fb.matrix.assign(n_mels * fb.bins, 0.0f);

    // n_mels + 2 edge points equally spaced in mel.
    const double m_lo = hz_to_mel(f_min);
    const double m_hi = hz_to_mel(f_max);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    }
    edges.front() = f_min;
    edges.back() = f_max;

    const double bin_hz = sample_rate / static_cast<double>(n_fft);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        fb.centers_hz.push_back(mid);
        bool any = false;
        for (std::size_t k = 0; k < fb.bins; ++k) {
            const double f = bin_hz * static_cast<double>(k);
            const double rise = (f - lo) / (mid - lo);
            const double fall = (hi - f) / (hi - mid);
            const double w = std::max(0.0, std::min(rise, fall));
            if (w > 0.0) {
                fb.matrix[m * fb.bins + k] = static_cast<float>(w);
                any = true;
            }
        }
        // Filters narrower than the bin spacing fall between bin centres; give
        // them the bin nearest to their centre so no row is empty.
        if (!any) {
            const auto k = std::min(fb.bins - 1, static_cast<std::size_t>(std::llround(mid / bin_hz)));
            fb.matrix[m * fb.bins + k] = 1.0f;
        }
    }
    return fb;
}

MelSpectrogram mel_spectrogram(std::span<const float> signal, const StftParams& params, const MelFilterbank& fb) {
    if (fb.n_fft != params.n_fft) throw InputError("mel filterbank n_fft does not match STFT n_fft");
    const auto spec = stft(signal, params);

    MelSpectrogram out;
    out.n_mels = fb.n_mels;
    out.frames = spec.frames;
    out.values.assign(out.n_mels * out.frames, 0.0f);

    std::vector<double> mag(spec.bins);
    for (std::size_t f = 0; f < spec.frames; ++f) {
        for (std::size_t k = 0; k < spec.bins; ++k) mag[k] = std::abs(std::complex<double>(spec.at(k, f)));
        for (std::size_t m = 0; m < fb.n_mels; ++m) {
            double acc = 0.0;
            const float* row = fb.matrix.data() + m * fb.bins;
            for (std::size_t k = 0; k < fb.bins; ++k) acc += row[k] * mag[k];
            out.values[m * out.frames + f] = static_cast<float>(acc);
        }
    }
    return out;
}

bool BiquadCascade::is_stable() const {
    // Roots of z^2 + a1 z + a2 lie inside the unit circle iff |a2| < 1 and |a1| < 1 + a2.
    return std::all_of(sections.begin(), sections.end(),
                       [](const Biquad& s) { return std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2; });
}

std::complex<double> BiquadCascade::response(double freq_hz, double sample_rate) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h = 1.0;
    for (const auto& s : sections) {
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    }
    return h;
}

BiquadCascade butterworth_lowpass(int order, double cutoff_hz, double sample_rate) {
    if (order < 2 || order % 2 != 0) throw InputError("Butterworth order must be even and >= 2");
    if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0)) {
        throw InputError("cutoff must satisfy 0 < cutoff < sample_rate/2");
    }
    // Bilinear transform with pre-warping; one biquad per conjugate pole pair.
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
    const double k2 = k * k;
    BiquadCascade cascade;
    for (int i = 0; i < order / 2; ++i) {
        const double theta = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order);
        const double two_zeta = 2.0 * std::sin(theta);  // 1/Q
        const double norm = 1.0 / (1.0 + two_zeta * k + k2);
        Biquad s;
        s.b0 = k2 * norm;
        s.b1 = 2.0 * s.b0;
        s.b2 = s.b0;
        s.a1 = 2.0 * (k2 - 1.0) * norm;
        s.a2 = (1.0 - two_zeta * k + k2) * norm;
        cascade.sections.push_back(s);
    }
    return cascade;
}

std::vector<float> filter_apply(const BiquadCascade& cascade, std::span<const float> signal) {
    std::vector<double> y(signal.begin(), signal.end());
    for (const auto& s : cascade.sections) {
        double z1 = 0.0, z2 = 0.0;
        for (auto& v : y) {
            const double x = v;
            const double out = s.b0 * x + z1;
            z1 = s.b1 * x - s.a1 * out + z2;
            z2 = s.b2 * x - s.a2 * out;
            v = out;
        }
    }
    return {y.begin(), y.end()};
}

}  // namespace vcnac::dsp
