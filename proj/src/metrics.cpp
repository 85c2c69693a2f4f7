#include "vcnac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "vcnac/dsp.hpp"
#include "vcnac/error.hpp"

namespace vcnac::metrics {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw MetricError(std::string(what) + ": reference has " + std::to_string(a) + " samples, estimate has " +
                         std::to_string(b));
    }
}

double scale_invariant_ratio(std::span<const float> reference, std::span<const float> estimate, bool center) {
    require_same_length(reference.size(), estimate.size(), "scale-invariant metric");
    if (reference.empty()) throw MetricError("scale-invariant metric of empty signals is undefined");
    const double n = static_cast<double>(reference.size());
    double mr = 0.0, me = 0.0;
    if (center) {
        for (std::size_t i = 0; i < reference.size(); ++i) {
            mr += reference[i];
            me += estimate[i];
        }
        mr /= n;
        me /= n;
    }
    double ss = 0.0, es = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double s = reference[i] - mr;
        ss += s * s;
        es += (estimate[i] - me) * s;
    }
    if (ss == 0.0) throw MetricError("scale-invariant metric is undefined for an all-zero reference");
    const double alpha = es / ss;
    double target = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double t = alpha * (reference[i] - mr);
        const double e = (estimate[i] - me) - t;
        target += t * t;
        noise += e * e;
    }
    if (noise < 1e-20) return kDbCap;
    if (target == 0.0) return -kDbCap;
    return std::min(kDbCap, 10.0 * std::log10(target / noise));
}

double mean_abs_log_diff(std::span<const float> a, std::span<const float> b, double eps) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(std::log(a[i] + eps) - std::log(b[i] + eps));
    return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

std::vector<float> magnitudes(const dsp::ComplexSpectrogram& s) {
    std::vector<float> m(s.values.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(s.values[i]);
    return m;
}

}  // namespace

double si_snr(std::span<const float> reference, std::span<const float> estimate) {
    return scale_invariant_ratio(reference, estimate, true);
}

double si_sdr(std::span<const float> reference, std::span<const float> estimate) {
    return scale_invariant_ratio(reference, estimate, false);
}

void MultiScaleMelParams::validate() const {
    if (scales.empty()) throw InputError("multi-scale mel distance needs at least one scale");
    if (!(eps > 0.0)) throw InputError("eps must be positive");
}

double multiscale_mel_distance(std::span<const float> reference, std::span<const float> estimate,
                               const MultiScaleMelParams& params) {
    params.validate();
    require_same_length(reference.size(), estimate.size(), "mel distance");
    const double f_max = params.f_max > 0.0 ? params.f_max : params.sample_rate / 2.0;
    double total = 0.0;
    for (const auto& sc : params.scales) {
        const dsp::StftParams sp{sc.n_fft, sc.hop};
        const auto fb = dsp::mel_filterbank(sc.n_fft, sc.n_mels, params.sample_rate, params.f_min, f_max);
        const auto a = dsp::mel_spectrogram(reference, sp, fb);
        const auto b = dsp::mel_spectrogram(estimate, sp, fb);
        total += mean_abs_log_diff(a.values, b.values, params.eps);
    }
    return total / static_cast<double>(params.scales.size());
}

double stft_distance(std::span<const float> reference, std::span<const float> estimate,
                     const StftDistanceParams& params) {
    if (params.scales.empty()) throw InputError("STFT distance needs at least one scale");
    require_same_length(reference.size(), estimate.size(), "STFT distance");
    double total = 0.0;
    for (const auto& sc : params.scales) {
        const dsp::StftParams sp{sc.n_fft, sc.hop};
        const auto a = magnitudes(dsp::stft(reference, sp));
        const auto b = magnitudes(dsp::stft(estimate, sp));
        total += mean_abs_log_diff(a, b, params.eps);
    }
    return total / static_cast<double>(params.scales.size());
}

void SpatialMetricParams::validate() const {
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    if (active_bin_threshold < 0.0) throw InputError("active_bin_threshold must be nonnegative");
}

double wrap_phase(double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double y = std::fmod(x + std::numbers::pi, two_pi);
    if (y <= 0.0) y += two_pi;
    return y - std::numbers::pi;
}

namespace {

void require_pair_lengths(ChannelPair ref, ChannelPair est) {
    const std::size_t n = ref.left.size();
    if (ref.right.size() != n || est.left.size() != n || est.right.size() != n) {
        throw MetricError("spatial metric inputs must all have the same length");
    }
}

}  // namespace

double delta_ipd(ChannelPair reference, ChannelPair estimate, const SpatialMetricParams& params) {
    params.validate();
    require_pair_lengths(reference, estimate);
    const dsp::StftParams sp{params.n_fft, params.hop};
    const auto rl = dsp::stft(reference.left, sp), rr = dsp::stft(reference.right, sp);
    const auto el = dsp::stft(estimate.left, sp), er = dsp::stft(estimate.right, sp);

    float peak = 0.0f;
    for (std::size_t i = 0; i < rl.values.size(); ++i) {
        peak = std::max({peak, std::abs(rl.values[i]), std::abs(rr.values[i])});
    }
    const double gate = params.active_bin_threshold * peak;

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < rl.values.size(); ++i) {
        if (!(std::abs(rl.values[i]) > gate && std::abs(rr.values[i]) > gate)) continue;
        const double ipd_ref = wrap_phase(std::arg(std::complex<double>(rl.values[i])) -
                                          std::arg(std::complex<double>(rr.values[i])));
        const double ipd_est = wrap_phase(std::arg(std::complex<double>(el.values[i])) -
                                          std::arg(std::complex<double>(er.values[i])));
        acc += std::abs(wrap_phase(ipd_ref - ipd_est));
        ++count;
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

double delta_ild(ChannelPair reference, ChannelPair estimate, const SpatialMetricParams& params) {
    params.validate();
    require_pair_lengths(reference, estimate);
    const dsp::StftParams sp{params.n_fft, params.hop};
    const auto fb = dsp::mel_filterbank(params.n_fft, params.n_mels, params.sample_rate, 0.0, params.sample_rate / 2.0);
    const auto rl = dsp::mel_spectrogram(reference.left, sp, fb), rr = dsp::mel_spectrogram(reference.right, sp, fb);
    const auto el = dsp::mel_spectrogram(estimate.left, sp, fb), er = dsp::mel_spectrogram(estimate.right, sp, fb);
    const double eps = params.eps;
    double acc = 0.0;
    for (std::size_t i = 0; i < rl.values.size(); ++i) {
        const double ild_ref = 20.0 * std::log10((rl.values[i] + eps) / (rr.values[i] + eps));
        const double ild_est = 20.0 * std::log10((el.values[i] + eps) / (er.values[i] + eps));
        acc += std::abs(ild_ref - ild_est);
    }
    return rl.values.empty() ? 0.0 : acc / static_cast<double>(rl.values.size());
}

double mean_over_channels(const AudioBuffer& reference, const AudioBuffer& estimate,
                          double (*metric)(std::span<const float>, std::span<const float>)) {
    if (reference.layout() != estimate.layout()) throw LayoutError("reference and estimate layouts differ");
    double acc = 0.0;
    for (int c = 0; c < reference.channels(); ++c) acc += metric(reference.channel(c), estimate.channel(c));
    return acc / reference.channels();
}

double multiscale_mel_distance(const AudioBuffer& reference, const AudioBuffer& estimate,
                               const MultiScaleMelParams& params) {
    if (reference.layout() != estimate.layout()) throw LayoutError("reference and estimate layouts differ");
    double acc = 0.0;
    for (int c = 0; c < reference.channels(); ++c) {
        acc += multiscale_mel_distance(reference.channel(c), estimate.channel(c), params);
    }
    return acc / reference.channels();
}

}  // namespace vcnac::metrics
