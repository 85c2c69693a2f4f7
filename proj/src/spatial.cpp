#include "vcnac/spatial.hpp"


#include "vcnac/dsp.hpp"
#include "vcnac/error.hpp"
#include "vcnac/rng.hpp"

namespace vcnac {

namespace {

void require_layout(const AudioBuffer& b, ChannelLayout want, const char* op) {
    if (b.layout() != want) {
        throw LayoutError(std::string(op) + " expects " + std::string(layout_name(want)) + " input, got " +
                          std::string(layout_name(b.layout())));
    }
}

MidSide sum_difference(std::span<const float> l, std::span<const float> r) {
    MidSide out;
    out.mid.resize(l.size());
    out.side.resize(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) {
        out.mid[i] = l[i] + r[i];
        out.side[i] = l[i] - r[i];
    }
    return out;
}

double draw(Rng& rng, const GainRange& r) { return rng.uniform(r.low, r.high); }

void check_range(const GainRange& r, const char* name, bool nonneg = true) {
    if (!(r.low <= r.high)) throw ConfigError(std::string(name) + ": low must be <= high");
    if (nonneg && r.low < 0.0) throw ConfigError(std::string(name) + ": must be nonnegative");
}

std::string format_range(const GainRange& r) { return format_double(r.low) + "," + format_double(r.high); }

GainRange parse_range(const std::string& key, const std::string& value) {
    const auto v = parse_double_list(key, value);
    if (v.size() != 2) throw ConfigError("'" + key + "' needs two comma-separated values");
    return {v[0], v[1]};
}

}  // namespace

MidSide mid_side(const AudioBuffer& stereo) {
    require_layout(stereo, ChannelLayout::Stereo, "mid_side");
    return sum_difference(stereo.channel(0), stereo.channel(1));
}

AudioBuffer inverse_mid_side(std::span<const float> mid, std::span<const float> side, int sample_rate) {
    if (mid.size() != side.size()) throw InputError("mid and side lengths differ");
    std::vector<float> l(mid.size()), r(mid.size());
    for (std::size_t i = 0; i < mid.size(); ++i) {
        const double m = mid[i], d = side[i];
        l[i] = static_cast<float>((m + d) * 0.5);
        r[i] = static_cast<float>((m - d) * 0.5);
    }
    return AudioBuffer(sample_rate, ChannelLayout::Stereo, {std::move(l), std::move(r)});
}

FrontRearMidSide front_rear_midside(const AudioBuffer& surround) {
    require_layout(surround, ChannelLayout::Surround51, "front_rear_midside");
    return {sum_difference(surround.channel(kL), surround.channel(kR)),
            sum_difference(surround.channel(kLs), surround.channel(kRs))};
}

void DownmixCoeffs::validate() const {
    if (!(center_gain >= 0.0 && surround_gain >= 0.0 && lfe_gain >= 0.0)) {
        throw InputError("downmix gains must be nonnegative");
    }
}

AudioBuffer downmix_51_to_stereo(const AudioBuffer& surround, const DownmixCoeffs& coeffs) {
    require_layout(surround, ChannelLayout::Surround51, "downmix_51_to_stereo");
    coeffs.validate();
    const auto n = surround.frames();
    const auto L = surround.channel(kL), R = surround.channel(kR), C = surround.channel(kC);
    const auto LFE = surround.channel(kLfe), Ls = surround.channel(kLs), Rs = surround.channel(kRs);
    const auto c = static_cast<float>(coeffs.center_gain);
    const auto s = static_cast<float>(coeffs.surround_gain);
    const auto g = static_cast<float>(coeffs.lfe_gain);
    std::vector<float> lo(n), ro(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float common = c * C[i] + g * LFE[i];
        lo[i] = L[i] + s * Ls[i] + common;
        ro[i] = R[i] + s * Rs[i] + common;
    }
    return AudioBuffer(surround.sample_rate(), ChannelLayout::Stereo, {std::move(lo), std::move(ro)});
}

void SurroundSimParams::validate() const {
    if (!(p_center >= 0.0 && p_center <= 1.0)) throw ConfigError("p_center must be in [0, 1]");
    if (!(p_rear >= 0.0 && p_rear <= 1.0)) throw ConfigError("p_rear must be in [0, 1]");
    check_range(center_gain_range, "center_gain_range");
    check_range(front_gain_range, "front_gain_range");
    check_range(rear_gain_range, "rear_gain_range");
    check_range(bleed_range, "bleed_range");
    check_range(lfe_cutoff_range_hz, "lfe_cutoff_range_hz");
    check_range(lfe_gain_range, "lfe_gain_range");
    if (lfe_cutoff_range_hz.low <= 0.0) throw ConfigError("lfe_cutoff_range_hz must be positive");
    if (lfe_filter_order < 2 || lfe_filter_order % 2 != 0) throw ConfigError("lfe_filter_order must be even and >= 2");
}

KeyValues SurroundSimParams::to_key_values() const {
    return {
        {"p_center", format_double(p_center)},
        {"center_gain_range", format_range(center_gain_range)},
        {"front_gain_range", format_range(front_gain_range)},
        {"p_rear", format_double(p_rear)},
        {"rear_gain_range", format_range(rear_gain_range)},
        {"bleed_range", format_range(bleed_range)},
        {"lfe_cutoff_range_hz", format_range(lfe_cutoff_range_hz)},
        {"lfe_gain_range", format_range(lfe_gain_range)},
        {"lfe_filter_order", std::to_string(lfe_filter_order)},
        {"rng_seed", std::to_string(rng_seed)},
    };
}

SurroundSimParams SurroundSimParams::from_key_values(const KeyValues& kv) {
    SurroundSimParams p;
    for (const auto& [key, value] : kv) {
        if (key == "p_center") p.p_center = parse_double(key, value);
        else if (key == "center_gain_range") p.center_gain_range = parse_range(key, value);
        else if (key == "front_gain_range") p.front_gain_range = parse_range(key, value);
        else if (key == "p_rear") p.p_rear = parse_double(key, value);
        else if (key == "rear_gain_range") p.rear_gain_range = parse_range(key, value);
        else if (key == "bleed_range") p.bleed_range = parse_range(key, value);
        else if (key == "lfe_cutoff_range_hz") p.lfe_cutoff_range_hz = parse_range(key, value);
        else if (key == "lfe_gain_range") p.lfe_gain_range = parse_range(key, value);
        else if (key == "lfe_filter_order") p.lfe_filter_order = static_cast<int>(parse_int(key, value));
        else if (key == "rng_seed") p.rng_seed = static_cast<std::uint64_t>(parse_int(key, value));
        else throw ConfigError("unknown surround simulation key '" + key + "'");
    }
    p.validate();
    return p;
}

SurroundSimResult simulate_surround(const AudioBuffer& speech, const AudioBuffer& primary, const AudioBuffer& secondary,
                                    const SurroundSimParams& params) {
    require_layout(speech, ChannelLayout::Mono, "simulate_surround speech");
    require_layout(primary, ChannelLayout::Stereo, "simulate_surround primary");
    require_layout(secondary, ChannelLayout::Stereo, "simulate_surround secondary");
    if (speech.sample_rate() != primary.sample_rate() || speech.sample_rate() != secondary.sample_rate()) {
        throw InputError("simulate_surround inputs have different sample rates");
    }
    if (speech.frames() != primary.frames() || speech.frames() != secondary.frames()) {
        throw InputError("simulate_surround inputs have different lengths");
    }
    params.validate();

    // Fixed draw order; every value is drawn whether or not it is used so the
    // stream position never depends on earlier outcomes.
    Rng rng(params.rng_seed);
    SurroundSimDraws d;
    d.center_active = rng.bernoulli(params.p_center);
    d.center_gain = draw(rng, params.center_gain_range);
    d.front_gain_l = draw(rng, params.front_gain_range);
    d.front_gain_r = draw(rng, params.front_gain_range);
    d.rear_active = rng.bernoulli(params.p_rear);
    d.rear_gain_l = draw(rng, params.rear_gain_range);
    d.rear_gain_r = draw(rng, params.rear_gain_range);
    for (std::size_t dst = 0; dst < 5; ++dst) {
        for (std::size_t src = 0; src < 5; ++src) {
            if (src != dst) d.bleed[dst][src] = draw(rng, params.bleed_range);
        }
    }
    d.lfe_cutoff_hz = draw(rng, params.lfe_cutoff_range_hz);
    d.lfe_gain = draw(rng, params.lfe_gain_range);
    if (!d.center_active) d.center_gain = 0.0;
    if (!d.rear_active) d.rear_gain_l = d.rear_gain_r = 0.0;

    const std::size_t n = speech.frames();
    auto scaled = [n](std::span<const float> x, double g) {
        std::vector<float> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<float>(g * x[i]);
        return y;
    };

    // Pre-bleed main channels in the order L, R, C, Ls, Rs.
    std::array<std::vector<float>, 5> dry = {
        scaled(primary.channel(0), d.front_gain_l),
        scaled(primary.channel(1), d.front_gain_r),
        scaled(speech.channel(0), d.center_gain),
        scaled(secondary.channel(0), d.rear_gain_l),
        scaled(secondary.channel(1), d.rear_gain_r),
    };
    const std::array<bool, 5> active = {true, true, d.center_active, d.rear_active, d.rear_active};

    // An inactive channel neither leaks nor receives leakage, so it stays silent.
    std::array<std::vector<float>, 5> wet = dry;
    for (std::size_t dst = 0; dst < 5; ++dst) {
        if (!active[dst]) continue;
        for (std::size_t src = 0; src < 5; ++src) {
            if (src == dst || !active[src]) continue;
            const double k = d.bleed[dst][src];
            for (std::size_t i = 0; i < n; ++i) wet[dst][i] = static_cast<float>(wet[dst][i] + k * dry[src][i]);
        }
    }

    std::vector<float> lfe_in(n, 0.0f);
    for (std::size_t ch = 0; ch < 5; ++ch) {
        if (!active[ch]) continue;
        for (std::size_t i = 0; i < n; ++i) lfe_in[i] += dry[ch][i];
    }
    const auto lp = dsp::butterworth_lowpass(params.lfe_filter_order, d.lfe_cutoff_hz, speech.sample_rate());
    auto lfe = dsp::filter_apply(lp, lfe_in);
    for (auto& v : lfe) v = static_cast<float>(d.lfe_gain * v);

    std::vector<std::vector<float>> out(6);
    out[kL] = std::move(wet[0]);
    out[kR] = std::move(wet[1]);
    out[kC] = std::move(wet[2]);
    out[kLfe] = std::move(lfe);
    out[kLs] = std::move(wet[3]);
    out[kRs] = std::move(wet[4]);
    return {AudioBuffer(speech.sample_rate(), ChannelLayout::Surround51, std::move(out)), d};
}

}  // namespace vcnac
