// vcnac command-line tool. Machine-readable results go to stdout (JSON lines,
// or key=value for encode); human-readable notes go to stderr.
// Exit codes: 0 ok, 2 usage/contract error, 3 data/format error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>

#include "vcnac/bitstream.hpp"
#include "vcnac/codec.hpp"
#include "vcnac/error.hpp"
#include "vcnac/hash.hpp"
#include "vcnac/metrics.hpp"
#include "vcnac/rvq.hpp"
#include "vcnac/spatial.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vcnac;

namespace {

constexpr int kExitContract = 2;
constexpr int kExitData = 3;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void emit(const json& j) { std::cout << j.dump() << "\n"; }

// Config from --config, or the preset whose digest the weight file was built for.
CodecConfig resolve_config(const std::string& config_arg, const nn::WeightStore& weights) {
    if (!config_arg.empty()) return CodecConfig::from_preset_or_file(config_arg);
    for (const char* preset : {"tiny", "full"}) {
        auto c = CodecConfig::from_preset_or_file(preset);
        if (c.digest() == weights.config_digest()) return c;
    }
    throw ConfigError("weights were built for a non-preset codec config; pass --config");
}

Codec load_codec(const std::string& weights_path, const std::string& config_arg) {
    auto weights = nn::load_weights(weights_path);
    auto config = resolve_config(config_arg, weights);
    return Codec(std::move(config), std::move(weights));
}

// ---- encode / decode -----------------------------------------------------

struct EncodeArgs {
    std::string input, output, weights, config;
    int codebooks = 26;
};

int cmd_encode(const EncodeArgs& a) {
    if (a.codebooks < 1 || a.codebooks > static_cast<int>(kMaxCodebooks)) {
        throw InputError("--codebooks out of range: " + std::to_string(a.codebooks) + " (expected 1..26)");
    }
    const auto audio = read_wav(a.input);
    if (audio.sample_rate() != kCodecSampleRate) {
        throw InputError("unsupported sample rate " + std::to_string(audio.sample_rate()) + " Hz (expected 48000)");
    }
    const auto codec = load_codec(a.weights, a.config);
    if (!codec.config().rvq.is_standard()) throw ConfigError("bitstreams need the standard 26-stage quantizer");
    const auto n = static_cast<std::size_t>(a.codebooks);
    const auto latents = codec.encode(audio);
    const auto q = quantize(latents, codec.rvq(), n);
    StreamHeader h;
    h.sample_rate = static_cast<std::uint32_t>(audio.sample_rate());
    h.source_layout = audio.layout();
    h.config_digest = codec.weights().digest();
    write_file_bytes(a.output, pack(q.codes, h));
    std::cout << "frames=" << latents.frames << " bits_per_frame=" << bits_per_frame(n)
              << " bitrate=" << format_double(bitrate(n, codec.config().frame_rate())) << "\n";
    std::cerr << "encoded " << audio.channels() << "-channel input, " << audio.frames() << " samples\n";
    return 0;
}

struct DecodeArgs {
    std::string input, output, weights, config, layout;
};

int cmd_decode(const DecodeArgs& a) {
    const auto target = parse_layout(a.layout);
    const auto codec = load_codec(a.weights, a.config);
    const auto bytes = read_file_bytes(a.input);
    const auto stream = unpack(bytes, codec.weights().digest());
    auto latents = dequantize(stream.codes, codec.rvq(), stream.header.n_codebooks);
    latents.source_layout = stream.header.source_layout;
    write_wav(codec.decode(latents, target), a.output);
    std::cerr << "decoded " << stream.header.n_frames << " frames from " << layout_name(stream.header.source_layout)
              << " to " << layout_name(target) << "\n";
    return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string speech, primary, secondary, output, params;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
    SurroundSimParams p;
    if (!a.params.empty()) p = SurroundSimParams::from_key_values(read_key_values(a.params));
    if (a.seed) p.rng_seed = *a.seed;
    const auto result = simulate_surround(read_wav(a.speech), read_wav(a.primary), read_wav(a.secondary), p);
    write_wav(result.audio, a.output);
    const auto& d = result.draws;
    json bleed = json::array();
    for (const auto& row : d.bleed) bleed.push_back(row);
    emit({{"seed", p.rng_seed},
          {"center_active", d.center_active},
          {"center_gain", d.center_gain},
          {"front_gain_l", d.front_gain_l},
          {"front_gain_r", d.front_gain_r},
          {"rear_active", d.rear_active},
          {"rear_gain_l", d.rear_gain_l},
          {"rear_gain_r", d.rear_gain_r},
          {"bleed_order", {"L", "R", "C", "Ls", "Rs"}},
          {"bleed", bleed},
          {"lfe_cutoff_hz", d.lfe_cutoff_hz},
          {"lfe_gain", d.lfe_gain}});
    return 0;
}

// ---- metrics ---------------------------------------------------------------

struct MetricsArgs {
    std::string reference, estimate, set, params;
};

struct MetricSettings {
    metrics::MultiScaleMelParams mel;
    metrics::StftDistanceParams stft;
    metrics::SpatialMetricParams spatial;
};

MetricSettings metric_settings(const std::string& path, int sample_rate) {
    MetricSettings s;
    s.mel.sample_rate = sample_rate;
    s.spatial.sample_rate = sample_rate;
    if (path.empty()) return s;
    for (const auto& [key, value] : read_key_values(path)) {
        if (key == "mel_eps") s.mel.eps = parse_double(key, value);
        else if (key == "stft_eps") s.stft.eps = parse_double(key, value);
        else if (key == "spatial_n_fft") s.spatial.n_fft = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "spatial_hop") s.spatial.hop = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "spatial_n_mels") s.spatial.n_mels = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "spatial_eps") s.spatial.eps = parse_double(key, value);
        else if (key == "active_bin_threshold") s.spatial.active_bin_threshold = parse_double(key, value);
        else throw ConfigError("unknown metric parameter '" + key + "'");
    }
    s.mel.validate();
    s.spatial.validate();
    return s;
}

json mel_params_json(const metrics::MultiScaleMelParams& p) {
    json scales = json::array();
    for (const auto& s : p.scales) scales.push_back({{"n_fft", s.n_fft}, {"hop", s.hop}, {"n_mels", s.n_mels}});
    return {{"scales", scales}, {"eps", p.eps}, {"log", "natural"}};
}

json stft_params_json(const metrics::StftDistanceParams& p) {
    json scales = json::array();
    for (const auto& s : p.scales) scales.push_back({{"n_fft", s.n_fft}, {"hop", s.hop}});
    return {{"scales", scales}, {"eps", p.eps}, {"log", "natural"}};
}

json spatial_params_json(const metrics::SpatialMetricParams& p) {
    return {{"n_fft", p.n_fft}, {"hop", p.hop}, {"n_mels", p.n_mels}, {"eps", p.eps},
            {"active_bin_threshold", p.active_bin_threshold}};
}

using ChannelMetric = std::function<double(std::span<const float>, std::span<const float>)>;

// Mean over channels; a metric that is undefined on some channel yields null.
json channel_mean(const std::vector<std::span<const float>>& ref, const std::vector<std::span<const float>>& est,
                  const ChannelMetric& fn, std::string& error) {
    double sum = 0.0;
    try {
        for (std::size_t c = 0; c < ref.size(); ++c) sum += fn(ref[c], est[c]);
    } catch (const MetricError& e) {
        error = e.what();
        return nullptr;
    }
    return sum / static_cast<double>(ref.size());
}

void emit_group(const std::string& set, const std::string& group, const std::vector<std::span<const float>>& ref,
                const std::vector<std::span<const float>>& est, const MetricSettings& s, bool spatial,
                bool low_reliability) {
    auto line = [&](const char* name, const char* unit, json value, json params, const std::string& error) {
        json j{{"set", set}, {"group", group}, {"metric", name}, {"value", value}, {"unit", unit}, {"params", params}};
        if (low_reliability) j["low_reliability"] = true;
        if (!error.empty()) j["error"] = error;
        emit(j);
    };
    std::string err;
    line("si_sdr", "dB", channel_mean(ref, est, metrics::si_sdr, err), json{{"cap_db", metrics::kDbCap}}, err);
    err.clear();
    line("si_snr", "dB", channel_mean(ref, est, metrics::si_snr, err), json{{"cap_db", metrics::kDbCap}}, err);
    err.clear();
    line("mel_distance", "log-mel", channel_mean(ref, est,
         [&](auto r, auto e) { return metrics::multiscale_mel_distance(r, e, s.mel); }, err), mel_params_json(s.mel), err);
    err.clear();
    line("stft_distance", "log-mag", channel_mean(ref, est,
         [&](auto r, auto e) { return metrics::stft_distance(r, e, s.stft); }, err), stft_params_json(s.stft), err);
    if (spatial) {
        const metrics::ChannelPair r{ref[0], ref[1]}, e{est[0], est[1]};
        line("delta_ipd", "rad", metrics::delta_ipd(r, e, s.spatial), spatial_params_json(s.spatial), "");
        line("delta_ild", "dB", metrics::delta_ild(r, e, s.spatial), spatial_params_json(s.spatial), "");
    }
}

int cmd_metrics(const MetricsArgs& a) {
    const auto ref = read_wav(a.reference);
    const auto est = read_wav(a.estimate);
    if (ref.layout() != est.layout()) {
        throw LayoutError("reference is " + std::string(layout_name(ref.layout())) + ", estimate is " +
                          std::string(layout_name(est.layout())));
    }
    if (ref.sample_rate() != est.sample_rate()) throw InputError("reference and estimate sample rates differ");
    const std::size_t n = std::min(ref.frames(), est.frames());
    const std::size_t diff = std::max(ref.frames(), est.frames()) - n;
    if (diff > 1920) {
        throw InputError("length mismatch of " + std::to_string(diff) + " samples exceeds one codec frame (1920)");
    }
    if (diff > 0) std::cerr << "warning: trimming " << diff << " samples so both signals have " << n << "\n";

    const auto settings = metric_settings(a.params, ref.sample_rate());
    auto pick = [&](std::initializer_list<std::size_t> chans, const AudioBuffer& b) {
        std::vector<std::span<const float>> out;
        for (auto c : chans) out.push_back(b.channel(c).first(n));
        return out;
    };
    if (a.set == "speech") {
        std::vector<std::size_t> all(static_cast<std::size_t>(ref.channels()));
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::vector<std::span<const float>> r, e;
        for (auto c : all) {
            r.push_back(ref.channel(c).first(n));
            e.push_back(est.channel(c).first(n));
        }
        emit_group("speech", "all", r, e, settings, false, false);
        emit({{"set", "speech"}, {"group", "all"}, {"metric", "pesq"}, {"value", nullptr}, {"unit", "MOS-LQO"},
              {"available", false}, {"error", "PESQ is not implemented in this toolkit"}});
    } else if (a.set == "stereo") {
        if (ref.layout() != ChannelLayout::Stereo) throw LayoutError("the stereo metric set needs stereo input");
        emit_group("stereo", "L/R", pick({0, 1}, ref), pick({0, 1}, est), settings, true, false);
    } else if (a.set == "surround") {
        if (ref.layout() != ChannelLayout::Surround51) throw LayoutError("the surround metric set needs 5.1 input");
        emit_group("surround", "Front L/R", pick({kL, kR}, ref), pick({kL, kR}, est), settings, true, false);
        emit_group("surround", "Center", pick({kC}, ref), pick({kC}, est), settings, false, false);
        emit_group("surround", "Rear L/R", pick({kLs, kRs}, ref), pick({kLs, kRs}, est), settings, true, false);
        emit_group("surround", "LFE", pick({kLfe}, ref), pick({kLfe}, est), settings, false, true);
    } else {
        throw InputError("unknown metric set '" + a.set + "'");
    }
    return 0;
}

// ---- weights and latents ---------------------------------------------------

struct InitArgs {
    std::string config, output;
    std::uint64_t seed = 0;
};

int cmd_init_weights(const InitArgs& a) {
    const auto config = CodecConfig::from_preset_or_file(a.config);
    const auto store = random_init(config, a.seed);
    nn::save_weights(store, a.output);
    const auto pc = param_count(config);
    emit({{"file", a.output},
          {"config_digest", hex64(config.digest())},
          {"weights_digest", hex64(store.digest())},
          {"params_total", pc.total()},
          {"params_encoder", pc.encoder},
          {"params_decoder", pc.decoder},
          {"params_quantizer", pc.quantizer},
          {"params_embeddings", pc.embeddings},
          {"decoder_encoder_ratio", pc.decoder_encoder_ratio()}});
    return 0;
}

struct ExtractArgs {
    std::vector<std::string> inputs;
    std::string out_dir, weights, config;
};

int cmd_extract_latents(const ExtractArgs& a) {
    const auto codec = load_codec(a.weights, a.config);
    fs::create_directories(a.out_dir);
    for (const auto& in : a.inputs) {
        const auto z = codec.encode(read_wav(in));
        const auto path = (fs::path(a.out_dir) / fs::path(in).stem()).string() + ".f32";
        std::vector<std::uint8_t> bytes(z.values.size() * 4);
        for (std::size_t i = 0; i < z.values.size(); ++i) {
            std::uint32_t u;
            std::memcpy(&u, &z.values[i], 4);
            for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(u >> (8 * b));
        }
        write_file_bytes(path, bytes);
        emit({{"input", in}, {"output", path}, {"frames", z.frames}, {"dim", z.dim}});
    }
    return 0;
}

std::vector<float> read_latent_dir(const std::string& dir, std::size_t dim) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".f32") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .f32 latent files in " + dir);
    std::vector<float> out;
    for (const auto& f : files) {
        const auto bytes = read_file_bytes(f.string());
        if (bytes.size() % (4 * dim) != 0) {
            throw FormatError(f.string() + ": size is not a whole number of " + std::to_string(dim) + "-dim frames");
        }
        for (std::size_t i = 0; i < bytes.size(); i += 4) {
            std::uint32_t u = 0;
            for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[i + b]) << (8 * b);
            float v;
            std::memcpy(&v, &u, 4);
            if (!std::isfinite(v)) throw FormatError(f.string() + ": non-finite latent value");
            out.push_back(v);
        }
    }
    return out;
}

struct FitArgs {
    std::string latents_dir, output, config, weights;
    std::size_t iters = 20;
    std::uint64_t seed = 0;
    std::size_t stages = kMaxCodebooks;
};

int cmd_fit_codebooks(const FitArgs& a) {
    nn::WeightStore store;
    CodecConfig config;
    if (!a.weights.empty()) {
        store = nn::load_weights(a.weights);
        config = resolve_config(a.config, store);
        if (config.digest() != store.config_digest()) throw ConfigError("--weights do not match --config");
    } else {
        config = CodecConfig::from_preset_or_file(a.config.empty() ? "tiny" : a.config);
        store = nn::WeightStore(config.digest());
    }
    const auto samples = read_latent_dir(a.latents_dir, config.latent_dim);
    const std::size_t stages = std::min(a.stages, config.rvq.n_codebooks());
    KMeansTrace trace;
    const auto stack = fit_codebooks_kmeans(samples, config.rvq, a.iters, a.seed, &trace, stages);
    stack.store_into(store);
    nn::save_weights(store, a.output);

    LatentSequence z(samples.size() / config.latent_dim, config.latent_dim);
    z.values = samples;
    const auto q = quantize(z, stack, stages);
    const auto stats = codebook_stats(q.codes, config.rvq);
    for (std::size_t s = 0; s < stages; ++s) {
        emit({{"stage", s},
              {"size", config.rvq.sizes[s]},
              {"usage", stats[s].usage},
              {"perplexity", stats[s].perplexity},
              {"residual_energy", q.residual_energy[s]},
              {"kmeans_objective", trace.objective[s].empty() ? json(nullptr) : json(trace.objective[s].back())}});
    }
    std::cerr << "fitted " << stages << " stage(s) on " << z.frames << " frames; wrote " << a.output << "\n";
    return 0;
}

int cmd_info(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    const std::string magic(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, bytes.size())));
    if (magic == "VCNB") {
        const auto s = unpack(bytes);
        const auto& h = s.header;
        emit({{"type", "VCNB"},
              {"version", StreamHeader::kVersion},
              {"sample_rate", h.sample_rate},
              {"source_layout", layout_name(h.source_layout)},
              {"n_codebooks", h.n_codebooks},
              {"n_frames", h.n_frames},
              {"bits_per_frame", bits_per_frame(h.n_codebooks)},
              {"bitrate", bitrate(h.n_codebooks, static_cast<double>(h.sample_rate) / 1920.0)},
              {"duration_s", h.n_frames / 25.0},
              {"weights_digest", hex64(h.config_digest)},
              {"bytes", bytes.size()}});
    } else if (magic == "VCNW") {
        const auto store = nn::WeightStore::deserialize(bytes);
        emit({{"type", "VCNW"},
              {"version", nn::WeightStore::kVersion},
              {"config_digest", hex64(store.config_digest())},
              {"weights_digest", hex64(store.digest())},
              {"tensors", store.tensors().size()},
              {"parameters", store.parameter_count()}});
        for (const auto& [name, t] : store.tensors()) emit({{"name", name}, {"shape", t.shape()}});
    } else {
        throw FormatError(path + ": not a VCNB or VCNW file");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vcnac: variable-channel neural audio codec toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    EncodeArgs enc;
    auto* c_enc = app.add_subcommand("encode", "WAV -> VCNB bitstream");
    c_enc->add_option("input", enc.input, "48 kHz WAV (1, 2 or 6 channels)")->required();
    c_enc->add_option("output", enc.output, "output .vcnb")->required();
    c_enc->add_option("--codebooks,-n", enc.codebooks, "quantizer stages to use (1..26)");
    c_enc->add_option("--weights,-w", enc.weights, "VCNW weight file")->required();
    c_enc->add_option("--config", enc.config, "preset (tiny|full) or key=value file; default: matched from weights");

    DecodeArgs dec;
    auto* c_dec = app.add_subcommand("decode", "VCNB bitstream -> WAV");
    c_dec->add_option("input", dec.input)->required();
    c_dec->add_option("output", dec.output)->required();
    c_dec->add_option("--layout", dec.layout, "mono | stereo | surround51")->required();
    c_dec->add_option("--weights,-w", dec.weights)->required();
    c_dec->add_option("--config", dec.config);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "synthesize a 5.1 mix from speech and two stereo beds");
    c_sim->add_option("speech", sim.speech, "mono speech WAV")->required();
    c_sim->add_option("primary", sim.primary, "stereo bed for the fronts")->required();
    c_sim->add_option("secondary", sim.secondary, "stereo bed for the rears")->required();
    c_sim->add_option("output", sim.output)->required();
    c_sim->add_option("--seed", sim.seed, "overrides rng_seed from --params");
    c_sim->add_option("--params", sim.params, "key=value parameter file");

    MetricsArgs met;
    auto* c_met = app.add_subcommand("metrics", "objective metrics as JSON lines");
    c_met->add_option("reference", met.reference)->required();
    c_met->add_option("estimate", met.estimate)->required();
    c_met->add_option("--set", met.set, "speech | stereo | surround")->required();
    c_met->add_option("--params", met.params, "key=value metric parameter overrides");

    InitArgs ini;
    auto* c_ini = app.add_subcommand("init-weights", "write randomly initialised weights");
    c_ini->add_option("config", ini.config, "preset (tiny|full) or key=value file")->required();
    c_ini->add_option("output", ini.output)->required();
    c_ini->add_option("--seed", ini.seed);

    ExtractArgs ext;
    auto* c_ext = app.add_subcommand("extract-latents", "encode WAVs to raw float32 latent files");
    c_ext->add_option("inputs", ext.inputs)->required();
    c_ext->add_option("--out-dir", ext.out_dir)->required();
    c_ext->add_option("--weights,-w", ext.weights)->required();
    c_ext->add_option("--config", ext.config);

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit-codebooks", "stage-wise k-means on a directory of .f32 latents");
    c_fit->add_option("latents_dir", fit.latents_dir)->required();
    c_fit->add_option("output", fit.output, "output VCNW")->required();
    c_fit->add_option("--iters", fit.iters);
    c_fit->add_option("--seed", fit.seed);
    c_fit->add_option("--stages", fit.stages, "fit only the first N stages; the rest stay zero");
    c_fit->add_option("--config", fit.config, "codec config giving the quantizer sizes (default: tiny, or matched from --weights)");
    c_fit->add_option("--weights,-w", fit.weights, "replace the codebooks inside this weight file");

    std::string info_path;
    auto* c_info = app.add_subcommand("info", "describe a VCNB or VCNW file");
    c_info->add_option("file", info_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitContract;
    }

    try {
        if (*c_enc) return cmd_encode(enc);
        if (*c_dec) return cmd_decode(dec);
        if (*c_sim) return cmd_simulate(sim);
        if (*c_met) return cmd_metrics(met);
        if (*c_ini) return cmd_init_weights(ini);
        if (*c_ext) return cmd_extract_latents(ext);
        if (*c_fit) return cmd_fit_codebooks(fit);
        if (*c_info) return cmd_info(info_path);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitContract;
}
