#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vcnac/bitstream.hpp"
#include "vcnac/codec.hpp"
#include "vcnac/dsp.hpp"
#include "vcnac/error.hpp"
#include "vcnac/metrics.hpp"
#include "vcnac/rvq.hpp"
#include "vcnac/spatial.hpp"

namespace py = pybind11;
using namespace vcnac;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<float> to_vec(const F32& a) {
    if (a.ndim() != 1) throw InputError("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

// [channels x samples] array -> AudioBuffer (layout from the channel count).
AudioBuffer to_audio(const F32& a, int sample_rate) {
    if (a.ndim() == 1) return AudioBuffer(sample_rate, ChannelLayout::Mono, {to_vec(a)});
    if (a.ndim() != 2) throw InputError("audio must be 1-D or [channels, samples]");
    const auto c = static_cast<std::size_t>(a.shape(0)), n = static_cast<std::size_t>(a.shape(1));
    std::vector<std::vector<float>> ch(c);
    for (std::size_t i = 0; i < c; ++i) ch[i].assign(a.data() + i * n, a.data() + (i + 1) * n);
    return AudioBuffer(sample_rate, layout_for_channels(static_cast<int>(c)), std::move(ch));
}

F32 from_audio(const AudioBuffer& b) {
    F32 out({static_cast<py::ssize_t>(b.channels()), static_cast<py::ssize_t>(b.frames())});
    auto* p = out.mutable_data();
    for (std::size_t c = 0; c < static_cast<std::size_t>(b.channels()); ++c)
        std::copy(b.channel(c).begin(), b.channel(c).end(), p + c * b.frames());
    return out;
}

F32 from_vec(const std::vector<float>& v) {
    F32 out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

LatentSequence to_latents(const F32& a) {
    if (a.ndim() != 2) throw InputError("latents must be [frames, dim]");
    LatentSequence z(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), z.values.begin());
    return z;
}

F32 from_latents(const LatentSequence& z) {
    F32 out({static_cast<py::ssize_t>(z.frames), static_cast<py::ssize_t>(z.dim)});
    std::copy(z.values.begin(), z.values.end(), out.mutable_data());
    return out;
}

using U32 = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

CodeIndices to_codes(const U32& a) {
    if (a.ndim() != 2) throw InputError("codes must be [frames, n_codebooks]");
    CodeIndices c{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), {}};
    c.indices.assign(a.data(), a.data() + a.size());
    return c;
}

U32 from_codes(const CodeIndices& c) {
    U32 out({static_cast<py::ssize_t>(c.frames), static_cast<py::ssize_t>(c.n_used)});
    std::copy(c.indices.begin(), c.indices.end(), out.mutable_data());
    return out;
}

CodecConfig config_from(const std::string& name_or_path) { return CodecConfig::from_preset_or_file(name_or_path); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Core bindings for the vcnac codec toolkit";

    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    static py::exception<InputError> input(m, "InputError", base.ptr());
    static py::exception<FormatError> format(m, "FormatError", base.ptr());
    static py::exception<IoError> io(m, "IoError", base.ptr());
    static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InputError& e) {
            py::set_error(input, e.what());
        } catch (const FormatError& e) {
            py::set_error(format, e.what());
        } catch (const IoError& e) {
            py::set_error(io, e.what());
        } catch (const ConfigError& e) {
            py::set_error(config, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    m.attr("SAMPLE_RATE") = kCodecSampleRate;
    m.attr("HOP") = 1920;
    m.attr("LATENT_DIM") = kLatentDim;
    m.attr("MAX_CODEBOOKS") = kMaxCodebooks;

    // bitstream
    m.def("bits_per_frame", &bits_per_frame, py::arg("n_codebooks"));
    m.def("bitrate", &bitrate, py::arg("n_codebooks"), py::arg("frame_rate_hz") = 25.0);
    m.def("pack", [](const U32& codes, int sample_rate, const std::string& layout, std::uint64_t digest) {
        StreamHeader h;
        h.sample_rate = static_cast<std::uint32_t>(sample_rate);
        h.source_layout = parse_layout(layout);
        h.config_digest = digest;
        const auto bytes = pack(to_codes(codes), h);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }, py::arg("codes"), py::arg("sample_rate") = kCodecSampleRate, py::arg("layout") = "mono", py::arg("digest") = 0);
    m.def("unpack", [](py::bytes data, std::optional<std::uint64_t> expected_digest) {
        const std::string s = data;
        const auto u = unpack(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()), expected_digest);
        py::dict header;
        header["sample_rate"] = u.header.sample_rate;
        header["source_layout"] = std::string(layout_name(u.header.source_layout));
        header["n_codebooks"] = u.header.n_codebooks;
        header["n_frames"] = u.header.n_frames;
        header["digest"] = u.header.config_digest;
        return py::make_tuple(header, from_codes(u.codes));
    }, py::arg("data"), py::arg("expected_digest") = py::none());

    // spatial
    m.def("mid_side", [](const F32& stereo) {
        const auto ms = mid_side(to_audio(stereo, kCodecSampleRate));
        return py::make_tuple(from_vec(ms.mid), from_vec(ms.side));
    });
    m.def("inverse_mid_side", [](const F32& mid, const F32& side) {
        return from_audio(inverse_mid_side(to_vec(mid), to_vec(side)));
    });
    m.def("downmix_51_to_stereo", [](const F32& surround, double c, double s, double lfe) {
        DownmixCoeffs k{c, s, lfe};
        return from_audio(downmix_51_to_stereo(to_audio(surround, kCodecSampleRate), k));
    }, py::arg("surround"), py::arg("center_gain") = DownmixCoeffs{}.center_gain,
       py::arg("surround_gain") = DownmixCoeffs{}.surround_gain, py::arg("lfe_gain") = 0.0);
    m.def("simulate_surround", [](const F32& speech, const F32& primary, const F32& secondary, std::uint64_t seed,
                                  const std::map<std::string, std::string>& params) {
        auto p = SurroundSimParams::from_key_values(params);
        p.rng_seed = seed;
        const auto r = simulate_surround(to_audio(speech, kCodecSampleRate), to_audio(primary, kCodecSampleRate),
                                         to_audio(secondary, kCodecSampleRate), p);
        py::dict d;
        d["center_active"] = r.draws.center_active;
        d["center_gain"] = r.draws.center_gain;
        d["front_gain_l"] = r.draws.front_gain_l;
        d["front_gain_r"] = r.draws.front_gain_r;
        d["rear_active"] = r.draws.rear_active;
        d["rear_gain_l"] = r.draws.rear_gain_l;
        d["rear_gain_r"] = r.draws.rear_gain_r;
        d["bleed"] = r.draws.bleed;
        d["lfe_cutoff_hz"] = r.draws.lfe_cutoff_hz;
        d["lfe_gain"] = r.draws.lfe_gain;
        return py::make_tuple(from_audio(r.audio), d);
    }, py::arg("speech"), py::arg("primary"), py::arg("secondary"), py::arg("seed") = 0,
       py::arg("params") = std::map<std::string, std::string>{});

    // dsp
    m.def("stft", [](const F32& x, std::size_t n_fft, std::size_t hop) {
        const auto s = dsp::stft(to_vec(x), {n_fft, hop});
        py::array_t<std::complex<float>> out({static_cast<py::ssize_t>(s.frames), static_cast<py::ssize_t>(s.bins)});
        std::copy(s.values.begin(), s.values.end(), out.mutable_data());
        return out;
    }, py::arg("x"), py::arg("n_fft") = 2048, py::arg("hop") = 512);
    m.def("butterworth_lowpass", [](const F32& x, int order, double cutoff_hz, double sample_rate) {
        return from_vec(dsp::filter_apply(dsp::butterworth_lowpass(order, cutoff_hz, sample_rate), to_vec(x)));
    }, py::arg("x"), py::arg("order"), py::arg("cutoff_hz"), py::arg("sample_rate") = 48000.0);

    // metrics
    m.def("si_snr", [](const F32& r, const F32& e) { return metrics::si_snr(to_vec(r), to_vec(e)); });
    m.def("si_sdr", [](const F32& r, const F32& e) { return metrics::si_sdr(to_vec(r), to_vec(e)); });
    m.def("mel_distance", [](const F32& r, const F32& e) { return metrics::multiscale_mel_distance(to_vec(r), to_vec(e)); });
    m.def("stft_distance", [](const F32& r, const F32& e) { return metrics::stft_distance(to_vec(r), to_vec(e)); });
    m.def("delta_ipd", [](const F32& ref, const F32& est) {
        const auto a = to_audio(ref, kCodecSampleRate), b = to_audio(est, kCodecSampleRate);
        if (a.channels() != 2 || b.channels() != 2) throw LayoutError("delta_ipd needs stereo arrays");
        return metrics::delta_ipd({a.channel(0), a.channel(1)}, {b.channel(0), b.channel(1)});
    });
    m.def("delta_ild", [](const F32& ref, const F32& est) {
        const auto a = to_audio(ref, kCodecSampleRate), b = to_audio(est, kCodecSampleRate);
        if (a.channels() != 2 || b.channels() != 2) throw LayoutError("delta_ild needs stereo arrays");
        return metrics::delta_ild({a.channel(0), a.channel(1)}, {b.channel(0), b.channel(1)});
    });

    // codec
    m.def("param_count", [](const std::string& config) {
        const auto pc = param_count(config_from(config));
        py::dict d;
        d["encoder"] = pc.encoder;
        d["decoder"] = pc.decoder;
        d["quantizer"] = pc.quantizer;
        d["embeddings"] = pc.embeddings;
        d["total"] = pc.total();
        d["decoder_encoder_ratio"] = pc.decoder_encoder_ratio();
        return d;
    }, py::arg("config") = "full");
    m.def("init_weights", [](const std::string& config, const std::string& path, std::uint64_t seed) {
        nn::save_weights(random_init(config_from(config), seed), path);
    }, py::arg("config"), py::arg("path"), py::arg("seed") = 0);

    py::class_<Codec>(m, "Codec")
        .def(py::init([](const std::string& config, std::uint64_t seed) {
                 auto c = config_from(config);
                 auto w = random_init(c, seed);
                 return Codec(std::move(c), std::move(w));
             }),
             py::arg("config") = "tiny", py::arg("seed") = 0, "Codec with deterministic random weights")
        .def_static("load", [](const std::string& weights_path, const std::string& config) {
                 return Codec(config_from(config), nn::load_weights(weights_path));
             }, py::arg("weights_path"), py::arg("config") = "tiny")
        .def_property_readonly("weights_digest", [](const Codec& c) { return c.weights().digest(); })
        .def_property_readonly("frame_rate", [](const Codec& c) { return c.config().frame_rate(); })
        .def("embeddings", [](const Codec& c, const std::string& which) {
            const auto& t = which == "decoder" ? c.decoder_embeddings() : c.encoder_embeddings();
            F32 out({static_cast<py::ssize_t>(t.dim(0)), static_cast<py::ssize_t>(t.dim(1))});
            std::copy(t.data().begin(), t.data().end(), out.mutable_data());
            return out;
        }, py::arg("which") = "encoder")
        .def("encode", [](const Codec& c, const F32& audio, int sample_rate, std::vector<std::size_t> slots) {
            const auto in = to_audio(audio, sample_rate);
            LatentSequence z;
            {
                py::gil_scoped_release nogil;
                z = c.encode(in, slots);
            }
            return from_latents(z);
        }, py::arg("audio"), py::arg("sample_rate") = kCodecSampleRate, py::arg("slots") = std::vector<std::size_t>{})
        .def("decode", [](const Codec& c, const F32& latents, const std::string& layout) {
            const auto z = to_latents(latents);
            const auto target = parse_layout(layout);
            AudioBuffer y;
            {
                py::gil_scoped_release nogil;
                y = c.decode(z, target);
            }
            return from_audio(y);
        }, py::arg("latents"), py::arg("layout"))
        .def("quantize", [](const Codec& c, const F32& latents, std::size_t n) {
            const auto q = quantize(to_latents(latents), c.rvq(), n);
            return py::make_tuple(from_codes(q.codes), from_latents(q.quantized), q.residual_energy);
        }, py::arg("latents"), py::arg("n_codebooks") = kMaxCodebooks)
        .def("dequantize", [](const Codec& c, const U32& codes) {
            const auto ci = to_codes(codes);
            return from_latents(dequantize(ci, c.rvq(), ci.n_used));
        }, py::arg("codes"));
}
