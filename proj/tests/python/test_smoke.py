import numpy as np
import pytest

import vcnac


@pytest.fixture(scope="module")
def codec():
    return vcnac.Codec("tiny", seed=3)


def noise(shape, seed=0):
    return np.random.default_rng(seed).uniform(-0.5, 0.5, shape).astype(np.float32)


def test_constants():
    assert vcnac.SAMPLE_RATE == 48000
    assert vcnac.HOP == 1920
    assert vcnac.bits_per_frame(26) == 314
    assert vcnac.bitrate(26) == 7850.0


@pytest.mark.parametrize("channels", [1, 2, 6])
def test_encode_decode_shapes(codec, channels):
    audio = noise((channels, 48000))
    z = codec.encode(audio)
    assert z.shape == (25, 16)
    for layout, n in [("mono", 1), ("stereo", 2), ("surround51", 6)]:
        assert codec.decode(z, layout).shape == (n, 25 * 1920)


def test_quantize_pack_roundtrip(codec):
    z = codec.encode(noise((2, 9600), 1))
    codes, zq, energy = codec.quantize(z, 26)
    assert codes.shape == (5, 26)
    assert all(b <= a for a, b in zip(energy, energy[1:]))
    np.testing.assert_array_equal(codec.dequantize(codes), zq)
    blob = vcnac.pack(codes, layout="stereo", digest=codec.weights_digest)
    header, back = vcnac.unpack(blob, codec.weights_digest)
    assert header["n_frames"] == 5 and header["source_layout"] == "stereo"
    np.testing.assert_array_equal(back, codes)
    with pytest.raises(vcnac.ConfigError):
        vcnac.unpack(blob, codec.weights_digest ^ 1)
    with pytest.raises(vcnac.FormatError):
        vcnac.unpack(blob[:-1])


def test_errors_map_to_python_exceptions(codec):
    with pytest.raises(vcnac.InputError, match="unsupported sample rate"):
        codec.encode(noise((1, 100)), sample_rate=44100)
    with pytest.raises(vcnac.FormatError):
        codec.encode(noise((3, 100)))
    assert issubclass(vcnac.InputError, vcnac.Error)


def test_embeddings_orthogonal(codec):
    for which in ("encoder", "decoder"):
        e = codec.embeddings(which).astype(np.float64)
        gram = e @ e.T
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() < 1e-6
        np.testing.assert_allclose(np.sqrt(np.diag(gram)), 0.01 * np.sqrt(e.shape[1]), rtol=1e-5)


def test_param_budget():
    pc = vcnac.param_count("full")
    assert 1.8 <= pc["decoder_encoder_ratio"] <= 2.2


def test_spatial_ops():
    st = noise((2, 1000), 2)
    mid, side = vcnac.mid_side(st)
    np.testing.assert_allclose(vcnac.inverse_mid_side(mid, side), st, atol=1e-7)
    s51 = np.zeros((6, 4), np.float32)
    s51[2, 0] = 1.0
    np.testing.assert_allclose(vcnac.downmix_51_to_stereo(s51)[:, 0], [0.70710678, 0.70710678], rtol=1e-6)


def test_simulator_deterministic():
    speech, bed = noise(4800, 3), noise((2, 4800), 4)
    a, da = vcnac.simulate_surround(speech, bed, bed, seed=9)
    b, db = vcnac.simulate_surround(speech, bed, bed, seed=9)
    np.testing.assert_array_equal(a, b)
    assert da == db and 80 <= da["lfe_cutoff_hz"] <= 120
    c, _ = vcnac.simulate_surround(speech, bed, bed, seed=9, params={"p_center": "0"})
    assert not c[2].any()


def test_metrics_and_dsp():
    x = noise(9600, 5)
    assert vcnac.si_snr(x, x) == 100.0
    assert vcnac.mel_distance(x, x) == 0.0
    assert vcnac.stft_distance(x, x) == 0.0
    st = noise((2, 9600), 6)
    assert vcnac.delta_ild(st, st) == 0.0
    assert vcnac.delta_ipd(st, st * np.array([[1], [-1]], np.float32)) == pytest.approx(np.pi, abs=0.05)
    spec = vcnac.stft(x, 512, 128)
    ref = np.fft.rfft(np.hanning(513)[:-1] * np.pad(x, 256, mode="reflect")[:512])
    np.testing.assert_allclose(spec[0], ref, rtol=1e-4, atol=1e-4)
    y = vcnac.butterworth_lowpass(np.ones(48000, np.float32), 4, 100.0)
    assert y[-1] == pytest.approx(1.0, abs=1e-4)
