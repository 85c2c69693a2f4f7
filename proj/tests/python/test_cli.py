import hashlib
import json
import os
import struct
import subprocess

import numpy as np
import pytest

CLI = os.environ.get("VCNAC_CLI", "vcnac")


def run(*args, check=None):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check is not None:
        assert p.returncode == check, p.stderr
    return p


def write_wav(path, data, sr=48000):
    data = np.atleast_2d(np.asarray(data, np.float32))
    ch, _ = data.shape
    body = data.T.reshape(-1).tobytes()
    hdr = b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
    hdr += b"fmt " + struct.pack("<IHHIIHH", 16, 3, ch, sr, sr * ch * 4, ch * 4, 32)
    hdr += b"data" + struct.pack("<I", len(body))
    path.write_bytes(hdr + body)
    return path


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(0)
    write_wav(d / "mono.wav", rng.uniform(-0.5, 0.5, 48000))
    write_wav(d / "stereo.wav", rng.uniform(-0.5, 0.5, (2, 48000)))
    write_wav(d / "s51.wav", rng.uniform(-0.5, 0.5, (6, 48000)))
    write_wav(d / "m441.wav", rng.uniform(-0.5, 0.5, 44100), sr=44100)
    run("init-weights", "tiny", d / "w.vcnw", "--seed", 1, check=0)
    return d


def test_init_weights_deterministic(work):
    run("init-weights", "tiny", work / "a.vcnw", "--seed", 7, check=0)
    run("init-weights", "tiny", work / "b.vcnw", "--seed", 7, check=0)
    assert digest(work / "a.vcnw") == digest(work / "b.vcnw")


def test_encode_reports_budget(work):
    p = run("encode", work / "mono.wav", work / "m.vcnb", "--codebooks", 26, "-w", work / "w.vcnw", check=0)
    assert p.stdout.strip() == "frames=25 bits_per_frame=314 bitrate=7850"


def test_encode_contract_errors(work):
    p = run("encode", work / "m441.wav", work / "x.vcnb", "-w", work / "w.vcnw", check=2)
    assert "unsupported sample rate" in p.stderr
    p = run("encode", work / "mono.wav", work / "x.vcnb", "-n", 0, "-w", work / "w.vcnw", check=2)
    assert "range" in p.stderr


def test_variable_target_decode(work):
    run("encode", work / "s51.wav", work / "s.vcnb", "-w", work / "w.vcnw", check=0)
    for layout, ch in [("stereo", 2), ("mono", 1), ("surround51", 6)]:
        out = work / f"dec_{layout}.wav"
        run("decode", work / "s.vcnb", out, "--layout", layout, "-w", work / "w.vcnw", check=0)
        assert struct.unpack("<H", out.read_bytes()[22:24])[0] == ch


def test_decode_data_errors(work):
    run("encode", work / "mono.wav", work / "m.vcnb", "-w", work / "w.vcnw", check=0)
    run("init-weights", "tiny", work / "other.vcnw", "--seed", 2, check=0)
    p = run("decode", work / "m.vcnb", work / "x.wav", "--layout", "mono", "-w", work / "other.vcnw", check=3)
    assert "digest" in p.stderr
    bad = work / "bad.vcnb"
    bad.write_bytes((work / "m.vcnb").read_bytes()[:30])
    p = run("decode", bad, work / "x.wav", "--layout", "mono", "-w", work / "w.vcnw", check=3)
    assert "truncated" in p.stderr


def test_info(work):
    run("encode", work / "stereo.wav", work / "st.vcnb", "-n", 8, "-w", work / "w.vcnw", check=0)
    info = json.loads(run("info", work / "st.vcnb", check=0).stdout.splitlines()[0])
    assert info["n_codebooks"] == 8 and info["bitrate"] == 25 * (14 + 7 * 12)
    w = json.loads(run("info", work / "w.vcnw", check=0).stdout.splitlines()[0])
    assert w["type"] == "VCNW" and w["parameters"] > 0


def metrics(work, ref, est, metric_set, check=0):
    p = run("metrics", ref, est, "--set", metric_set, check=check)
    return [json.loads(line) for line in p.stdout.splitlines()], p


def test_metrics_sets(work):
    lines, _ = metrics(work, work / "stereo.wav", work / "stereo.wav", "stereo")
    assert [m["metric"] for m in lines] == ["si_sdr", "si_snr", "mel_distance", "stft_distance", "delta_ipd", "delta_ild"]
    assert all(m["value"] == 0.0 for m in lines if m["metric"] not in ("si_sdr", "si_snr"))
    assert all(m["value"] == 100.0 for m in lines if m["metric"] in ("si_sdr", "si_snr"))
    lines, _ = metrics(work, work / "s51.wav", work / "s51.wav", "surround")
    groups = list(dict.fromkeys(m["group"] for m in lines))
    assert groups == ["Front L/R", "Center", "Rear L/R", "LFE"]
    assert all(m.get("low_reliability") for m in lines if m["group"] == "LFE")
    assert not any(m.get("low_reliability") for m in lines if m["group"] != "LFE")
    lines, _ = metrics(work, work / "mono.wav", work / "mono.wav", "speech")
    assert {m["metric"] for m in lines} >= {"si_sdr", "si_snr", "mel_distance", "stft_distance"}


def test_metrics_trim_and_mismatch(work):
    x = np.random.default_rng(1).uniform(-0.5, 0.5, 48000)
    write_wav(work / "short.wav", x[:-1000])
    write_wav(work / "full.wav", x)
    lines, p = metrics(work, work / "full.wav", work / "short.wav", "speech")
    assert "warning" in p.stderr and lines[0]["value"] == 100.0
    write_wav(work / "shorter.wav", x[:-5000])
    metrics(work, work / "full.wav", work / "shorter.wav", "speech", check=2)
    metrics(work, work / "stereo.wav", work / "mono.wav", "speech", check=2)


def test_pipeline_smoke(work):
    run("encode", work / "stereo.wav", work / "p.vcnb", "-w", work / "w.vcnw", check=0)
    run("decode", work / "p.vcnb", work / "p.wav", "--layout", "stereo", "-w", work / "w.vcnw", check=0)
    lines, _ = metrics(work, work / "stereo.wav", work / "p.wav", "stereo")
    assert all(np.isfinite(m["value"]) for m in lines)


def test_simulate(work):
    args = [work / "mono.wav", work / "stereo.wav", work / "stereo.wav"]
    a = run("simulate", *args, work / "a.wav", "--seed", 5, check=0)
    run("simulate", *args, work / "b.wav", "--seed", 5, check=0)
    assert digest(work / "a.wav") == digest(work / "b.wav")
    draws = json.loads(a.stdout)
    assert 80 <= draws["lfe_cutoff_hz"] <= 120
    (work / "p.txt").write_text("p_center=0\n")
    run("simulate", *args, work / "c.wav", "--seed", 5, "--params", work / "p.txt", check=0)
    body = np.frombuffer((work / "c.wav").read_bytes()[44:], np.float32).reshape(-1, 6)
    assert not body[:, 2].any()
    (work / "bad.txt").write_text("p_center=2\n")
    run("simulate", *args, work / "d.wav", "--params", work / "bad.txt", check=3)


def test_fit_codebooks_clustered(work):
    rng = np.random.default_rng(2)
    centers = rng.normal(0, 10, (64, 16))
    lat = work / "latents"
    lat.mkdir()
    for i in range(4):
        idx = np.arange(i * 400, (i + 1) * 400) % 64
        pts = centers[idx] + rng.normal(0, 0.01, (400, 16))
        (lat / f"part{i}.f32").write_bytes(pts.astype("<f4").tobytes())
    cfg = work / "fit.cfg"
    cfg.write_text("".join(f"{k}={v}\n" for k, v in [("encoder_widths", "8,8,8,16,16,16"),
                                                       ("decoder_widths", "16,16,16,8,8,8"),
                                                       ("rvq_sizes", "64,16")]))
    p = run("fit-codebooks", lat, work / "fit.vcnw", "--iters", 15, "--seed", 1, "--config", cfg, check=0)
    stats = [json.loads(line) for line in p.stdout.splitlines()]
    assert stats[0]["usage"] >= 0.99
    p2 = run("fit-codebooks", lat, work / "fit2.vcnw", "--iters", 15, "--seed", 1, "--config", cfg, check=0)
    assert digest(work / "fit.vcnw") == digest(work / "fit2.vcnw")


def test_extract_latents(work):
    p = run("extract-latents", work / "mono.wav", "--out-dir", work / "ext", "-w", work / "w.vcnw", check=0)
    assert json.loads(p.stdout)["frames"] == 25
    assert (work / "ext" / "mono.f32").stat().st_size == 25 * 16 * 4


def test_usage_errors():
    assert run().returncode == 2
    assert run("metrics", "a.wav").returncode == 2
    assert run("info", "/nonexistent/file").returncode == 3
