"""Variable-channel neural audio codec toolkit."""

from ._core import (
    HOP,
    LATENT_DIM,
    MAX_CODEBOOKS,
    SAMPLE_RATE,
    Codec,
    ConfigError,
    Error,
    FormatError,
    InputError,
    IoError,
    bitrate,
    bits_per_frame,
    butterworth_lowpass,
    delta_ild,
    delta_ipd,
    downmix_51_to_stereo,
    init_weights,
    inverse_mid_side,
    mel_distance,
    mid_side,
    pack,
    param_count,
    si_sdr,
    si_snr,
    simulate_surround,
    stft,
    stft_distance,
    unpack,
)

__version__ = "0.1.0"
