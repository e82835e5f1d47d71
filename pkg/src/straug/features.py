"""80-dim log-Mel filterbanks and per-utterance mean/variance normalization."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import StrError, TooShort

MAGIC = b"LMEL"
HEADER = struct.Struct("<4sIII")  # magic, n_frames, dim, reserved


@dataclass(frozen=True)
class FeatureConfig:
    n_mels: int = 80
    frame_length_ms: float = 25.0
    frame_shift_ms: float = 10.0
    n_fft: int = 512
    low_freq: float = 20.0
    high_freq: float = 0.0  # <= 0 means Nyquist
    energy_floor: float = 1e-10
    preemphasis: float = 0.0
    dither: float = 0.0
    dither_seed: int = 0

    def window_samples(self, sr: int) -> int:
        return int(round(sr * self.frame_length_ms / 1000.0))

    def hop_samples(self, sr: int) -> int:
        return int(round(sr * self.frame_shift_ms / 1000.0))


DEFAULT = FeatureConfig()


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=16)
def mel_filterbank(sr: int, n_fft: int, n_mels: int, low: float, high: float) -> np.ndarray:
    """Triangular HTK-Mel filters, shape ``(n_mels, n_fft // 2 + 1)``."""
    if high <= 0:
        high = sr / 2.0
    edges = mel_to_hz(np.linspace(hz_to_mel(low), hz_to_mel(high), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs - lo) / (mid - lo)
    down = (hi - freqs) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(up, down))
    fb.setflags(write=False)
    return fb


def n_frames(n_samples: int, window: int, hop: int) -> int:
    if n_samples < window:
        return 0
    return 1 + (n_samples - window) // hop


def logmel(wave, config: FeatureConfig = DEFAULT) -> np.ndarray:
    """Log-Mel energies, one row per 10 ms frame.

    ``wave`` is anything with ``samples`` and ``sample_rate``. Samples are
    used at their raw integer scale.
    """
    sr = int(wave.sample_rate)
    x = np.asarray(wave.samples, dtype=np.float64)
    win = config.window_samples(sr)
    hop = config.hop_samples(sr)
    if win > config.n_fft:
        raise StrError(f"window of {win} samples exceeds n_fft={config.n_fft}")
    if len(x) < win:
        raise TooShort(f"{len(x)} samples, need at least {win}")
    if config.dither:
        x = x + config.dither * np.random.default_rng(config.dither_seed).standard_normal(len(x))
    if config.preemphasis:
        x = np.append(x[:1], x[1:] - config.preemphasis * x[:-1])

    T = n_frames(len(x), win, hop)
    idx = np.arange(win)[None, :] + hop * np.arange(T)[:, None]
    frames = x[idx] * np.hanning(win)[None, :]
    power = np.abs(np.fft.rfft(frames, n=config.n_fft, axis=1)) ** 2
    fb = mel_filterbank(sr, config.n_fft, config.n_mels, config.low_freq, config.high_freq)
    energies = power @ fb.T
    return np.log(np.maximum(energies, config.energy_floor))


def cmvn(features: np.ndarray, var_floor: float = 1e-8) -> np.ndarray:
    """Zero mean per dimension; unit variance where the variance exceeds ``var_floor``."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise StrError(f"expected a (T >= 1, dim) matrix, got shape {feats.shape}")
    centered = feats - feats.mean(axis=0)
    var = feats.var(axis=0)
    scale = np.where(var > var_floor, np.sqrt(np.where(var > var_floor, var, 1.0)), 1.0)
    return centered / scale


def write_features(path, feats: np.ndarray) -> None:
    feats = np.ascontiguousarray(feats, dtype="<f4")
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, feats.shape[0], feats.shape[1], 0))
        f.write(feats.tobytes())


def read_features(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise StrError(f"{path}: truncated feature header")
    magic, t, dim, _ = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StrError(f"{path}: bad magic {magic!r}")
    body = np.frombuffer(data, dtype="<f4", offset=HEADER.size)
    if body.size != t * dim:
        raise StrError(f"{path}: expected {t}x{dim} values, found {body.size}")
    return body.reshape(t, dim).astype(np.float32)
