"""PCM16 mono WAV I/O and sample-exact segment concatenation."""
from __future__ import annotations

import wave
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import CorruptHeader, RateMismatch, SegmentOutOfBounds, UnsupportedFormat


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray  # int16, mono
    sample_rate: int

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class SegmentRef:
    utterance_id: str
    start_sample: int
    end_sample: int

    def __len__(self):
        return self.end_sample - self.start_sample


def _open(path):
    try:
        return wave.open(str(path), "rb")
    except wave.Error as exc:
        if "unknown format" in str(exc):
            raise UnsupportedFormat(f"{path}: {exc}") from exc
        raise CorruptHeader(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise CorruptHeader(f"{path}: truncated header") from exc


def _check_params(path, w) -> None:
    if w.getnchannels() != 1:
        raise UnsupportedFormat(f"{path}: {w.getnchannels()} channels, only mono is supported")
    if w.getsampwidth() != 2:
        raise UnsupportedFormat(f"{path}: {8 * w.getsampwidth()}-bit samples, only 16-bit PCM is supported")
    if w.getframerate() <= 0:
        raise CorruptHeader(f"{path}: sample rate {w.getframerate()}")


def read_wav_header(path) -> Tuple[int, int]:
    """``(sample_rate, n_samples)`` as declared in the header; no payload is read."""
    with _open(path) as w:
        _check_params(path, w)
        return w.getframerate(), w.getnframes()


def read_wav(path) -> Waveform:
    with _open(path) as w:
        _check_params(path, w)
        n = w.getnframes()
        data = w.readframes(n)
        sr = w.getframerate()
    if len(data) != 2 * n:
        raise CorruptHeader(f"{path}: header declares {n} samples, payload holds {len(data) // 2}")
    return Waveform(np.frombuffer(data, dtype="<i2").astype(np.int16), sr)


def write_wav(path, wave_: Waveform) -> None:
    samples = np.asarray(wave_.samples)
    if samples.ndim != 1:
        raise UnsupportedFormat("only mono waveforms can be written")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(wave_.sample_rate))
        w.writeframes(samples.astype("<i2").tobytes())


def seconds_to_samples(t: float, sr: int) -> int:
    """Round ``t * sr`` half away from zero.

    Uses the shortest decimal form of ``t`` so that e.g. 0.0125 s at 16 kHz
    is exactly 200 samples rather than a binary-float neighbour.
    """
    if t < 0:
        raise ValueError(f"negative time {t}")
    return int((Decimal(repr(float(t))) * int(sr)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def segment_ref(seg, sr: int, n_samples: int) -> SegmentRef:
    start = seconds_to_samples(seg.t0, sr)
    end = seconds_to_samples(seg.t1, sr)
    if not 0 <= start < end <= n_samples:
        raise SegmentOutOfBounds(
            f"{seg.utt}: [{seg.t0}, {seg.t1}] s -> samples [{start}, {end}) outside [0, {n_samples}]"
        )
    return SegmentRef(seg.utt, start, end)


def concatenate(pieces, sample_rate: int, junction_silence_ms: float = 0) -> Waveform:
    gap = seconds_to_samples(junction_silence_ms / 1000.0, sample_rate)
    parts = []
    for i, p in enumerate(pieces):
        if i and gap:
            parts.append(np.zeros(gap, dtype=np.int16))
        parts.append(np.asarray(p, dtype=np.int16))
    out = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int16)
    return Waveform(out, sample_rate)


def materialize(example, corpus, junction_silence_ms: float = 0,
                cache: Optional[Dict[str, Waveform]] = None) -> Waveform:
    """Slice every segment out of its source recording and join them.

    No resampling, gain or crossfade is applied. ``cache`` may be shared
    across calls to avoid re-reading popular donor recordings.
    """
    if cache is None:
        cache = {}
    pieces = []
    rate = None
    for seg in example.segments:
        src = cache.get(seg.utt)
        if src is None:
            utt = corpus.by_id[seg.utt]
            src = cache[seg.utt] = read_wav(corpus.audio_path(utt))
        if rate is None:
            rate = src.sample_rate
        elif src.sample_rate != rate:
            raise RateMismatch(f"{example.id}: {seg.utt} is {src.sample_rate} Hz, expected {rate} Hz")
        ref = segment_ref(seg, src.sample_rate, len(src.samples))
        pieces.append(src.samples[ref.start_sample:ref.end_sample])
    if rate is None:
        raise SegmentOutOfBounds(f"{example.id}: no segments")
    return concatenate(pieces, rate, junction_silence_ms)


def output_path(directory, example) -> Path:
    return Path(directory) / f"{example.id}.wav"
