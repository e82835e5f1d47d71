import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from straug.audio import Waveform
from straug.errors import TooShort
from straug.features import DEFAULT, cmvn, logmel, mel_filterbank, read_features, write_features


def wave(x, sr=16000):
    return Waveform(np.asarray(x), sr)


@pytest.mark.parametrize("n, frames", [(400, 1), (560, 2), (559, 1), (16000, 98)])
def test_frame_count(n, frames):
    assert frames == 1 + (n - 400) // 160
    assert logmel(wave(np.random.default_rng(n).normal(size=n) * 1000)).shape == (frames, 80)


def test_too_short():
    with pytest.raises(TooShort):
        logmel(wave(np.zeros(399)))


def test_silence_hits_floor():
    out = logmel(wave(np.zeros(1000, dtype=np.int16)))
    assert np.all(out == np.log(1e-10))


def test_every_filter_covers_a_bin():
    fb = mel_filterbank(16000, 512, 80, 20.0, 0.0)
    assert fb.shape == (80, 257)
    assert np.all(fb.max(axis=1) > 0)


def test_pure_tone_peaks_in_matching_filter():
    sr = 16000
    t = np.arange(sr) / sr
    out = logmel(wave(10000 * np.sin(2 * np.pi * 1000 * t)))
    fb = mel_filterbank(sr, 512, 80, 20.0, 0.0)
    bin_1k = round(1000 * 512 / sr)
    assert out.mean(axis=0).argmax() == fb[:, bin_1k].argmax()


def test_scale_covariance():
    x = np.random.default_rng(1).normal(size=8000) * 3000
    diff = logmel(wave(2 * x)) - logmel(wave(x))
    assert np.allclose(diff, np.log(4.0), atol=1e-5)


def test_cmvn_moments():
    feats = np.random.default_rng(2).normal(3.0, 5.0, size=(50, 80))
    out = cmvn(feats)
    assert np.abs(out.mean(axis=0)).max() < 1e-6
    assert np.abs(out.var(axis=0) - 1).max() < 1e-6


def test_cmvn_constant_and_single_frame():
    feats = np.random.default_rng(3).normal(size=(10, 80))
    feats[:, 5] = 7.0
    out = cmvn(feats)
    assert np.all(out[:, 5] == 0)
    assert np.all(cmvn(feats[:1]) == 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(400, 20000))
def test_frame_formula_property(n):
    assert logmel(wave(np.ones(n))).shape[0] == 1 + (n - 400) // 160


def test_feature_file_round_trip(tmp_path):
    feats = np.random.default_rng(4).normal(size=(7, 80)).astype(np.float32)
    write_features(tmp_path / "f.lmel", feats)
    raw = (tmp_path / "f.lmel").read_bytes()
    assert len(raw) == 16 + 7 * 80 * 4
    assert np.array_equal(read_features(tmp_path / "f.lmel"), feats)


def test_defaults_are_documented_completions():
    assert (DEFAULT.n_mels, DEFAULT.frame_length_ms, DEFAULT.frame_shift_ms) == (80, 25.0, 10.0)
    assert (DEFAULT.n_fft, DEFAULT.low_freq, DEFAULT.energy_floor) == (512, 20.0, 1e-10)
