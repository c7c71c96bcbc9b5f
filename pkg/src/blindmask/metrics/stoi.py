"""Short-Time Objective Intelligibility (STOI).

Fixed constants of the original measure: 10 kHz working rate, 256-sample
Hann frames with 50 % overlap and 512-point FFT, 15 one-third octave bands
from 150 Hz, 30-frame (384 ms) envelope segments, clipping at -15 dB
signal-to-distortion ratio, silent frames 40 dB below the loudest clean
frame removed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..audio import AudioBuffer, resample

__all__ = ["StoiScore", "stoi", "stoi_normalized", "third_octave_bands", "remove_silent_frames"]

FS = 10000
N_FRAME = 256
NFFT = 512
N_BANDS = 15
MIN_FREQ = 150.0
N_SEG = 30
BETA_DB = -15.0
DYN_RANGE_DB = 40.0
EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class StoiScore:
    value: float
    normalized_value: Optional[float] = None


def third_octave_bands(fs=FS, nfft=NFFT, n_bands=N_BANDS, min_freq=MIN_FREQ):
    """Band-membership matrix ``(n_bands, nfft//2 + 1)`` and centre frequencies.

    Band edges are snapped to the nearest FFT bin, as in the reference
    implementation.
    """
    f = np.linspace(0, fs, nfft + 1)[: nfft // 2 + 1]
    k = np.arange(n_bands)
    cf = 2.0 ** (k / 3.0) * min_freq
    lo = min_freq * 2.0 ** ((2 * k - 1) / 6.0)
    hi = min_freq * 2.0 ** ((2 * k + 1) / 6.0)
    obm = np.zeros((n_bands, f.size))
    for i in range(n_bands):
        a = int(np.argmin((f - lo[i]) ** 2))
        b = int(np.argmin((f - hi[i]) ** 2))
        obm[i, a:b] = 1.0
    return obm, cf


_OBM, _ = third_octave_bands()
_WINDOW = np.hanning(N_FRAME + 2)[1:-1]


def _frames(x, hop):
    n = (len(x) - N_FRAME) // hop + 1
    if n < 1:
        return np.zeros((0, N_FRAME))
    idx = np.arange(n)[:, None] * hop + np.arange(N_FRAME)[None, :]
    return x[idx] * _WINDOW


def _overlap_add(frames, hop):
    if frames.shape[0] == 0:
        return np.zeros(0)
    out = np.zeros((frames.shape[0] - 1) * hop + N_FRAME)
    for i, fr in enumerate(frames):
        out[i * hop:i * hop + N_FRAME] += fr
    return out


def remove_silent_frames(x, y, dyn_range=DYN_RANGE_DB, hop=N_FRAME // 2):
    """Drop frames whose clean energy is ``dyn_range`` dB below the loudest
    clean frame; rebuild both signals by overlap-add of the kept frames."""
    fx, fy = _frames(x, hop), _frames(y, hop)
    energy = 20 * np.log10(np.linalg.norm(fx, axis=1) + EPS)
    keep = energy > energy.max() - dyn_range
    return _overlap_add(fx[keep], hop), _overlap_add(fy[keep], hop)


def _band_envelopes(x):
    fr = _frames(x, N_FRAME // 2)
    spec = np.fft.rfft(fr, n=NFFT, axis=1)
    return np.sqrt(_OBM @ (np.abs(spec) ** 2).T)  # (bands, frames)


def _stoi_10k(x, y):
    x, y = remove_silent_frames(x, y)
    X, Y = _band_envelopes(x), _band_envelopes(y)
    n_frames = X.shape[1]
    if n_frames < N_SEG:
        raise ValueError("not enough speech-active frames for one 384 ms segment")
    clip = 10 ** (-BETA_DB / 20)
    total = 0.0
    n = 0
    for m in range(N_SEG, n_frames + 1):
        xs, ys = X[:, m - N_SEG:m], Y[:, m - N_SEG:m]
        alpha = np.linalg.norm(xs, axis=1, keepdims=True) / (np.linalg.norm(ys, axis=1, keepdims=True) + EPS)
        yp = np.minimum(ys * alpha, xs * (1 + clip))
        xc = xs - xs.mean(axis=1, keepdims=True)
        yc = yp - yp.mean(axis=1, keepdims=True)
        num = np.sum(xc * yc, axis=1)
        den = np.linalg.norm(xc, axis=1) * np.linalg.norm(yc, axis=1) + EPS
        total += np.sum(num / den)
        n += xs.shape[0]
    return total / n


def stoi(clean: AudioBuffer, processed: AudioBuffer) -> StoiScore:
    """Intelligibility of ``processed`` relative to ``clean``.

    Both buffers must share a sample rate and length (one sample of slack is
    trimmed). Signals are resampled to 10 kHz first.
    """
    if clean.sample_rate != processed.sample_rate:
        raise ValueError("sample rate mismatch")
    if abs(len(clean) - len(processed)) > 1:
        raise ValueError(f"length mismatch: {len(clean)} vs {len(processed)}")
    if min(len(clean), len(processed)) < 0.5 * clean.sample_rate:
        raise ValueError("STOI needs at least 0.5 s of signal")
    n = min(len(clean), len(processed))
    x = resample(clean.with_samples(clean.samples[:n]), FS).samples
    y = resample(processed.with_samples(processed.samples[:n]), FS).samples
    return StoiScore(float(_stoi_10k(x, y)))


def stoi_normalized(clean: AudioBuffer, processed: AudioBuffer, reference_score: StoiScore) -> StoiScore:
    """STOI divided by a reference score, saturating at 1."""
    if reference_score.value <= 0:
        raise ValueError("reference score must be positive")
    s = stoi(clean, processed)
    return normalize_score(s, reference_score)


def normalize_score(score: StoiScore, reference_score: StoiScore) -> StoiScore:
    if reference_score.value <= 0:
        raise ValueError("reference score must be positive")
    return StoiScore(score.value, min(score.value / reference_score.value, 1.0))
