"""Index of non-stationarity (INS) from surrogate data.

For each analysis scale ``Th/T``:

* a multitaper spectrogram (Hermite tapers of length ``Th``) is computed;
* every local spectrum is compared with the time-averaged spectrum using a
  symmetrised Kullback-Leibler divergence between unit-area spectra,
  weighted by ``1 + |log(energy ratio)|``;
* the variance of those distances over time is the test statistic;
* the same statistic on phase-randomised surrogates (stationary by
  construction) gives the null distribution, to which a Gamma law is
  moment-fitted.

``INS = sqrt(theta / mean(theta0))`` and the 95 % threshold ``gamma`` is
the Gamma quantile mapped through the same square-root normalisation, so
``INS > gamma`` reads directly as "non-stationary at this scale".
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from ..audio import AudioBuffer

__all__ = [
    "DEFAULT_SCALES",
    "InsProfile",
    "surrogate",
    "hermite_tapers",
    "multitaper_spectrogram",
    "spectral_distance",
    "ins_compute",
    "ins_max",
]

DEFAULT_SCALES = (0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)
N_TAPERS = 5
CONFIDENCE = 0.95
MAX_BINS = 1024  # frequency samples per local spectrum
HOP_FRACTION = 0.25  # hop as a fraction of the window
_REL_FLOOR = 1e-12  # spectral floor relative to the mean reference level


@dataclass(frozen=True)
class InsProfile:
    scales: Tuple[float, ...]
    ins: Tuple[float, ...]
    gamma: Tuple[float, ...]
    n_surrogates: int
    seed: int
    theta: Tuple[float, ...] = ()
    theta0_mean: Tuple[float, ...] = ()
    meta: dict = field(default_factory=dict)

    @property
    def ins_max(self) -> float:
        return max(self.ins)

    @property
    def nonstationary(self) -> Tuple[bool, ...]:
        return tuple(i > g for i, g in zip(self.ins, self.gamma))


def surrogate(buffer: AudioBuffer, seed) -> AudioBuffer:
    """Phase-randomised copy of ``buffer`` with an identical magnitude spectrum.

    DC and (for even lengths) Nyquist bins are kept as they are so that the
    output stays real without altering any magnitude.
    """
    x = buffer.samples
    n = x.shape[0]
    if n < 64:
        raise ValueError("surrogates need at least 64 samples")
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(x)
    phase = rng.uniform(0.0, 2 * np.pi, spec.shape[0])
    phase[0] = 0.0
    if n % 2 == 0:
        phase[-1] = 0.0
    return buffer.with_samples(np.fft.irfft(spec * np.exp(1j * phase), n=n))


def hermite_tapers(length: int, k: int = N_TAPERS, half_width: float = 6.0) -> np.ndarray:
    """First ``k`` Hermite functions sampled on ``[-half_width, half_width]``,
    each scaled to unit energy. Shape ``(k, length)``."""
    t = np.linspace(-half_width, half_width, length)
    h = np.empty((k, length))
    h[0] = np.pi ** -0.25 * np.exp(-t * t / 2)
    if k > 1:
        h[1] = np.sqrt(2.0) * t * h[0]
    for j in range(1, k - 1):
        h[j + 1] = np.sqrt(2.0 / (j + 1)) * t * h[j] - np.sqrt(j / (j + 1)) * h[j - 1]
    return h / np.linalg.norm(h, axis=1, keepdims=True)


def _n_bins(win):
    return min(MAX_BINS, 1 << int(np.ceil(np.log2(win))))


def multitaper_spectrogram(x, win: int, hop: int = None, tapers: np.ndarray = None) -> np.ndarray:
    """Average of the tapered periodograms, ``(n_frames, n_freqs)``.

    Long windows are folded onto ``MAX_BINS`` points before the FFT, which
    samples the same spectrum on a coarser frequency grid.
    """
    x = np.asarray(x, dtype=np.float64)
    if hop is None:
        hop = max(1, int(win * HOP_FRACTION))
    if tapers is None:
        tapers = hermite_tapers(win)
    n_frames = (x.shape[0] - win) // hop + 1
    if n_frames < 2:
        raise ValueError("signal holds fewer than two analysis windows")
    m = _n_bins(win)
    pad = (-win) % m
    idx = np.arange(n_frames)[:, None] * hop + np.arange(win)[None, :]
    frames = x[idx]
    acc = np.zeros((n_frames, m // 2 + 1))
    for h in tapers:
        seg = frames * h
        if pad:
            seg = np.pad(seg, ((0, 0), (0, pad)))
        seg = seg.reshape(n_frames, -1, m).sum(axis=1)
        acc += np.abs(np.fft.rfft(seg, axis=1)) ** 2
    return acc / tapers.shape[0]


def spectral_distance(local: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Symmetrised KL divergence of unit-area spectra times ``1 + |log energy ratio|``.

    ``local`` may be 2-D (one spectrum per row). A floor proportional to the
    reference level keeps silent frames finite without breaking scale
    invariance.
    """
    floor = _REL_FLOOR * float(np.mean(reference)) or np.finfo(float).tiny
    local = np.atleast_2d(local) + floor
    reference = reference + floor
    e_loc = local.sum(axis=1)
    e_ref = reference.sum()
    p = local / e_loc[:, None]
    q = reference / e_ref
    kl = np.sum((p - q) * np.log(p / q), axis=1)
    return kl * (1.0 + np.abs(np.log(e_loc / e_ref)))


def _statistic(x, win, tapers):
    spec = multitaper_spectrogram(x, win, tapers=tapers)
    d = spectral_distance(spec, spec.mean(axis=0))
    return float(np.var(d))


def _gamma_quantile(samples, q):
    mean = float(np.mean(samples))
    var = float(np.var(samples, ddof=1))
    if var <= 0 or mean <= 0:
        return mean
    shape = mean * mean / var
    return float(stats.gamma.ppf(q, shape, scale=var / mean))


def ins_compute(buffer: AudioBuffer, scales: Sequence[float] = DEFAULT_SCALES, n_surrogates: int = 50,
                seed: int = 0, workers: int = 1) -> InsProfile:
    """Per-scale INS values and 95 % stationarity thresholds.

    Surrogate ``j`` always uses the ``j``-th child of ``SeedSequence(seed)``,
    so results do not depend on ``workers``.
    """
    scales = tuple(float(s) for s in scales)
    if not scales or any(not 0 < s < 1 for s in scales):
        raise ValueError("scales must lie in (0, 1)")
    if n_surrogates < 20:
        raise ValueError("need at least 20 surrogates")
    n = len(buffer)
    wins = [int(round(s * n)) for s in scales]
    for s, w in zip(scales, wins):
        if w < 16 or (n - w) // max(1, int(w * HOP_FRACTION)) + 1 < 2:
            raise ValueError(f"scale {s} is too small or too large for a {n}-sample signal")
    tapers = {w: hermite_tapers(w) for w in set(wins)}

    def stats_of(x):
        return [_statistic(x, w, tapers[w]) for w in wins]

    children = np.random.SeedSequence(seed).spawn(n_surrogates)
    surr = (surrogate(buffer, c).samples for c in children)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            theta0 = np.array(list(ex.map(stats_of, surr)))
    else:
        theta0 = np.array([stats_of(s) for s in surr])
    theta = np.array(stats_of(buffer.samples))

    ins, gamma, t0m = [], [], []
    for i in range(len(scales)):
        m0 = float(theta0[:, i].mean())
        t0m.append(m0)
        ins.append(float(np.sqrt(theta[i] / m0)) if m0 > 0 else 0.0)
        gamma.append(float(np.sqrt(_gamma_quantile(theta0[:, i], CONFIDENCE) / m0)) if m0 > 0 else 0.0)
    meta = {"tapers": "hermite", "n_tapers": N_TAPERS, "distance": "kl_sym*(1+|log energy ratio|)",
            "hop_fraction": HOP_FRACTION, "confidence": CONFIDENCE}
    return InsProfile(scales, tuple(ins), tuple(gamma), n_surrogates, int(seed),
                      tuple(float(t) for t in theta), tuple(t0m), meta)


def ins_max(profile: InsProfile) -> float:
    if not profile.ins:
        raise ValueError("empty profile")
    return max(profile.ins)
