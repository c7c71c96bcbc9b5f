"""Robust per-frame noise level estimation with a one-dimensional trimmed
estimator (DATE).

The frame magnitudes are sorted, ``Y_1 <= ... <= Y_T``. Starting just
above ``t_min``, the search looks for the first ``t`` whose running
estimate

    sigma_t = c * (Y_1 + ... + Y_t) / t

scaled by the detection threshold brackets the order statistics,
``Y_{t-1} <= threshold * sigma_t <= Y_{t+1}``. Magnitudes above that
point are treated as signal and trimmed. If no ``t`` qualifies the whole
frame is taken as noise (``b_q = T``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

__all__ = [
    "GAUSSIAN_C",
    "DEFAULT_THRESHOLD",
    "DateEstimate",
    "FractionTMin",
    "date_estimate",
    "frame_std",
    "consistent_c",
]

# E|X| = sigma * sqrt(2/pi) for zero-mean Gaussian X
GAUSSIAN_C = math.sqrt(math.pi / 2)
DEFAULT_THRESHOLD = 3.0


@dataclass(frozen=True)
class DateEstimate:
    sigma_hat: float
    b_q: int  # 1-based index into the sorted magnitudes
    y_bq: float
    t_min: int
    c: float
    converged: bool
    threshold: float = DEFAULT_THRESHOLD


@dataclass(frozen=True)
class FractionTMin:
    """``t_min = floor(fraction * T)``."""

    fraction: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.fraction < 1.0:
            raise ValueError("fraction must lie in [0, 1)")

    def __call__(self, T: int) -> int:
        return int(math.floor(self.fraction * T))


def consistent_c(threshold: float) -> float:
    """Factor making the mean of Gaussian magnitudes below ``threshold * sigma``
    an unbiased estimate of sigma.

    Tends to ``sqrt(pi/2)`` as the threshold grows; at the default
    threshold of 3 the two differ by under 1 %.
    """
    t = float(threshold)
    return erf(t / math.sqrt(2)) / (math.sqrt(2 / math.pi) * -math.expm1(-t * t / 2))


def date_estimate(frame, c: float = GAUSSIAN_C, t_min_policy=None,
                  threshold: float = DEFAULT_THRESHOLD) -> DateEstimate:
    """Estimate the noise standard deviation of one frame.

    Parameters
    ----------
    frame : array_like
        Samples of the frame. A single sample (a one-sample tail) has no
        search range and takes the fallback.
    c : float
        Scale applied to the trimmed mean magnitude.
    t_min_policy : callable, optional
        Maps the frame length ``T`` to ``t_min``; the search starts at
        ``t_min + 1``. Defaults to ``FractionTMin(0.5)``.
    threshold : float
        Detection threshold in units of the running estimate. With
        ``threshold=1`` the search uses ``c`` alone.

    Returns
    -------
    DateEstimate
    """
    y = np.sort(np.abs(np.asarray(frame, dtype=np.float64).reshape(-1)), kind="stable")
    T = y.shape[0]
    if T == 0:
        raise ValueError("empty frame")
    if c <= 0:
        raise ValueError("c must be positive")
    if t_min_policy is None:
        t_min_policy = FractionTMin()
    t_min = int(t_min_policy(T))
    if not 0 <= t_min < T:
        raise ValueError(f"t_min={t_min} out of range for T={T}")

    csum = np.cumsum(y)
    # candidate t (1-based) must have both neighbours Y_{t-1} and Y_{t+1}
    t = np.arange(max(t_min + 1, 2), T)
    if t.size:
        level = threshold * c * csum[t - 1] / t
        hit = (y[t - 2] <= level) & (level <= y[t])
    else:
        hit = np.zeros(0, dtype=bool)
    if hit.any():
        b_q = int(t[np.argmax(hit)])
        converged = True
    else:
        b_q = T
        converged = False
    sigma_hat = c * np.sum(y[:b_q]) / b_q
    return DateEstimate(float(sigma_hat), b_q, float(y[b_q - 1]), t_min, float(c),
                        converged, float(threshold))


def frame_std(frame) -> float:
    """Population standard deviation (divides by ``T``)."""
    x = np.asarray(frame, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty frame")
    return float(np.std(x))
