"""Blind acoustic mask (BAM).

Frame-by-frame, time-domain masking that needs only the noisy signal:

1. robust noise estimate per frame (:func:`blindmask.noise.date_estimate`);
2. target proportion ``d_q`` from the noisy and noise standard deviations;
3. a band of magnitudes ``(y_bq, xi_q)`` is kept verbatim, magnitudes at or
   above ``xi_q`` are reduced by ``alpha * sigma_hat`` and everything else
   is scaled by ``beta``.

Comparisons are made on sample magnitudes and the sign is restored, so the
mask treats positive and negative half-waves alike.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .audio import AudioBuffer, FrameSequence, concat_frames, frame_split, normalize_peak
from .noise import DEFAULT_THRESHOLD, GAUSSIAN_C, DateEstimate, date_estimate, frame_std

__all__ = [
    "BamParams",
    "FrameDecision",
    "target_proportion",
    "adaptive_threshold",
    "apply_mask_frame",
    "bam_process",
    "write_diagnostics",
    "write_date_csv",
    "DIAGNOSTIC_COLUMNS",
]


@dataclass(frozen=True)
class BamParams:
    alpha: float = 0.35
    beta: float = 0.65
    frame_ms: float = 32.0
    normalize: bool = True
    c: float = GAUSSIAN_C
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")
        if self.frame_ms <= 0:
            raise ValueError("frame_ms must be positive")


@dataclass(frozen=True)
class FrameDecision:
    d_q: float
    xi_q: float
    estimate: DateEstimate
    sigma_ny: float
    counts: Tuple[int, int, int]  # kept, subtracted, floored

    @property
    def kept(self) -> int:
        return self.counts[0]

    @property
    def subtracted(self) -> int:
        return self.counts[1]

    @property
    def floored(self) -> int:
        return self.counts[2]


def target_proportion(sigma_ny: float, sigma_hat: float) -> float:
    """``|sigma_ny - sigma_hat| / |sigma_ny + sigma_hat|``; 0 for a silent frame."""
    if sigma_ny < 0 or sigma_hat < 0:
        raise ValueError("standard deviations must be non-negative")
    den = abs(sigma_ny + sigma_hat)
    if den == 0.0:
        return 0.0
    return abs(sigma_ny - sigma_hat) / den


def adaptive_threshold(y_bq: float, d_q: float) -> float:
    return max(y_bq, d_q)


def apply_mask_frame(frame, est: DateEstimate, xi_q: float, params: BamParams, source=None, scale: float = 1.0):
    """Three-branch sample transform of one frame.

    Branches are chosen on ``frame``. When ``source`` is given (the same
    frame before peak normalisation, ``frame * scale``), output values are
    computed from it directly so no rounding from the round trip leaks in.

    Returns ``(processed, (kept, subtracted, floored))``.
    """
    x = np.asarray(frame, dtype=np.float64)
    m = np.abs(x)
    keep = (m > est.y_bq) & (m < xi_q)
    sub = ~keep & (m >= xi_q)
    floor = ~(keep | sub)
    if source is None:
        src, step = x, params.alpha * est.sigma_hat
    else:
        src, step = np.asarray(source, dtype=np.float64), params.alpha * est.sigma_hat * scale
    out = np.empty_like(src)
    out[keep] = src[keep]
    # over-subtraction clamps at zero instead of flipping the sign
    out[sub] = np.sign(src[sub]) * np.maximum(np.abs(src[sub]) - step, 0.0)
    out[floor] = params.beta * src[floor]
    counts = (int(keep.sum()), int(sub.sum()), int(floor.sum()))
    return out, counts


def _process_frame(frame, params: BamParams, source=None, scale: float = 1.0):
    est = date_estimate(frame, c=params.c, threshold=params.threshold)
    sigma_ny = frame_std(frame)
    d_q = target_proportion(sigma_ny, est.sigma_hat)
    xi_q = adaptive_threshold(est.y_bq, d_q)
    out, counts = apply_mask_frame(frame, est, xi_q, params, source, scale)
    return out, FrameDecision(d_q, xi_q, est, sigma_ny, counts)


def bam_process(noisy: AudioBuffer, params: BamParams = BamParams()):
    """Run the full mask over ``noisy``.

    Returns ``(processed, decisions)`` where ``decisions`` holds one
    :class:`FrameDecision` per frame, in order. The output has the same
    length and sample rate as the input.
    """
    if params.normalize:
        work, scale = normalize_peak(noisy)
    else:
        work, scale = noisy, 1.0
    seq = frame_split(work, params.frame_ms)
    orig = frame_split(noisy, params.frame_ms)
    frames: List[np.ndarray] = []
    decisions: List[FrameDecision] = []
    for frame, source in zip(seq.frames, orig.frames):
        out, dec = _process_frame(frame, params, source, scale)
        frames.append(out)
        decisions.append(dec)
    joined = concat_frames(FrameSequence(tuple(frames), seq.frame_len, seq.sample_rate, seq.tail_policy))
    return joined, decisions


DIAGNOSTIC_COLUMNS = ("frame_index", "sigma_ny", "sigma_hat", "d_q", "y_bq", "xi_q",
                      "kept", "subtracted", "floored")


def write_diagnostics(path, decisions) -> None:
    """One CSV row per frame; values are in normalized amplitude units."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        for i, d in enumerate(decisions):
            w.writerow([i, repr(d.sigma_ny), repr(d.estimate.sigma_hat), repr(d.d_q),
                        repr(d.estimate.y_bq), repr(d.xi_q), *d.counts])


def write_date_csv(path, decisions) -> None:
    """Per-frame noise estimates: frame_index, sigma_hat, b_q, y_bq, converged."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("frame_index", "sigma_hat", "b_q", "y_bq", "converged"))
        for i, d in enumerate(decisions):
            e = d.estimate
            w.writerow([i, repr(e.sigma_hat), e.b_q, repr(e.y_bq), int(e.converged)])
