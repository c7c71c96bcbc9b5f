import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from blindmask.noise import GAUSSIAN_C, FractionTMin, consistent_c, date_estimate, frame_std


def reference_date(frame, c, threshold, fraction=0.5):
    """Literal loop over the search relation, used as the oracle."""
    y = sorted(abs(float(v)) for v in frame)
    T = len(y)
    t_min = math.floor(fraction * T)
    for t in range(max(t_min + 1, 2), T):
        level = threshold * c * sum(y[:t]) / t
        if y[t - 2] <= level <= y[t]:
            return t, c * sum(y[:t]) / t, True
    return T, c * sum(y) / T, False


frames = arrays(np.float64, st.integers(1, 200), elements=st.floats(-10, 10, allow_nan=False))


# ---- frozen hand-worked cases ------------------------------------------------

def test_hand_case_plain_relation():
    e = date_estimate([0.1, -0.1, 0.1, 0.1, -0.1, 0.1, 0.1, 0.9], c=1.0, threshold=1.0)
    assert (e.b_q, e.converged, e.t_min) == (5, True, 4)
    assert e.sigma_hat == pytest.approx(0.1, abs=1e-15)
    assert e.y_bq == 0.1


def test_hand_case_default_threshold():
    e = date_estimate([0.1, -0.1, 0.1, 0.1, -0.1, 0.1, 0.1, 0.9])
    assert (e.b_q, e.converged) == (7, True)
    assert e.sigma_hat == pytest.approx(GAUSSIAN_C * 0.1, abs=1e-15)


def test_hand_case_fallback():
    e = date_estimate([0.0, 0.1, -0.1, 0.2, 0.2, -0.3, 0.3, 5.0], c=1.0, threshold=1.0)
    assert (e.b_q, e.converged) == (8, False)
    assert e.sigma_hat == pytest.approx(6.2 / 8)
    assert e.y_bq == 5.0


# ---- spec examples -----------------------------------------------------------

def test_all_zero_frame():
    e = date_estimate(np.zeros(512))
    assert e.sigma_hat == 0.0 and e.y_bq == 0.0


def test_gaussian_frames_within_band():
    rng = np.random.default_rng(0)
    est = np.array([date_estimate(rng.normal(0, 0.1, 512)).sigma_hat for _ in range(1000)])
    assert np.mean((est >= 0.085) & (est <= 0.115)) >= 0.9


def test_single_outlier_is_trimmed():
    rng = np.random.default_rng(1)
    est = []
    for _ in range(1000):
        f = rng.normal(0, 0.05, 512)
        f[rng.integers(512)] = 1.0
        est.append(date_estimate(f).sigma_hat)
    assert abs(np.median(est) / 0.05 - 1) < 0.2


def test_errors():
    with pytest.raises(ValueError):
        date_estimate([])
    with pytest.raises(ValueError):
        date_estimate([1.0, 2.0], c=0)


@pytest.mark.parametrize("frame,expected", [([1, -1, 1, -1], 1.0), ([3, 3, 3], 0.0), ([0, 0, 2, 2], 1.0)])
def test_frame_std(frame, expected):
    assert frame_std(frame) == expected


def test_single_sample_falls_back():
    e = date_estimate([-0.5])
    assert (e.b_q, e.converged, e.y_bq) == (1, False, 0.5)
    assert e.sigma_hat == GAUSSIAN_C * 0.5


def test_tmin_policy():
    assert FractionTMin()(512) == 256
    assert FractionTMin(0.25)(10) == 2
    with pytest.raises(ValueError):
        FractionTMin(1.0)
    e = date_estimate(np.random.default_rng(2).normal(size=64), t_min_policy=FractionTMin(0.75))
    assert e.t_min == 48 and e.b_q > 48


def test_consistent_c_limit():
    assert consistent_c(50.0) == pytest.approx(GAUSSIAN_C, rel=1e-12)
    assert abs(consistent_c(3.0) / GAUSSIAN_C - 1) < 0.01


# ---- properties ----------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(frames, st.sampled_from([1.0, 2.0, 3.0]), st.sampled_from([1.0, GAUSSIAN_C, 2.17]))
def test_matches_reference(frame, threshold, c):
    e = date_estimate(frame, c=c, threshold=threshold)
    b, s, conv = reference_date(frame, c, threshold)
    assert (e.b_q, e.converged) == (b, conv)
    assert e.sigma_hat == pytest.approx(s, rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(frames)
def test_invariants_and_recomputation(frame):
    e = date_estimate(frame)
    y = np.sort(np.abs(frame))
    assert e.sigma_hat >= 0
    assert e.t_min <= e.b_q <= len(frame)
    assert e.y_bq == y[e.b_q - 1]
    assert e.sigma_hat == e.c * np.sum(y[:e.b_q]) / e.b_q


@settings(max_examples=100, deadline=None)
@given(frames, st.integers(-20, 20), st.booleans())
def test_scale_equivariance(frame, exp, negate):
    k = (-1 if negate else 1) * 2.0 ** exp  # powers of two keep the arithmetic exact
    assume(np.all((frame == 0) | (np.abs(frame) > 1e-200)))  # no underflow after scaling
    a, b = date_estimate(frame), date_estimate(k * frame)
    assert b.b_q == a.b_q
    assert b.sigma_hat == abs(k) * a.sigma_hat


def test_scale_equivariance_general_factor():
    rng = np.random.default_rng(3)
    for _ in range(200):
        f = rng.normal(size=512)
        k = rng.uniform(-5, 5)
        a, b = date_estimate(f), date_estimate(k * f)
        assert b.b_q == a.b_q
        assert b.sigma_hat == pytest.approx(abs(k) * a.sigma_hat, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(frames, st.randoms(use_true_random=False))
def test_permutation_invariance(frame, rnd):
    perm = list(frame)
    rnd.shuffle(perm)
    a, b = date_estimate(frame), date_estimate(perm)
    assert (a.b_q, a.sigma_hat, a.y_bq) == (b.b_q, b.sigma_hat, b.y_bq)


def test_error_shrinks_with_frame_length():
    rng = np.random.default_rng(4)
    errs = [np.mean([abs(date_estimate(rng.normal(size=T)).sigma_hat - 1) for _ in range(400)])
            for T in (64, 512, 4096)]
    assert errs[0] > errs[1] > errs[2]
