import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from blindmask import AudioBuffer, BinaryMask, GammatoneBank, default_bank, gammatone_analyze
from blindmask.tfmasks import (TFGrid, erb_bandwidth, erb_center_frequencies, erb_rate, ibm_compute,
                               ibm_process, mask_resynthesize, read_mask, tbm_compute, tbm_process,
                               tf_energy, write_mask)

from conftest import FS, snr_db, tone


@pytest.fixture(scope="module")
def bank():
    return default_bank(FS)


@pytest.fixture(scope="module")
def speech_channels(speech, bank):
    return gammatone_analyze(speech, bank)


def grid(e, fs=FS):
    return TFGrid(np.asarray(e, dtype=float), 20.0, 10.0, fs, 1000)


# ---- ERB scale -----------------------------------------------------------------

def test_erb_endpoints_and_spacing():
    f = erb_center_frequencies(64, 50, 8000)
    assert f[0] == 50.0 and f[-1] == 8000.0
    d = np.diff(erb_rate(f))
    np.testing.assert_allclose(d, d[0], atol=1e-9)
    np.testing.assert_array_equal(erb_center_frequencies(2, 100, 900), [100, 900])


def test_erb_known_values():
    assert erb_rate(1000.0) == pytest.approx(21.4 * np.log10(5.37))
    assert erb_bandwidth(1000.0) == pytest.approx(24.7 * 5.37)


def test_bank_validation():
    with pytest.raises(ValueError):
        GammatoneBank(np.array([100.0, 50.0]), FS)
    with pytest.raises(ValueError):
        GammatoneBank(np.array([100.0, 8000.0]), FS)
    full = GammatoneBank.erb_spaced(64, 50, 8000, 20000)
    assert full.center_freqs[0] == 50 and full.center_freqs[-1] == 8000


def test_default_bank_below_nyquist(bank):
    assert bank.n_channels == 64 and bank.center_freqs[0] == 50
    assert bank.center_freqs[-1] < FS / 2


def test_impulse_response_matches_gammatone_shape():
    b = GammatoneBank(np.array([1000.0]), FS)
    h = np.abs(b.impulse_response(2000)[0])
    n = np.arange(2000)
    lam = np.abs(b.poles[0])
    ref = (n + 1) * (n + 2) * (n + 3) * lam ** n
    np.testing.assert_allclose(h / h.max(), ref / ref.max(), atol=1e-9)
    assert abs(np.argmax(h) - b.delays[0]) <= 3  # continuous-time peak formula


# ---- analysis ------------------------------------------------------------------

@pytest.mark.parametrize("k", [5, 20, 40, 60])
def test_tone_peaks_in_its_channel(bank, k):
    ch = gammatone_analyze(tone(bank.center_freqs[k]), bank)
    assert np.argmax(np.sqrt(np.mean(ch.data ** 2, axis=1))) == k


def test_zero_and_impulse_input(bank):
    assert not gammatone_analyze(AudioBuffer(np.zeros(800), FS), bank).data.any()
    imp = np.zeros(800)
    imp[0] = 1
    assert np.all(np.sum(gammatone_analyze(AudioBuffer(imp, FS), bank).data ** 2, axis=1) > 0)


def test_rate_mismatch(bank):
    with pytest.raises(ValueError):
        gammatone_analyze(AudioBuffer(np.zeros(100), 8000), bank)


# ---- energies --------------------------------------------------------------------

def test_energy_geometry(speech_channels, speech):
    g = tf_energy(speech_channels)
    assert g.shape == (64, (len(speech) - 320) // 160 + 1)
    assert np.all(g.energies >= 0) and np.all(np.isfinite(g.energies))


def test_energy_scaling():
    x = np.vstack([np.full(1000, 0.3), np.zeros(1000), np.random.default_rng(0).normal(size=1000)])
    g = tf_energy((x, FS))
    win_power = np.sum(np.hanning(322)[1:-1] ** 2)
    np.testing.assert_allclose(g.energies[0], 0.09 * win_power, rtol=1e-2)
    assert not g.energies[1].any()
    np.testing.assert_allclose(tf_energy((2 * x, FS)).energies, 4 * g.energies, rtol=1e-12)


def test_short_signal_single_frame():
    g = tf_energy((np.ones((2, 100)), FS))
    assert g.shape == (2, 1) and g.energies[0, 0] > 0


# ---- IBM -------------------------------------------------------------------------

def test_ibm_examples():
    c = grid([[1.0, 2.0], [0.0, 3.0]])
    assert ibm_compute(c, grid(np.zeros((2, 2)))).bits.tolist() == [[1, 1], [0, 1]]
    assert not ibm_compute(grid(np.zeros((2, 2))), c).bits.any()
    tie = ibm_compute(grid([[10 ** -0.5]]), grid([[1.0]]), 0.0, -5.0)
    assert tie.bits[0, 0] == 0
    assert ibm_compute(grid([[10 ** -0.49]]), grid([[1.0]]), 0.0, -5.0).bits[0, 0] == 1
    assert ibm_compute(grid([[1.0]]), grid([[1.0]]), absolute_lc=-1).bits[0, 0] == 1


def test_ibm_shape_mismatch():
    with pytest.raises(ValueError):
        ibm_compute(grid(np.ones((2, 3))), grid(np.ones((2, 2))))


pos = arrays(np.float64, (4, 6), elements=st.floats(0, 1e3))


@settings(max_examples=80, deadline=None)
@given(pos, pos, st.floats(-20, 20), st.floats(0, 10))
def test_ibm_monotone_in_criterion(c, n, rc, step):
    lo = ibm_compute(grid(c), grid(n), 0.0, rc).bits
    hi = ibm_compute(grid(c), grid(n), 0.0, rc + step).bits
    assert np.all(hi <= lo)


# ---- TBM ------------------------------------------------------------------------

def test_tbm_examples():
    c = grid([[0.0, 5.0, 1.0], [0.0, 0.0, 7.0], [99.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    ssn = grid(np.ones((4, 3)))
    full = tbm_compute(c, ssn, 1.0).bits
    np.testing.assert_array_equal(full, c.energies > 0)
    m = tbm_compute(c, ssn, 0.99).bits
    assert m[1].tolist() == [0, 0, 1]
    assert m[2, 0] == 1
    assert not m[3].any()
    with pytest.raises(ValueError):
        tbm_compute(c, ssn, 0.0)


@settings(max_examples=80, deadline=None)
@given(pos, arrays(np.float64, (4, 6), elements=st.floats(1e-3, 1e3)), st.floats(0.05, 1.0))
def test_tbm_coverage(c, s, cov):
    bits = tbm_compute(grid(c), grid(s), cov).bits.astype(bool)
    for k in range(c.shape[0]):
        total = c[k].sum()
        if total > 0:
            assert c[k][bits[k]].sum() >= cov * total * (1 - 1e-12)


# ---- resynthesis -------------------------------------------------------------------

def _ones_like(g):
    return BinaryMask.like(g, np.ones(g.shape))


def test_all_ones_reconstruction(speech, speech_channels, bank):
    g = tf_energy(speech_channels)
    out = mask_resynthesize(speech_channels, _ones_like(g), bank)
    assert len(out) == len(speech)
    assert snr_db(speech.samples, out.samples) >= 15


def test_all_zeros_is_silent(speech_channels):
    g = tf_energy(speech_channels)
    out = mask_resynthesize(speech_channels, BinaryMask.like(g, np.zeros(g.shape)))
    assert not out.samples.any()


def test_single_channel_band_limited(white, bank):
    ch = gammatone_analyze(white, bank)
    g = tf_energy(ch)
    k = 30
    bits = np.zeros(g.shape)
    bits[k] = 1
    out = mask_resynthesize(ch, BinaryMask.like(g, bits), bank).samples
    f = np.fft.rfftfreq(len(out), 1 / FS)
    p = np.abs(np.fft.rfft(out)) ** 2
    e = erb_rate(f)
    e0 = erb_rate(bank.center_freqs[k])
    inside = p[np.abs(e - e0) <= 1].mean()
    outside = p[np.abs(e - e0) >= 4].mean()
    assert 10 * np.log10(inside / outside) >= 20


def test_resynthesis_linearity(speech_channels):
    g = tf_energy(speech_channels)
    a = (np.random.default_rng(1).random(g.shape) > 0.5).astype(float)
    ra = mask_resynthesize(speech_channels, BinaryMask.like(g, a)).samples
    rb = mask_resynthesize(speech_channels, BinaryMask.like(g, 1 - a)).samples
    r1 = mask_resynthesize(speech_channels, _ones_like(g)).samples
    assert np.max(np.abs(ra + rb - r1)) <= 1e-9 * np.max(np.abs(r1))


def test_geometry_mismatch(speech_channels):
    with pytest.raises(ValueError):
        mask_resynthesize(speech_channels, BinaryMask(np.ones((64, 10)), 20, 10, FS, 1000))


# ---- end to end and dump ---------------------------------------------------------------

def test_ideal_masks_help(speech, babble):
    from blindmask import MixSpec, mix_at_snr
    from blindmask.metrics import stoi

    mix, noise = mix_at_snr(speech, babble, MixSpec(-3.0))
    base = stoi(speech, mix).value
    ibm, m1 = ibm_process(mix, speech, noise, -3.0)
    tbm, m2 = tbm_process(mix, speech, seed=0)
    assert stoi(speech, ibm).value > base and stoi(speech, tbm).value > base
    assert m1.shape == m2.shape


def test_mask_text_round_trip(tmp_path):
    m = BinaryMask(np.random.default_rng(2).integers(0, 2, (64, 30)).astype(np.uint8), 20.0, 10.0, FS, 4960)
    write_mask(tmp_path / "m.txt", m)
    first = (tmp_path / "m.txt").read_text().splitlines()[0]
    assert first == "# n_channels=64 n_frames=30 win_ms=20.0 hop_ms=10.0 sample_rate=16000 signal_len=4960"
    back = read_mask(tmp_path / "m.txt")
    np.testing.assert_array_equal(back.bits, m.bits)
    assert (back.win_ms, back.hop_ms, back.sample_rate, back.signal_len) == (20.0, 10.0, FS, 4960)
