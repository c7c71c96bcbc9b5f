"""Gammatone analysis and ideal time-frequency masks (IBM, TBM).

The filterbank is a cascade of four identical complex one-pole sections
per channel, which samples the 4th-order gammatone impulse response
``t**3 * exp(-2*pi*b*t) * exp(2j*pi*fc*t)`` with ``b = 1.019 * ERB(fc)``.
The complex output gives both the bandpass signal (real part) and its
phase, which resynthesis uses to line channels up before summing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal

from .audio import AudioBuffer, generate_ssn

__all__ = [
    "erb_rate",
    "erb_bandwidth",
    "erb_center_frequencies",
    "GammatoneBank",
    "ChannelSignals",
    "TFGrid",
    "BinaryMask",
    "gammatone_analyze",
    "tf_energy",
    "ibm_compute",
    "tbm_compute",
    "mask_resynthesize",
    "ibm_process",
    "tbm_process",
    "write_mask",
    "read_mask",
    "default_bank",
]

ORDER = 4
BANDWIDTH_FACTOR = 1.019


def erb_rate(f):
    """ERB-rate (number of ERBs below ``f``)."""
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=np.float64))


def _inverse_erb_rate(e):
    return (10.0 ** (np.asarray(e) / 21.4) - 1.0) / 0.00437


def erb_bandwidth(f):
    """Equivalent rectangular bandwidth in Hz at ``f``."""
    return 24.7 * (0.00437 * np.asarray(f, dtype=np.float64) + 1.0)


def erb_center_frequencies(n: int, f_lo: float, f_hi: float) -> np.ndarray:
    """``n`` frequencies equally spaced on the ERB-rate scale, endpoints exact."""
    if n < 2:
        raise ValueError("need at least 2 channels")
    if not 0 < f_lo < f_hi:
        raise ValueError("require 0 < f_lo < f_hi")
    f = _inverse_erb_rate(np.linspace(erb_rate(f_lo), erb_rate(f_hi), n))
    f[0], f[-1] = f_lo, f_hi
    return f


@dataclass(frozen=True, eq=False)
class GammatoneBank:
    center_freqs: np.ndarray
    sample_rate: int
    order: int = ORDER

    def __post_init__(self):
        fc = np.asarray(self.center_freqs, dtype=np.float64)
        if fc.ndim != 1 or fc.size == 0:
            raise ValueError("center_freqs must be a non-empty 1-D sequence")
        if np.any(np.diff(fc) <= 0):
            raise ValueError("center_freqs must be strictly increasing")
        if fc[0] <= 0 or fc[-1] >= self.sample_rate / 2:
            raise ValueError(f"center frequencies must lie in (0, {self.sample_rate / 2}) Hz")
        fc.flags.writeable = False
        object.__setattr__(self, "center_freqs", fc)

    @classmethod
    def erb_spaced(cls, n: int, f_lo: float, f_hi: float, sample_rate: int) -> "GammatoneBank":
        return cls(erb_center_frequencies(n, f_lo, f_hi), sample_rate)

    @property
    def n_channels(self) -> int:
        return self.center_freqs.shape[0]

    @property
    def poles(self) -> np.ndarray:
        b = BANDWIDTH_FACTOR * erb_bandwidth(self.center_freqs)
        lam = np.exp(-2 * np.pi * b / self.sample_rate)
        return lam * np.exp(2j * np.pi * self.center_freqs / self.sample_rate)

    @property
    def delays(self) -> np.ndarray:
        """Envelope-peak delay of each channel, in whole samples."""
        b = BANDWIDTH_FACTOR * erb_bandwidth(self.center_freqs)
        return np.round((self.order - 1) * self.sample_rate / (2 * np.pi * b)).astype(int)

    def phases(self) -> np.ndarray:
        """Phase of each channel's impulse response at its delay."""
        n = self.delays
        a = self.poles
        # impulse response of (1-|a|)^4 / (1 - a z^-1)^4 at sample n is
        # gain * C(n+3, 3) * a^n; only the angle of a^n matters here
        return np.angle(a ** n)

    def impulse_response(self, length: int) -> np.ndarray:
        x = np.zeros(length)
        x[0] = 1.0
        return _filter_complex(x, self)


def default_bank(sample_rate: int, n_channels: int = 64, f_lo: float = 50.0,
                 f_hi: float = 8000.0) -> GammatoneBank:
    """64 ERB-spaced channels from 50 Hz up to 8 kHz.

    The top channel is capped at 0.49 of the sample rate so it stays below
    Nyquist (at 16 kHz the cap is 7840 Hz).
    """
    return GammatoneBank.erb_spaced(n_channels, f_lo, min(f_hi, 0.49 * sample_rate), sample_rate)


def _filter_complex(x, bank: GammatoneBank) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((bank.n_channels, x.shape[0]), dtype=np.complex128)
    for k, a in enumerate(bank.poles):
        gain = (1.0 - abs(a))
        y = x.astype(np.complex128)
        for _ in range(bank.order):
            y = signal.lfilter([gain], [1.0, -a], y)
        # analytic filter passes only positive frequencies: double for real input
        out[k] = 2.0 * y
    return out


@dataclass(frozen=True, eq=False)
class ChannelSignals:
    """Complex filterbank output, already padded to absorb channel delays.

    ``analytic`` has shape ``(n_channels, length + max_delay)``; the real
    part of row ``k`` is channel ``k``'s gammatone response.
    """

    analytic: np.ndarray
    bank: GammatoneBank
    length: int

    @property
    def data(self) -> np.ndarray:
        """Real bandpass responses, ``(n_channels, length)``."""
        return self.analytic.real[:, :self.length]

    @property
    def delays(self) -> np.ndarray:
        return self.bank.delays

    def aligned(self) -> np.ndarray:
        """Delay- and phase-compensated real channel signals, ``(n_channels, length)``."""
        d = self.bank.delays
        rot = np.exp(-1j * self.bank.phases())
        out = np.empty((self.analytic.shape[0], self.length))
        for k in range(out.shape[0]):
            out[k] = (self.analytic[k, d[k]:d[k] + self.length] * rot[k]).real
        return out


def gammatone_analyze(buffer: AudioBuffer, bank: GammatoneBank) -> ChannelSignals:
    if buffer.sample_rate != bank.sample_rate:
        raise ValueError(f"sample rate mismatch: {buffer.sample_rate} vs {bank.sample_rate}")
    pad = int(bank.delays.max())
    x = np.concatenate([buffer.samples, np.zeros(pad)])
    return ChannelSignals(_filter_complex(x, bank), bank, len(buffer))


# --------------------------------------------------------------------------
# T-F grid and masks
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TFGrid:
    energies: np.ndarray
    win_ms: float
    hop_ms: float
    sample_rate: int
    signal_len: int

    @property
    def shape(self):
        return self.energies.shape

    @property
    def win_len(self) -> int:
        return _ms(self.win_ms, self.sample_rate)

    @property
    def hop_len(self) -> int:
        return _ms(self.hop_ms, self.sample_rate)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray
    win_ms: float
    hop_ms: float
    sample_rate: int
    signal_len: int

    @property
    def shape(self):
        return self.bits.shape

    @classmethod
    def like(cls, grid: TFGrid, bits) -> "BinaryMask":
        return cls(np.asarray(bits, dtype=np.uint8), grid.win_ms, grid.hop_ms,
                   grid.sample_rate, grid.signal_len)


def _ms(ms, fs):
    return int(round(ms * fs / 1000.0))


def _n_frames(length, win, hop):
    return max(1, (length - win) // hop + 1) if length >= win else 1


def _window(win):
    return signal.get_window("hann", win, fftbins=True)


def tf_energy(channels, win_ms: float = 20.0, hop_ms: float = 10.0) -> TFGrid:
    """Windowed energy per (channel, frame).

    ``channels`` is either :class:`ChannelSignals` (energies are taken on
    the delay-compensated channels, matching resynthesis) or a plain
    ``(n_channels, length)`` array with an accompanying sample rate in a
    ``(array, sample_rate)`` tuple.
    """
    if isinstance(channels, ChannelSignals):
        x = channels.aligned()
        fs = channels.bank.sample_rate
    else:
        x, fs = channels
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if not win_ms >= hop_ms > 0:
        raise ValueError("require win_ms >= hop_ms > 0")
    win, hop = _ms(win_ms, fs), _ms(hop_ms, fs)
    length = x.shape[1]
    if length < win:
        x = np.pad(x, ((0, 0), (0, win - length)))
    n = _n_frames(length, win, hop)
    w2 = _window(win) ** 2
    idx = np.arange(n)[:, None] * hop + np.arange(win)[None, :]
    energies = (x[:, idx] ** 2 * w2).sum(axis=-1)
    return TFGrid(energies, win_ms, hop_ms, fs, length)


def _check_shapes(a: TFGrid, b: TFGrid):
    if a.shape != b.shape:
        raise ValueError(f"grid shape mismatch: {a.shape} vs {b.shape}")


def _local_snr_db(num, den):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return 10.0 * np.log10(num / den)


def ibm_compute(clean_grid: TFGrid, noise_grid: TFGrid, mixture_snr_db: float = 0.0,
                rc_db: float = -5.0, absolute_lc: float = None) -> BinaryMask:
    """Ideal binary mask: 1 where the local SNR strictly exceeds the LC.

    ``LC = mixture_snr_db + rc_db`` unless ``absolute_lc`` is given.
    """
    _check_shapes(clean_grid, noise_grid)
    lc = absolute_lc if absolute_lc is not None else mixture_snr_db + rc_db
    snr = _local_snr_db(clean_grid.energies, noise_grid.energies)
    # nan (0/0) compares False -> 0; +inf (noise-free unit) -> 1
    bits = snr > lc
    return BinaryMask.like(clean_grid, bits)


def tbm_compute(clean_grid: TFGrid, ssn_grid: TFGrid, coverage: float = 0.99) -> BinaryMask:
    """Target binary mask with per-channel thresholds.

    In each channel, units are ranked by ``E_clean / E_ssn`` and the
    threshold is the highest one whose retained units still hold at least
    ``coverage`` of the channel's clean energy.
    """
    _check_shapes(clean_grid, ssn_grid)
    if not 0 < coverage <= 1:
        raise ValueError("coverage must lie in (0, 1]")
    ec = clean_grid.energies
    bits = np.zeros(ec.shape, dtype=bool)
    if coverage >= 1.0:
        bits = ec > 0
        return BinaryMask.like(clean_grid, bits)
    ratio = _local_snr_db(ec, ssn_grid.energies)
    ratio = np.where(ec > 0, ratio, -np.inf)
    for k in range(ec.shape[0]):
        if not np.any(ec[k] > 0):
            continue
        order = np.argsort(-ratio[k], kind="stable")
        cum = np.cumsum(ec[k, order])
        j = int(np.searchsorted(cum, coverage * cum[-1], side="left"))
        j = min(j, len(order) - 1)
        bits[k] = ratio[k] >= ratio[k, order[j]]
    return BinaryMask.like(clean_grid, bits)


def _frame_weights(bits_row, n_samples, win, hop, window):
    n_frames = bits_row.shape[0]
    num = np.zeros(max(n_samples, (n_frames - 1) * hop + win))
    den = np.zeros_like(num)
    for j in range(n_frames):
        sl = slice(j * hop, j * hop + win)
        num[sl] += bits_row[j] * window
        den[sl] += window
    num, den = num[:n_samples], den[:n_samples]
    w = np.empty(n_samples)
    ok = den > 1e-6
    w[ok] = num[ok] / den[ok]
    # uncovered samples (edges) take the nearest frame's value
    if not ok.all():
        nearest = np.clip(np.round((np.arange(n_samples) - win / 2) / hop).astype(int), 0, n_frames - 1)
        w[~ok] = bits_row[nearest[~ok]]
    return w


def _synthesis_gain(bank: GammatoneBank) -> float:
    """Scalar making the summed, aligned impulse response closest to a unit impulse."""
    return _cached_gain(tuple(float(f) for f in bank.center_freqs), bank.sample_rate, bank.order)


@lru_cache(maxsize=16)
def _cached_gain(freqs, fs, order) -> float:
    bank = GammatoneBank(np.array(freqs), fs, order)
    length = int(bank.delays.max()) + 4096
    x = np.zeros(length)
    x[0] = 1.0
    chans = ChannelSignals(_filter_complex(x, bank), bank, length - int(bank.delays.max()))
    h = chans.aligned().sum(axis=0)
    return float(h[0] / np.dot(h, h))


def mask_resynthesize(noisy_channels: ChannelSignals, mask: BinaryMask, bank: GammatoneBank = None) -> AudioBuffer:
    """Weight each aligned channel by its (cross-faded) mask and sum."""
    bank = bank or noisy_channels.bank
    fs = bank.sample_rate
    if mask.bits.shape[0] != bank.n_channels or mask.sample_rate != fs:
        raise ValueError("mask geometry does not match the filterbank")
    length = noisy_channels.length
    win, hop = _ms(mask.win_ms, fs), _ms(mask.hop_ms, fs)
    if mask.bits.shape[1] != _n_frames(length, win, hop):
        raise ValueError("mask frame count does not match the channel length")
    window = _window(win)
    aligned = noisy_channels.aligned()
    out = np.zeros(length)
    for k in range(bank.n_channels):
        row = mask.bits[k].astype(np.float64)
        if not row.any():
            continue
        out += _frame_weights(row, length, win, hop, window) * aligned[k]
    return AudioBuffer(out * _synthesis_gain(bank), fs)


# --------------------------------------------------------------------------
# end-to-end ideal-mask processing
# --------------------------------------------------------------------------

def ibm_process(mixture: AudioBuffer, clean: AudioBuffer, noise: AudioBuffer, mixture_snr_db: float,
                rc_db: float = -5.0, bank: GammatoneBank = None):
    """Apply the IBM built from ``clean`` and the scaled ``noise`` to ``mixture``."""
    bank = bank or default_bank(mixture.sample_rate)
    mix_ch = gammatone_analyze(mixture, bank)
    mask = ibm_compute(tf_energy(gammatone_analyze(clean, bank)),
                       tf_energy(gammatone_analyze(noise, bank)), mixture_snr_db, rc_db)
    return mask_resynthesize(mix_ch, mask, bank), mask


def tbm_process(mixture: AudioBuffer, clean: AudioBuffer, coverage: float = 0.99, seed: int = 0,
                ssn: AudioBuffer = None, bank: GammatoneBank = None):
    """Apply the TBM (clean vs. speech-shaped noise at the clean level) to ``mixture``."""
    bank = bank or default_bank(mixture.sample_rate)
    if ssn is None:
        ssn = generate_ssn(clean, len(clean), seed)
    mix_ch = gammatone_analyze(mixture, bank)
    mask = tbm_compute(tf_energy(gammatone_analyze(clean, bank)),
                       tf_energy(gammatone_analyze(ssn, bank)), coverage)
    return mask_resynthesize(mix_ch, mask, bank), mask


# --------------------------------------------------------------------------
# text dump
# --------------------------------------------------------------------------

def write_mask(path, mask: BinaryMask) -> None:
    """One line of '0'/'1' per channel under a geometry header."""
    n_ch, n_fr = mask.shape
    with open(path, "w") as fh:
        fh.write(f"# n_channels={n_ch} n_frames={n_fr} win_ms={mask.win_ms} hop_ms={mask.hop_ms} "
                 f"sample_rate={mask.sample_rate} signal_len={mask.signal_len}\n")
        for row in mask.bits:
            fh.write("".join("1" if b else "0" for b in row) + "\n")


def read_mask(path) -> BinaryMask:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("missing mask header")
        meta = dict(kv.split("=") for kv in header[1:].split())
        rows = [line.strip() for line in fh if line.strip()]
    bits = np.array([[ch == "1" for ch in row] for row in rows], dtype=np.uint8)
    if bits.shape != (int(meta["n_channels"]), int(meta["n_frames"])):
        raise ValueError("mask body does not match header geometry")
    return BinaryMask(bits, float(meta["win_ms"]), float(meta["hop_ms"]),
                      int(meta["sample_rate"]), int(meta["signal_len"]))
