"""Audio plumbing: WAV I/O, framing, normalization, SNR mixing, resampling
and speech-shaped noise.

Every function here is pure; buffers are immutable once constructed.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile

__all__ = [
    "AudioError",
    "AudioReadError",
    "UnsupportedFormatError",
    "AudioBuffer",
    "FrameSequence",
    "MixSpec",
    "read_wav",
    "write_wav",
    "frame_split",
    "concat_frames",
    "normalize_peak",
    "rms",
    "active_rms",
    "mix_at_snr",
    "resample",
    "generate_ssn",
]


class AudioError(Exception):
    """Base class for audio plumbing failures."""


class AudioReadError(AudioError):
    """The file could not be opened or read."""


class UnsupportedFormatError(AudioError):
    """The file is not a PCM16 / float32 RIFF WAV, or its header is broken."""


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono sampled signal.

    ``samples`` is stored as a read-only float64 array.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate)


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Non-overlapping frames of one signal.

    ``tail_policy`` is ``"none"`` when the signal length is a multiple of
    ``frame_len`` and ``"partial"`` when the last frame is shorter.
    """

    frames: tuple
    frame_len: int
    sample_rate: int
    tail_policy: str = "none"

    def __len__(self):
        return len(self.frames)

    @property
    def n_samples(self) -> int:
        return sum(f.shape[0] for f in self.frames)


@dataclass(frozen=True)
class MixSpec:
    snr_db: float
    noise_seek: int = 0
    level_basis: str = "rms"

    def __post_init__(self):
        if self.level_basis not in ("rms", "active-rms"):
            raise ValueError(f"unknown level_basis {self.level_basis!r}")
        if self.noise_seek < 0:
            raise ValueError("noise_seek must be >= 0")


# --------------------------------------------------------------------------
# WAV I/O
# --------------------------------------------------------------------------

def read_wav(path) -> AudioBuffer:
    """Read a PCM16 or IEEE float32 WAV file as a mono buffer.

    Multichannel data is averaged across channels. Integer samples are
    scaled by ``2**-15`` so they land in ``[-1, 1)``.

    Raises
    ------
    AudioReadError
        The path does not exist or cannot be opened.
    UnsupportedFormatError
        Truncated/invalid RIFF data or a sample format other than PCM16
        and float32.
    """
    path = Path(path)
    try:
        with open(path, "rb"):
            pass
    except OSError as exc:
        raise AudioReadError(f"cannot open {path}: {exc}") from exc
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError, IndexError, struct.error) as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported sample type {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioBuffer(x, rate)


def write_wav(path, buffer: AudioBuffer, format: str = "pcm16") -> int:
    """Write ``buffer`` to ``path``; returns the number of clipped samples.

    ``pcm16`` clips values outside ``[-1, 1]`` (those are counted) and
    rounds to the nearest code. ``float32`` is lossless for any value
    representable in single precision.
    """
    x = buffer.samples
    clip_count = 0
    if format == "pcm16":
        clip_count = int(np.count_nonzero(np.abs(x) > 1.0))
        codes = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
        data = codes
    elif format == "float32":
        data = x.astype(np.float32)
    else:
        raise ValueError(f"unknown WAV format {format!r}")
    try:
        wavfile.write(Path(path), buffer.sample_rate, data)
    except OSError as exc:
        raise AudioError(f"cannot write {path}: {exc}") from exc
    return clip_count


# --------------------------------------------------------------------------
# framing
# --------------------------------------------------------------------------

def frame_length(frame_ms: float, sample_rate: int) -> int:
    if frame_ms <= 0:
        raise ValueError("frame_ms must be positive")
    n = int(math.floor(frame_ms * sample_rate / 1000.0 + 0.5))
    if n < 2:
        raise ValueError(f"frame of {frame_ms} ms at {sample_rate} Hz is shorter than 2 samples")
    return n


def frame_split(buffer: AudioBuffer, frame_ms: float) -> FrameSequence:
    """Cut ``buffer`` into consecutive non-overlapping frames.

    A final partial frame is kept as-is rather than padded or dropped.
    """
    n = frame_length(frame_ms, buffer.sample_rate)
    x = buffer.samples
    frames = tuple(x[i:i + n] for i in range(0, len(x), n))
    tail = "partial" if len(x) % n else "none"
    return FrameSequence(frames, n, buffer.sample_rate, tail)


def concat_frames(frames: FrameSequence) -> AudioBuffer:
    if not frames.frames:
        return AudioBuffer(np.zeros(0), frames.sample_rate)
    return AudioBuffer(np.concatenate(frames.frames), frames.sample_rate)


# --------------------------------------------------------------------------
# levels
# --------------------------------------------------------------------------

def normalize_peak(buffer: AudioBuffer):
    """Scale to unit peak magnitude.

    Returns ``(normalized, scale)`` with ``buffer == normalized * scale``.
    """
    scale = float(np.max(np.abs(buffer.samples))) if len(buffer) else 0.0
    if scale == 0.0:
        raise ValueError("cannot normalize a silent buffer")
    return buffer.with_samples(buffer.samples / scale), scale


def rms(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def active_rms(x, sample_rate: int, frame_ms: float = 20.0, floor_db: float = 40.0) -> float:
    """RMS over frames within ``floor_db`` of the loudest frame."""
    x = np.asarray(x, dtype=np.float64)
    n = max(1, int(round(frame_ms * sample_rate / 1000.0)))
    n_frames = max(1, len(x) // n)
    energies = np.array([np.sum(x[i * n:(i + 1) * n] ** 2) for i in range(n_frames)])
    if energies.max() == 0:
        return 0.0
    keep = energies > energies.max() * 10 ** (-floor_db / 10)
    return float(np.sqrt(energies[keep].sum() / (keep.sum() * n)))


def _level(x, sample_rate, basis):
    return rms(x) if basis == "rms" else active_rms(x, sample_rate)


def mix_at_snr(clean: AudioBuffer, noise: AudioBuffer, spec: MixSpec):
    """Add ``noise`` to ``clean`` at ``spec.snr_db``.

    The noise is cropped starting at ``spec.noise_seek``; it is never
    looped. Returns ``(mixture, scaled_noise)``.
    """
    if clean.sample_rate != noise.sample_rate:
        raise ValueError(f"sample rate mismatch: {clean.sample_rate} vs {noise.sample_rate}")
    n = len(clean)
    start = spec.noise_seek
    if len(noise) - start < n:
        raise ValueError(f"noise too short: need {n} samples from offset {start}, have {len(noise) - start}")
    crop = noise.samples[start:start + n]
    level_c = _level(clean.samples, clean.sample_rate, spec.level_basis)
    level_n = rms(crop)
    if level_n == 0.0:
        raise ValueError("noise segment is silent")
    gain = 10 ** (-spec.snr_db / 20.0) * level_c / level_n
    scaled = crop * gain
    return clean.with_samples(clean.samples + scaled), clean.with_samples(scaled)


# --------------------------------------------------------------------------
# resampling
# --------------------------------------------------------------------------

_TAPS_PER_PHASE = 64
_KAISER_BETA = 8.0


def _resample_filter(up: int, down: int) -> np.ndarray:
    max_rate = max(up, down)
    half_len = _TAPS_PER_PHASE // 2 * max_rate
    h = signal.firwin(2 * half_len + 1, 1.0 / max_rate, window=("kaiser", _KAISER_BETA))
    return h


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Polyphase windowed-sinc resampling to ``target_rate``."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == buffer.sample_rate:
        return buffer
    ratio = Fraction(int(target_rate), buffer.sample_rate)
    up, down = ratio.numerator, ratio.denominator
    if len(buffer) == 0:
        return AudioBuffer(np.zeros(0), target_rate)
    y = signal.resample_poly(buffer.samples, up, down, window=_resample_filter(up, down))
    return AudioBuffer(y, target_rate)


# --------------------------------------------------------------------------
# speech-shaped noise
# --------------------------------------------------------------------------

def long_term_spectrum(x, sample_rate: int, nperseg: int = 512):
    """Welch-averaged power spectrum with 50 % overlap."""
    return signal.welch(x, fs=sample_rate, window="hann", nperseg=nperseg,
                        noverlap=nperseg // 2, detrend=False)


def generate_ssn(reference: AudioBuffer, length: int, seed: int) -> AudioBuffer:
    """Gaussian noise shaped by the long-term spectrum of ``reference``.

    The output has the same RMS as ``reference`` and depends only on the
    inputs and ``seed``.
    """
    if len(reference) < 4096:
        raise ValueError("reference must hold at least 4096 samples")
    freqs, psd = long_term_spectrum(reference.samples, reference.sample_rate)
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(length)
    spectrum = np.fft.rfft(white)
    bins = np.fft.rfftfreq(length, d=1.0 / reference.sample_rate)
    shaped = np.fft.irfft(spectrum * np.sqrt(np.interp(bins, freqs, psd)), n=length)
    level = rms(shaped)
    if level > 0:
        shaped *= rms(reference.samples) / level
    return AudioBuffer(shaped, reference.sample_rate)
