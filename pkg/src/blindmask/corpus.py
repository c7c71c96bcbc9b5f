"""Synthetic desk corpus.

Stand-ins for clean read speech, multi-talker babble and factory noise.
They share the coarse structure of the real material (harmonic voicing
with moving formants, syllabic on/off envelopes, impulsive machinery)
but are NOT acoustically equivalent to any recorded corpus. Everything
is deterministic given a seed.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from .audio import AudioBuffer, rms

__all__ = [
    "VOWELS",
    "synth_utterance",
    "synth_corpus",
    "babble_noise",
    "factory_noise",
    "white_noise",
]

# (F1, F2, F3) in Hz, adult male-ish averages
VOWELS = {
    "a": (730, 1090, 2440),
    "e": (530, 1840, 2480),
    "i": (270, 2290, 3010),
    "o": (570, 840, 2410),
    "u": (300, 870, 2240),
    "ae": (660, 1720, 2410),
    "er": (490, 1350, 1690),
}

_BANDWIDTHS = (80.0, 110.0, 160.0)
_BLOCK = 80  # samples per coefficient update of the formant filters


def _glottal_source(f0, fs, rng):
    """Band-limited pulse train following the per-sample f0 track ``f0``."""
    phase = 2 * np.pi * np.cumsum(f0) / fs
    n_harm = int(4000 // max(f0.min(), 50.0))
    src = np.zeros_like(f0)
    for k in range(1, n_harm + 1):
        alive = k * f0 < 0.45 * fs
        # -12 dB/octave glottal roll-off
        src += alive * np.cos(k * phase + rng.uniform(0, 0.3)) / k
    return src


def _formant_filter(x, tracks, fs):
    """Cascade of time-varying two-pole resonators.

    ``tracks`` has shape (len(x), 3); coefficients are refreshed every
    ``_BLOCK`` samples and filter state carried across blocks.
    """
    y = x.copy()
    for j in range(tracks.shape[1]):
        bw = _BANDWIDTHS[j]
        r = np.exp(-np.pi * bw / fs)
        zi = np.zeros(2)
        out = np.empty_like(y)
        for start in range(0, len(y), _BLOCK):
            stop = min(start + _BLOCK, len(y))
            fc = tracks[start:stop, j].mean()
            a = [1.0, -2 * r * np.cos(2 * np.pi * fc / fs), r * r]
            b = [sum(a)]  # unit gain at DC
            out[start:stop], zi = signal.lfilter(b, a, y[start:stop], zi=zi)
        y = out
    return y


def _syllable_env(n, fs):
    attack = min(n // 3, int(0.03 * fs))
    release = min(n // 3, int(0.05 * fs))
    env = np.ones(n)
    env[:attack] = np.sin(0.5 * np.pi * np.arange(attack) / attack) ** 2
    env[n - release:] = np.cos(0.5 * np.pi * np.arange(release) / release) ** 2
    return env


def synth_utterance(seed: int, duration: float = 3.0, sample_rate: int = 16000) -> AudioBuffer:
    """Vowel-like synthetic sentence of about ``duration`` seconds.

    Words of 1-4 syllables separated by short pauses; each syllable is a
    voiced nucleus with a falling/rising f0 and a formant glide between two
    vowel targets, optionally preceded by a fricative burst. Peak level is
    0.5.
    """
    if duration < 0.8:
        raise ValueError("duration must be at least 0.8 s")
    rng = np.random.default_rng(seed)
    fs = sample_rate
    n_total = int(round(duration * fs))
    base_f0 = rng.uniform(95, 210)
    names = list(VOWELS)

    x = np.zeros(n_total)
    pos = int(rng.uniform(0.12, 0.25) * fs)
    end_pad = int(0.15 * fs)
    while True:
        n_syll = rng.integers(1, 5)
        word_len = 0
        segments = []
        for _ in range(n_syll):
            fric = int(rng.uniform(0.04, 0.09) * fs) if rng.random() < 0.4 else 0
            nucleus = int(rng.uniform(0.11, 0.26) * fs)
            segments.append((fric, nucleus))
            word_len += fric + nucleus
        if pos + word_len > n_total - end_pad:
            if x.any():
                break
            continue  # redraw until at least one word fits
        for fric, nucleus in segments:
            if fric:
                burst = rng.standard_normal(fric)
                cutoff = rng.uniform(2500, 4500)
                sos = signal.butter(4, cutoff, "highpass", fs=fs, output="sos")
                burst = signal.sosfilt(sos, burst) * _syllable_env(fric, fs)
                x[pos:pos + fric] += 0.08 * burst
                pos += fric
            t = np.arange(nucleus) / fs
            f0 = base_f0 * (1 + rng.uniform(-0.15, 0.15) * t / t[-1]) \
                * (1 + 0.01 * rng.standard_normal(nucleus).cumsum() / np.sqrt(nucleus))
            v0, v1 = (VOWELS[names[i]] for i in rng.integers(0, len(names), 2))
            glide = np.clip((t - 0.3 * t[-1]) / (0.5 * t[-1]), 0, 1)[:, None]
            tracks = (1 - glide) * np.array(v0) + glide * np.array(v1)
            voiced = _formant_filter(_glottal_source(f0, fs, rng), tracks, fs)
            voiced *= _syllable_env(nucleus, fs) * rng.uniform(0.5, 1.0) / (np.abs(voiced).max() + 1e-12)
            x[pos:pos + nucleus] += voiced
            pos += nucleus
        pos += int(rng.uniform(0.06, 0.25) * fs)

    x *= 0.5 / np.abs(x).max()
    return AudioBuffer(x, fs)


def synth_corpus(n: int, seed: int = 0, duration: float = 3.0, sample_rate: int = 16000):
    """``n`` utterances with independent seeds derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).generate_state(n)
    return [synth_utterance(int(s), duration, sample_rate) for s in seeds]


def _envelope(x, fs, cutoff=12.0):
    sos = signal.butter(2, cutoff, fs=fs, output="sos")
    return np.maximum(signal.sosfiltfilt(sos, np.abs(x)), 0.0)


def babble_noise(seed: int, duration: float = 8.0, sample_rate: int = 16000,
                 n_talkers: int = 6) -> AudioBuffer:
    """Multi-talker babble surrogate.

    Sum of ``n_talkers`` Gaussian noises, each coloured by the long-term
    spectrum of one synthetic talker and modulated by that talker's
    syllabic envelope.
    """
    from .audio import generate_ssn

    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    for k in range(n_talkers):
        talker = synth_utterance(int(rng.integers(2**31)), duration, sample_rate)
        shaped = generate_ssn(talker, n, int(rng.integers(2**31))).samples
        env = _envelope(talker.samples, sample_rate)
        out += shaped * env / (rms(env) + 1e-12)
    return AudioBuffer(out / np.abs(out).max() * 0.5, sample_rate)


def factory_noise(seed: int, duration: float = 8.0, sample_rate: int = 16000) -> AudioBuffer:
    """Machinery surrogate: hum + whine tones, pinkish floor, hammer impacts."""
    rng = np.random.default_rng(seed)
    fs = sample_rate
    n = int(round(duration * fs))
    t = np.arange(n) / fs

    hum_f = rng.uniform(48, 62)
    tonal = sum(np.cos(2 * np.pi * k * hum_f * t + rng.uniform(0, 2 * np.pi)) / k
                for k in range(1, 6))
    whine_f = rng.uniform(1200, 2600)
    tonal += 0.4 * np.cos(2 * np.pi * whine_f * t * (1 + 0.002 * np.sin(2 * np.pi * 0.3 * t)))

    white = rng.standard_normal(n)
    # pinkish floor: one-pole low-pass on white noise
    floor = signal.lfilter([1.0], [1.0, -0.95], white)
    floor *= 1.0 / rms(floor)

    impacts = np.zeros(n)
    rate = rng.uniform(2.0, 4.0)  # hits per second
    n_hits = rng.poisson(rate * duration)
    ring = int(0.12 * fs)
    for onset in rng.integers(0, max(1, n - ring), n_hits):
        f_ring = rng.uniform(600, 4000)
        tau = rng.uniform(0.01, 0.04)
        tt = np.arange(ring) / fs
        hit = np.exp(-tt / tau) * (np.sin(2 * np.pi * f_ring * tt) + 0.5 * rng.standard_normal(ring))
        impacts[onset:onset + ring] += rng.uniform(2.0, 5.0) * hit

    out = 0.6 * tonal / rms(tonal) + floor + impacts
    return AudioBuffer(out / np.abs(out).max() * 0.5, fs)


def white_noise(seed: int, duration: float = 8.0, sample_rate: int = 16000) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(int(round(duration * sample_rate)))
    return AudioBuffer(0.1 * x, sample_rate)
