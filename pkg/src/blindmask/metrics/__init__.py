"""Objective evaluation: STOI and the surrogate-based index of non-stationarity."""

import csv
import json

from .ins import (DEFAULT_SCALES, InsProfile, hermite_tapers, ins_compute, ins_max,
                  multitaper_spectrogram, spectral_distance, surrogate)
from .stoi import StoiScore, normalize_score, stoi, stoi_normalized, third_octave_bands

__all__ = [
    "DEFAULT_SCALES",
    "InsProfile",
    "StoiScore",
    "hermite_tapers",
    "ins_compute",
    "ins_max",
    "multitaper_spectrogram",
    "normalize_score",
    "spectral_distance",
    "stoi",
    "stoi_normalized",
    "surrogate",
    "third_octave_bands",
    "metric_json",
    "write_ins_csv",
    "read_ins_csv",
]


def metric_json(metric: str, value: float, params: dict = None, seed: int = None) -> str:
    return json.dumps({"metric": metric, "value": value, "params": params or {}, "seed": seed},
                      sort_keys=True)


def write_ins_csv(path, profile: InsProfile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("scale", "ins", "gamma", "verdict"))
        for s, i, g, ns in zip(profile.scales, profile.ins, profile.gamma, profile.nonstationary):
            w.writerow((repr(s), repr(i), repr(g), "nonstationary" if ns else "stationary"))


def read_ins_csv(path):
    """Rows of ``(scale, ins, gamma, verdict)`` as written by :func:`write_ins_csv`."""
    with open(path, newline="") as fh:
        return [(float(r["scale"]), float(r["ins"]), float(r["gamma"]), r["verdict"])
                for r in csv.DictReader(fh)]
