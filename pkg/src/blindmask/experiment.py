"""Batch evaluation and timing harness.

A run crosses every clean utterance with every noise recording and SNR,
applies each requested method and scores it against the clean reference.
Methods: ``unp`` (no processing), ``bam`` (blind mask, sees only the
mixture), ``ibm`` and ``tbm`` (ideal masks, see the clean signal and, for
the IBM, the scaled noise). Metrics: ``stoi``, ``stoi_norm`` (STOI over
the STOI of the clean signal in speech-shaped noise at 10 dB, capped at 1)
and ``ins`` (maximum INS over scales).
"""

from __future__ import annotations

import csv
import gc
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .audio import AudioBuffer, MixSpec, generate_ssn, mix_at_snr, read_wav, write_wav
from .bam import BamParams, bam_process
from .metrics import DEFAULT_SCALES, StoiScore, ins_compute, normalize_score, stoi
from .tfmasks import (default_bank, gammatone_analyze, ibm_compute, ibm_process,
                      mask_resynthesize, tbm_compute, tbm_process, tf_energy)

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "METRICS",
    "REPORT_COLUMNS",
    "ExperimentConfig",
    "EvalReport",
    "load_config",
    "run_batch",
    "evaluate",
    "bench_methods",
    "write_report",
    "write_desk_corpus",
    "reference_score",
]

METHODS = ("unp", "bam", "ibm", "tbm")
METRICS = ("stoi", "stoi_norm", "ins")
REPORT_COLUMNS = ("utterance", "noise", "snr_db", "method", "metric", "value", "status")
REPORT_SCHEMA_VERSION = 1
REFERENCE_SNR_DB = 10.0
MIN_SAMPLE_SECONDS = 0.02


@dataclass
class ExperimentConfig:
    clean_dir: str = ""
    noise_files: Dict[str, str] = field(default_factory=dict)
    snrs_db: List[float] = field(default_factory=lambda: [-6.0, -5.0, -3.0, 0.0, 3.0, 5.0])
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    metrics: List[str] = field(default_factory=lambda: ["stoi"])
    seed: int = 0
    output_dir: str = "results"
    bam: BamParams = field(default_factory=BamParams)
    rc_db: float = -5.0
    coverage: float = 0.99
    ins_surrogates: int = 50
    ins_scales: List[float] = field(default_factory=lambda: list(DEFAULT_SCALES))
    max_utterances: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.bam, dict):
            self.bam = BamParams(**self.bam)
        if isinstance(self.noise_files, (list, tuple)):
            self.noise_files = {Path(p).stem: p for p in self.noise_files}
        self.validate()

    def validate(self):
        if not self.snrs_db:
            raise ValueError("snrs_db must not be empty")
        if not self.methods or not self.metrics:
            raise ValueError("need at least one method and one metric")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods: {sorted(bad)}")
        bad = set(self.metrics) - set(METRICS)
        if bad:
            raise ValueError(f"unknown metrics: {sorted(bad)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bam"] = asdict(self.bam)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    """Read a JSON config; relative paths resolve against the file's folder."""
    path = Path(path)
    with open(path) as fh:
        raw = json.load(fh)
    base = path.parent
    if "clean_dir" in raw:
        raw["clean_dir"] = str((base / raw["clean_dir"]).resolve())
    nf = raw.get("noise_files", {})
    if isinstance(nf, list):
        nf = {Path(p).stem: p for p in nf}
    raw["noise_files"] = {k: str((base / v).resolve()) for k, v in nf.items()}
    if "output_dir" in raw:
        raw["output_dir"] = str((base / raw["output_dir"]).resolve())
    return ExperimentConfig(**raw)


@dataclass
class EvalReport:
    rows: List[tuple]
    summary: Dict[tuple, float]
    provenance: dict

    def values(self, method: str, metric: str, noise: str = None, snr_db: float = None) -> np.ndarray:
        return np.array([r[5] for r in self.rows
                         if r[3] == method and r[4] == metric and r[6] == "ok"
                         and (noise is None or r[1] == noise)
                         and (snr_db is None or r[2] == snr_db)])

    def failed(self) -> List[tuple]:
        return [r for r in self.rows if r[6] != "ok"]


# --------------------------------------------------------------------------
# batch evaluation
# --------------------------------------------------------------------------

def _noise_seek(seed, u_idx, n_idx, snr_idx, n_noise, n_clean):
    span = n_noise - n_clean
    if span < 0:
        raise ValueError("noise recording shorter than utterance")
    rng = np.random.default_rng([seed, u_idx, n_idx, snr_idx])
    return int(rng.integers(0, span + 1))


def _apply(method, mixture, clean, noise, snr_db, cfg: ExperimentConfig, seed):
    if method == "unp":
        return mixture
    if method == "bam":
        return bam_process(mixture, cfg.bam)[0]
    if method == "ibm":
        return ibm_process(mixture, clean, noise, snr_db, cfg.rc_db)[0]
    if method == "tbm":
        return tbm_process(mixture, clean, cfg.coverage, seed=seed)[0]
    raise ValueError(method)


def reference_score(clean: AudioBuffer, seed: int = 0) -> StoiScore:
    """STOI of ``clean`` in speech-shaped noise at 10 dB, the normalisation reference."""
    ssn = generate_ssn(clean, len(clean), seed)
    ref_mix, _ = mix_at_snr(clean, ssn, MixSpec(REFERENCE_SNR_DB))
    return stoi(clean, ref_mix)


def evaluate(utterances: Sequence[Tuple[str, AudioBuffer]], noises: Sequence[Tuple[str, AudioBuffer]],
             cfg: ExperimentConfig) -> EvalReport:
    """Evaluate in-memory signals; see :func:`run_batch` for the file-based entry."""
    rows = []
    for u_idx, (u_name, clean) in enumerate(utterances):
        ref = None
        for n_idx, (n_name, noise) in enumerate(noises):
            for s_idx, snr in enumerate(cfg.snrs_db):
                snr = float(snr)
                case_seed = int(np.random.SeedSequence([cfg.seed, u_idx, n_idx, s_idx]).generate_state(1)[0])
                try:
                    seek = _noise_seek(cfg.seed, u_idx, n_idx, s_idx, len(noise), len(clean))
                    mixture, scaled = mix_at_snr(clean, noise, MixSpec(snr, seek))
                except Exception as exc:  # recorded per row, run continues
                    for method in cfg.methods:
                        for metric in cfg.metrics:
                            rows.append((u_name, n_name, snr, method, metric, math.nan, f"failed: {exc}"))
                    continue
                for method in cfg.methods:
                    try:
                        out = _apply(method, mixture, clean, scaled, snr, cfg, case_seed)
                    except Exception as exc:
                        log.warning("%s/%s/%s/%s failed: %s", u_name, n_name, snr, method, exc)
                        for metric in cfg.metrics:
                            rows.append((u_name, n_name, snr, method, metric, math.nan, f"failed: {exc}"))
                        continue
                    for metric in cfg.metrics:
                        try:
                            if metric == "stoi":
                                value = stoi(clean, out).value
                            elif metric == "stoi_norm":
                                if ref is None:
                                    ref = reference_score(clean, cfg.seed + u_idx)
                                value = normalize_score(stoi(clean, out), ref).normalized_value
                            else:
                                value = ins_compute(out, cfg.ins_scales, cfg.ins_surrogates, case_seed).ins_max
                            rows.append((u_name, n_name, snr, method, metric, float(value), "ok"))
                        except Exception as exc:
                            rows.append((u_name, n_name, snr, method, metric, math.nan, f"failed: {exc}"))
    rows.sort(key=lambda r: (r[0], r[1], r[2], METHODS.index(r[3]), METRICS.index(r[4])))
    return EvalReport(rows, summarize(rows), _provenance(cfg))


def summarize(rows) -> Dict[tuple, float]:
    groups: Dict[tuple, list] = {}
    for u, n, s, method, metric, value, status in rows:
        if status == "ok":
            groups.setdefault((n, s, method, metric), []).append(value)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def _provenance(cfg: ExperimentConfig) -> dict:
    return {"config_hash": cfg.digest(), "seed": cfg.seed, "tool_version": __version__,
            "schema_version": REPORT_SCHEMA_VERSION}


def _list_wavs(folder) -> List[Path]:
    return sorted(p for p in Path(folder).iterdir() if p.suffix.lower() == ".wav")


def run_batch(config: ExperimentConfig, write: bool = True) -> EvalReport:
    """Evaluate the corpus named in ``config`` and (optionally) write the report."""
    clean_dir = Path(config.clean_dir)
    if not clean_dir.is_dir():
        raise FileNotFoundError(f"clean_dir not found: {clean_dir}")
    files = _list_wavs(clean_dir)
    if config.max_utterances is not None:
        files = files[:config.max_utterances]
    if not files:
        raise ValueError(f"no WAV files in {clean_dir}")
    if not config.noise_files:
        raise ValueError("no noise files configured")
    utterances = [(p.stem, read_wav(p)) for p in files]
    noises = [(name, read_wav(p)) for name, p in sorted(config.noise_files.items())]
    report = evaluate(utterances, noises, config)
    if write:
        write_report(report, config.output_dir, config)
    return report


def write_report(report: EvalReport, output_dir, config: ExperimentConfig = None) -> Tuple[Path, Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "report.csv", out / "summary.json"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in report.rows:
            w.writerow((r[0], r[1], repr(r[2]), r[3], r[4], repr(r[5]), r[6]))
    summary = [{"noise": n, "snr_db": s, "method": m, "metric": k, "mean": v}
               for (n, s, m, k), v in report.summary.items()]
    doc = {"columns": list(REPORT_COLUMNS), "summary": summary, "provenance": report.provenance}
    if config is not None:
        doc["config"] = config.to_dict()
    with open(json_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return csv_path, json_path


def read_report_csv(path) -> List[tuple]:
    with open(path, newline="") as fh:
        return [(r["utterance"], r["noise"], float(r["snr_db"]), r["method"], r["metric"],
                 float(r["value"]), r["status"]) for r in csv.DictReader(fh)]


# --------------------------------------------------------------------------
# timing
# --------------------------------------------------------------------------

def _bench_callables(clean: AudioBuffer, noise: AudioBuffer, ssn: AudioBuffer, cfg: ExperimentConfig,
                     snr_db: float):
    bank = default_bank(clean.sample_rate)

    def bam(c, n, s, m):
        bam_process(m, cfg.bam)

    def ibm(c, n, s, m):
        mask = ibm_compute(tf_energy(gammatone_analyze(c, bank)), tf_energy(gammatone_analyze(n, bank)),
                           snr_db, cfg.rc_db)
        mask_resynthesize(gammatone_analyze(m, bank), mask, bank)

    def tbm(c, n, s, m):
        mask = tbm_compute(tf_energy(gammatone_analyze(c, bank)), tf_energy(gammatone_analyze(s, bank)),
                           cfg.coverage)
        mask_resynthesize(gammatone_analyze(m, bank), mask, bank)

    return {"bam": bam, "ibm": ibm, "tbm": tbm}


def bench_methods(config: ExperimentConfig = None, frame_len: int = 512, repetitions: int = 30,
                  clean: AudioBuffer = None, noise: AudioBuffer = None, n_frames: int = 8,
                  warmup: int = 3) -> dict:
    """Mean wall-clock time per ``frame_len``-sample frame, per method.

    Each repetition processes ``n_frames`` consecutive frames of one mixture
    through the complete method (ideal masks include their gammatone
    analyses and resynthesis), looped as often as needed for the timed
    span to reach ``MIN_SAMPLE_SECONDS``. Times are also reported
    normalised by BAM.
    """
    if repetitions < 30:
        raise ValueError("need at least 30 repetitions")
    cfg = config or ExperimentConfig(methods=["bam", "ibm", "tbm"])
    if clean is None or noise is None:
        from .corpus import babble_noise, synth_utterance
        clean = clean or synth_utterance(cfg.seed)
        noise = noise or babble_noise(cfg.seed + 1)
    snr = 0.0
    mixture, scaled = mix_at_snr(clean, noise, MixSpec(snr))
    ssn = generate_ssn(clean, len(clean), cfg.seed)
    start = max(0, len(clean) // 2 - n_frames * frame_len // 2)
    blocks = []
    for i in range(n_frames):
        sl = slice(start + i * frame_len, start + (i + 1) * frame_len)
        blocks.append(tuple(b.with_samples(b.samples[sl]) for b in (clean, scaled, ssn, mixture)))
    funcs = _bench_callables(clean, scaled, ssn, cfg, snr)
    methods = [m for m in ("bam", "ibm", "tbm") if m in funcs]

    def run(f, number):
        t0 = time.perf_counter()
        for _ in range(number):
            for blk in blocks:
                f(*blk)
        return time.perf_counter() - t0

    per_rep = {m: [] for m in methods}
    gc_was = gc.isenabled()
    gc.disable()
    try:
        # cheap methods are looped so every timed sample spans >= MIN_SAMPLE_SECONDS
        loops = {}
        for m in methods:
            single = min(run(funcs[m], 1) for _ in range(max(1, warmup)))
            loops[m] = max(1, math.ceil(MIN_SAMPLE_SECONDS / max(single, 1e-9)))
        for rep in range(warmup + repetitions):
            for m in methods:
                dt = run(funcs[m], loops[m]) / (loops[m] * len(blocks))
                if rep >= warmup:
                    per_rep[m].append(dt)
    finally:
        if gc_was:
            gc.enable()
    mean = {m: float(np.mean(v)) for m, v in per_rep.items()}
    return {"frame_len": frame_len, "repetitions": repetitions, "n_frames": n_frames,
            "loops": loops, "mean_seconds": mean, "normalized": {m: mean[m] / mean["bam"] for m in methods}}


# --------------------------------------------------------------------------
# desk corpus on disk
# --------------------------------------------------------------------------

def write_desk_corpus(folder, n_utterances: int = 20, seed: int = 0, duration: float = 3.0,
                      noise_duration: float = 10.0, sample_rate: int = 16000) -> dict:
    """Write the synthetic corpus as float32 WAVs and return a config skeleton."""
    from .corpus import babble_noise, factory_noise, synth_corpus

    folder = Path(folder)
    (folder / "clean").mkdir(parents=True, exist_ok=True)
    (folder / "noise").mkdir(parents=True, exist_ok=True)
    for i, u in enumerate(synth_corpus(n_utterances, seed, duration, sample_rate)):
        write_wav(folder / "clean" / f"utt{i:03d}.wav", u, "float32")
    noises = {"babble": babble_noise(seed + 1000, noise_duration, sample_rate),
              "factory": factory_noise(seed + 2000, noise_duration, sample_rate)}
    for name, buf in noises.items():
        write_wav(folder / "noise" / f"{name}.wav", buf, "float32")
    cfg = {"clean_dir": "clean", "noise_files": {k: f"noise/{k}.wav" for k in noises},
           "snrs_db": [-6, -5, -3, 0, 3, 5], "methods": list(METHODS), "metrics": ["stoi"],
           "seed": seed, "output_dir": "results"}
    with open(folder / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=2)
    return cfg
