"""Command-line front end.

Every subcommand accepts ``--seed``, ``--out`` and ``--config``. For the
single-file commands the config is a JSON object whose section named after
the subcommand (e.g. ``{"bam": {"alpha": 0.3}}``) supplies flag defaults;
explicit flags win. ``eval-batch`` and ``bench`` read the whole file as an
experiment config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .audio import AudioError, MixSpec, mix_at_snr, read_wav, write_wav
from .bam import BamParams, bam_process, write_date_csv, write_diagnostics
from .metrics import DEFAULT_SCALES, ins_compute, metric_json, stoi, stoi_normalized, write_ins_csv
from .tfmasks import ibm_process, tbm_process, write_mask

log = logging.getLogger("blindmask")


def _common(p: argparse.ArgumentParser, out_required: bool = False):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", required=out_required, help="output path")
    p.add_argument("--config", help="JSON config file")


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blindmask", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("mix", help="mix clean speech and noise at a target SNR")
    _common(p)
    p.add_argument("--clean", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--snr", type=float, required=True, help="target SNR in dB")
    p.add_argument("--seek", type=int, default=0, help="noise start offset in samples")
    p.add_argument("--level-basis", choices=("rms", "active-rms"), default="rms")
    p.add_argument("--noise-out", help="also write the scaled noise here")

    p = sub.add_parser("bam", help="enhance a noisy file with the blind mask")
    _common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--alpha", type=float, default=0.35)
    p.add_argument("--beta", type=float, default=0.65)
    p.add_argument("--frame-ms", type=float, default=32.0)
    p.add_argument("--threshold", type=float, default=3.0, help="DATE detection multiplier")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--diagnostics", help="diagnostics CSV (default: <out>.csv)")
    p.add_argument("--date-csv", help="per-frame noise estimates CSV")

    for name, text in (("ibm", "ideal binary mask"), ("tbm", "target binary mask")):
        p = sub.add_parser(name, help=f"apply the {text}")
        _common(p)
        p.add_argument("--in", dest="input", required=True, help="mixture WAV")
        p.add_argument("--clean", required=True)
        p.add_argument("--mask-out", help="write the mask as text")
        if name == "ibm":
            p.add_argument("--noise", required=True, help="scaled noise WAV (as mixed)")
            p.add_argument("--snr", type=float, required=True, help="mixture SNR in dB")
            p.add_argument("--rc", type=float, default=-5.0, help="LC relative to the SNR, dB")
        else:
            p.add_argument("--coverage", type=float, default=0.99)

    p = sub.add_parser("stoi", help="score a processed file against the clean reference")
    _common(p)
    p.add_argument("--clean", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--normalized", action="store_true",
                   help="divide by the score of clean speech in speech-shaped noise at 10 dB")

    p = sub.add_parser("ins", help="index of non-stationarity profile")
    _common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--surrogates", type=int, default=50)
    p.add_argument("--scales", type=_float_list, default=list(DEFAULT_SCALES))
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("eval-batch", help="run the evaluation grid from a config")
    _common(p)

    p = sub.add_parser("bench", help="per-frame timing of bam, ibm and tbm")
    _common(p)
    p.add_argument("--repetitions", type=int, default=30)
    p.add_argument("--frame-len", type=int, default=512)

    p = sub.add_parser("make-corpus", help="write the synthetic desk corpus and a config")
    _common(p, out_required=True)
    p.add_argument("--n-utterances", type=int, default=20)
    return parser


def _apply_config_defaults(parser, argv, args):
    if not args.config or args.command in ("eval-batch", "bench"):
        return args
    with open(args.config) as fh:
        doc = json.load(fh)
    section = dict(doc.get(args.command, {}))
    if "seed" in doc:
        section.setdefault("seed", doc["seed"])
    if not section:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in section.items()})
    return parser.parse_args(argv)


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_mix(a):
    if not a.out:
        raise ValueError("--out is required")
    mixture, scaled = mix_at_snr(read_wav(a.clean), read_wav(a.noise), MixSpec(a.snr, a.seek, a.level_basis))
    clipped = write_wav(a.out, mixture)
    if a.noise_out:
        write_wav(a.noise_out, scaled, "float32")
    if clipped:
        log.warning("%d samples clipped", clipped)


def _cmd_bam(a):
    if not a.out:
        raise ValueError("--out is required")
    params = BamParams(a.alpha, a.beta, a.frame_ms, not a.no_normalize, threshold=a.threshold)
    out, decisions = bam_process(read_wav(a.input), params)
    write_wav(a.out, out)
    write_diagnostics(a.diagnostics or str(Path(a.out).with_suffix(".csv")), decisions)
    if a.date_csv:
        write_date_csv(a.date_csv, decisions)


def _cmd_ibm(a):
    if not a.out:
        raise ValueError("--out is required")
    out, mask = ibm_process(read_wav(a.input), read_wav(a.clean), read_wav(a.noise), a.snr, a.rc)
    write_wav(a.out, out)
    if a.mask_out:
        write_mask(a.mask_out, mask)


def _cmd_tbm(a):
    if not a.out:
        raise ValueError("--out is required")
    out, mask = tbm_process(read_wav(a.input), read_wav(a.clean), a.coverage, seed=a.seed)
    write_wav(a.out, out)
    if a.mask_out:
        write_mask(a.mask_out, mask)


def _cmd_stoi(a):
    clean, proc = read_wav(a.clean), read_wav(a.input)
    if a.normalized:
        from .experiment import reference_score

        score = stoi_normalized(clean, proc, reference_score(clean, a.seed))
        _emit(metric_json("stoi_norm", score.normalized_value, {"raw": score.value}, a.seed), a.out)
    else:
        _emit(metric_json("stoi", stoi(clean, proc).value, {}, a.seed), a.out)


def _cmd_ins(a):
    prof = ins_compute(read_wav(a.input), a.scales, a.surrogates, a.seed, a.workers)
    if a.out:
        write_ins_csv(a.out, prof)
    params = {"scales": list(prof.scales), "n_surrogates": prof.n_surrogates, **prof.meta}
    print(metric_json("ins_max", prof.ins_max, params, a.seed))


def _experiment_config(a):
    from .experiment import load_config

    if not a.config:
        raise ValueError("--config is required")
    cfg = load_config(a.config)
    if a.seed:
        cfg.seed = a.seed
    if a.out:
        cfg.output_dir = a.out
    return cfg


def _cmd_eval_batch(a):
    from .experiment import run_batch

    cfg = _experiment_config(a)
    report = run_batch(cfg)
    failed = report.failed()
    log.info("%d rows, %d failed, written to %s", len(report.rows), len(failed), cfg.output_dir)
    if failed:
        print(f"warning: {len(failed)} rows failed", file=sys.stderr)


def _cmd_bench(a):
    from .experiment import ExperimentConfig, bench_methods, load_config

    cfg = load_config(a.config) if a.config else ExperimentConfig(seed=a.seed)
    res = bench_methods(cfg, a.frame_len, a.repetitions)
    _emit(json.dumps(res, indent=2, sort_keys=True), a.out)


def _cmd_make_corpus(a):
    from .experiment import write_desk_corpus

    write_desk_corpus(a.out, a.n_utterances, a.seed)


_COMMANDS = {"mix": _cmd_mix, "bam": _cmd_bam, "ibm": _cmd_ibm, "tbm": _cmd_tbm, "stoi": _cmd_stoi,
             "ins": _cmd_ins, "eval-batch": _cmd_eval_batch, "bench": _cmd_bench,
             "make-corpus": _cmd_make_corpus}


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: usage errors exit 2, --help/--version exit 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args = _apply_config_defaults(parser, argv, args)
        _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (AudioError, OSError, ValueError, KeyError) as exc:
        print(f"blindmask {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
