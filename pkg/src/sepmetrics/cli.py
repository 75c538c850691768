"""Command-line front end.

Subcommands:
  eval        metrics for one reference/estimate pair (CSV to stdout or file)
  eval-set    metrics for matched file sets, optionally permutation-matched
  experiment  run a JSON-described experiment and write its CSV artifacts
  compare     flag estimates whose legacy SDR overstates quality vs SI-SDR

Exit codes: 0 success, 2 input/format problems, 3 metric precondition
violations, 1 anything unexpected. ``SEPMETRICS_THREADS`` caps eval-set
parallelism.
"""

from __future__ import annotations

import argparse
import glob
import json
import math
import os
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor

from . import legacy, metrics
from .audio import read_wav, rows_to_csv
from .errors import (
    CountMismatchError,
    DegenerateSourcesError,
    EmptySignalError,
    FormatError,
    IoError,
    LengthMismatchError,
    SepMetricsError,
    SignalTooShortError,
    SpecValidationError,
    ZeroEstimateError,
    ZeroReferenceError,
    ZeroTargetError,
)
from .experiments import ExperimentSpec, run_to_directory

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3

_INPUT_ERRORS = (IoError, FormatError, EmptySignalError, SpecValidationError)
_PRECONDITION_ERRORS = (
    LengthMismatchError,
    ZeroReferenceError,
    ZeroEstimateError,
    ZeroTargetError,
    DegenerateSourcesError,
    CountMismatchError,
    SignalTooShortError,
)

GAP_THRESHOLD_DB = 5.0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepmetrics",
        description="Scale-aware separation metrics and legacy-SDR comparisons.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate one reference/estimate pair")
    p_eval.add_argument("--ref", required=True, help="reference WAV")
    p_eval.add_argument("--est", required=True, help="estimate WAV")
    p_eval.add_argument("--interf", action="append", default=[],
                        help="interferer WAV (repeatable; enables SIR/SAR)")
    p_eval.add_argument("--zero-mean", action="store_true",
                        help="subtract each signal's mean first")
    p_eval.add_argument("--truncate", action="store_true",
                        help="truncate unequal lengths to the shortest signal")
    p_eval.add_argument("--legacy-taps", type=int, default=None, metavar="N",
                        help="also report FIR-projection SDR/SIR/SAR with N taps")
    p_eval.add_argument("--channel", type=int, default=None,
                        help="channel to read from multichannel files")
    p_eval.add_argument("--out", default=None, help="CSV output path (default stdout)")

    p_set = sub.add_parser("eval-set", help="evaluate matched sets of files")
    p_set.add_argument("--refs", required=True, help="directory or glob of reference WAVs")
    p_set.add_argument("--ests", required=True, help="directory or glob of estimate WAVs")
    p_set.add_argument("--permute", action="store_true",
                       help="search all assignments for the best metric mean")
    p_set.add_argument("--metric", default="si-sdr",
                       choices=["si-sdr", "snr", "sd-sdr"],
                       help="metric used for matching and summaries")
    p_set.add_argument("--zero-mean", action="store_true")
    p_set.add_argument("--truncate", action="store_true")
    p_set.add_argument("--channel", type=int, default=None)
    p_set.add_argument("--out", default=None, help="CSV output path (default stdout)")

    p_exp = sub.add_parser("experiment", help="run a JSON-described experiment")
    p_exp.add_argument("--spec", required=True, help="experiment JSON file")
    p_exp.add_argument("--out-dir", required=True, help="directory for CSV outputs")

    p_cmp = sub.add_parser("compare", help="flag legacy-SDR/SI-SDR gaps")
    p_cmp.add_argument("--ref", required=True, help="reference WAV")
    p_cmp.add_argument("--est", required=True, action="append",
                       help="estimate WAV (repeatable)")
    p_cmp.add_argument("--legacy-taps", type=int, default=512, metavar="N")
    p_cmp.add_argument("--threshold", type=float, default=GAP_THRESHOLD_DB,
                       help="gap (dB) beyond which an estimate is flagged")
    p_cmp.add_argument("--channel", type=int, default=None)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _legacy_columns(ref, est, interferers, taps: int) -> dict[str, float]:
    decomp = legacy.fir_project(est, ref, interferers,
                                legacy.FirProjectionConfig(taps=taps))
    return {
        "legacy_sdr_db": legacy.legacy_sdr(decomp),
        "legacy_sir_db": legacy.legacy_sir(decomp),
        "legacy_sar_db": legacy.legacy_sar(decomp),
    }


def _cmd_eval(args) -> int:
    ref = read_wav(args.ref, args.channel)
    est = read_wav(args.est, args.channel)
    interferers = [read_wav(p, args.channel) for p in args.interf]
    report = metrics.evaluate(ref, est, interferers,
                              zero_mean=args.zero_mean, truncate=args.truncate)
    row = report.as_dict()
    if args.legacy_taps is not None:
        sigs = [s.samples for s in (ref, est, *interferers)]
        if args.truncate:
            n = min(s.size for s in sigs)
            sigs = [s[:n] for s in sigs]
        if args.zero_mean:
            sigs = [s - s.mean() for s in sigs]
        row.update(_legacy_columns(sigs[0], sigs[1], sigs[2:], args.legacy_taps))
    _emit(rows_to_csv([row]), args.out)
    return EXIT_OK


def _expand(pattern: str) -> list[str]:
    if os.path.isdir(pattern):
        names = [os.path.join(pattern, n) for n in os.listdir(pattern)
                 if n.lower().endswith(".wav")]
    elif glob.has_magic(pattern):
        names = glob.glob(pattern)
    else:
        names = [pattern]
    return sorted(names)


def _thread_count() -> int:
    raw = os.environ.get("SEPMETRICS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _finite_summary(rows: list[dict], columns: list[str], reducer, label: str) -> dict:
    summary: dict = {"row": label, "index": "", "ref": "", "est": "", "est_index": ""}
    for col in columns:
        values = [r[col] for r in rows if math.isfinite(r[col])]
        summary[col] = reducer(values) if values else math.nan
    return summary


def _cmd_eval_set(args) -> int:
    ref_paths = _expand(args.refs)
    est_paths = _expand(args.ests)
    if len(ref_paths) != len(est_paths):
        raise CountMismatchError(
            f"{len(ref_paths)} reference files vs {len(est_paths)} estimate files"
        )
    if not ref_paths:
        raise CountMismatchError("no input files matched")
    refs = [read_wav(p, args.channel) for p in ref_paths]
    ests = [read_wav(p, args.channel) for p in est_paths]
    if args.zero_mean or args.truncate:
        n = min(len(s) for s in refs + ests) if args.truncate else None
        def prep(sig):
            samples = sig.samples[:n] if n is not None else sig.samples
            return samples - samples.mean() if args.zero_mean else samples
        refs = [prep(s) for s in refs]
        ests = [prep(s) for s in ests]

    if args.permute:
        assignment, reports = metrics.evaluate_permuted(refs, ests, args.metric)
    else:
        assignment = tuple(range(len(refs)))
        pairs = list(zip(refs, ests))
        workers = _thread_count()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(lambda p: metrics.evaluate(*p), pairs))
        else:
            reports = [metrics.evaluate(r, e) for r, e in pairs]

    metric_cols = ["snr_db", "si_sdr_db", "sd_sdr_db", "min_snr_sdsdr_db"]
    rows = []
    for j, report in enumerate(reports):
        row = {"row": "pair", "index": j, "ref": ref_paths[j],
               "est": est_paths[assignment[j]], "est_index": assignment[j]}
        row.update(report.as_dict())
        rows.append(row)
    out_rows = rows + [
        _finite_summary(rows, metric_cols, statistics.fmean, "mean"),
        _finite_summary(rows, metric_cols, statistics.median, "median"),
    ]
    columns = ["row", "index", "ref", "est", "est_index"] + metric_cols
    _emit(rows_to_csv(out_rows, columns), args.out)
    print("permutation: " + ",".join(str(i) for i in assignment), file=sys.stderr)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {args.spec}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecValidationError("$", f"not valid JSON: {exc}") from exc
    spec = ExperimentSpec.from_json_dict(data)
    summary = run_to_directory(spec, args.out_dir)
    parts = [f"kind={spec.kind}"]
    parts += [f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
              for k, v in summary.items()]
    print(" ".join(parts))
    return EXIT_OK


def gap_db(legacy_sdr_db: float, si_sdr_db: float) -> float:
    """Legacy-SDR overstatement. Both infinite counts as no gap."""
    if math.isinf(legacy_sdr_db) and math.isinf(si_sdr_db) and legacy_sdr_db > 0 and si_sdr_db > 0:
        return 0.0
    return legacy_sdr_db - si_sdr_db


def _cmd_compare(args) -> int:
    ref = read_wav(args.ref, args.channel)
    header = f"{'estimate':<40} {'snr_db':>10} {'si_sdr_db':>10} {'sd_sdr_db':>10} {'legacy_db':>10} {'gap_db':>10}  flag"
    lines = [header]
    for path in args.est:
        est = read_wav(path, args.channel)
        report = metrics.evaluate(ref, est)
        decomp = legacy.fir_project(est, ref,
                                    cfg=legacy.FirProjectionConfig(args.legacy_taps))
        lg = legacy.legacy_sdr(decomp)
        gap = gap_db(lg, report.si_sdr_db)
        flag = "WARN" if gap > args.threshold else "ok"
        name = os.path.basename(path)[:40]
        lines.append(
            f"{name:<40} {report.snr_db:>10.3f} {report.si_sdr_db:>10.3f} "
            f"{report.sd_sdr_db:>10.3f} {lg:>10.3f} {gap:>10.3f}  {flag}"
        )
    print("\n".join(lines))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "eval": _cmd_eval,
        "eval-set": _cmd_eval_set,
        "experiment": _cmd_experiment,
        "compare": _cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _PRECONDITION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SepMetricsError as exc:  # anything package-specific but unclassified
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
