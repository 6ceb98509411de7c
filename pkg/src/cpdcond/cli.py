"""Command-line entry point: campaigns, tail fits, condition reports, oracles.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 I/O error, 4 insufficient data.  Every command that produces files also
writes a manifest (flags, seed, version, timestamps, output paths) next to
them, atomically, including on failure exits >= 3 when the target location
is still reachable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass

import numpy as np

from cpdcond import __version__
from cpdcond.oracles import ORACLE_NAMES, q_bound_epsilon_sweep, run_suite
from cpdcond.rng import substream
from cpdcond.sampler import (
    CampaignConfig,
    campaign_summary,
    run_campaign,
    write_outcomes_csv,
)
from cpdcond.segre import kruskal_certify
from cpdcond.condition import condition_report
from cpdcond.stats import (
    FIT_C_LOW,
    TooFewTailPoints,
    bf_probability,
    empirical_ccdf,
    fit_report,
    fit_tail,
    truncated_mean,
    write_ccdf_csv,
)
from cpdcond.tensors import CPDecomposition, Shape

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NO_DATA = 4

_COLUMN_FOR_WHICH = {"regular": "kappa", "angular": "kappa_ang"}


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written next to every output artifact."""

    command: str
    config: dict
    master_seed: int | None
    version: str
    started_at: str
    finished_at: str
    outputs: tuple[str, ...]


def _now() -> str:
    import datetime

    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_json_atomic(path, payload) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, allow_nan=False)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_manifest(
    path, command: str, config: dict, master_seed, started_at: str, outputs, *, strict: bool
) -> None:
    manifest = RunManifest(
        command=command,
        config=config,
        master_seed=master_seed,
        version=__version__,
        started_at=started_at,
        finished_at=_now(),
        outputs=tuple(str(p) for p in outputs),
    )
    try:
        _write_json_atomic(path, asdict(manifest))
    except OSError:
        if strict:
            raise
        # best effort on a path that already failed once


def _json_real(x):
    """Strict-JSON stand-in for a possibly infinite float (inf -> "inf")."""
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf"
    return x


def _parse_shape(text: str) -> Shape:
    try:
        dims = tuple(int(part) for part in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"bad shape {text!r}: expected AxBxC with integer modes")
    return Shape(dims)


def _default_workers() -> int:
    raw = os.environ.get("CPDCOND_WORKERS", "")
    try:
        workers = int(raw)
    except ValueError:
        return 1
    return workers if workers >= 1 else 1


def _report_paths(out: str) -> tuple[str, str, str]:
    """Sibling artifact names for a report written to ``out`` (a .json path)."""
    base, _ = os.path.splitext(out)
    return f"{base}.ccdf.csv", f"{base}.png", f"{base}.manifest.json"


# -- subcommands -------------------------------------------------------


def cmd_sample(args) -> int:
    started = _now()
    try:
        shape = _parse_shape(args.shape)
        cfg = CampaignConfig(
            shape=shape,
            r=args.rank,
            target_real_count=args.target_real,
            master_seed=args.seed,
            workers=args.workers,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = args.out or f"{shape}-r{args.rank}-seed{args.seed}"
    config = {
        "shape": str(shape),
        "rank": args.rank,
        "target_real": args.target_real,
        "seed": args.seed,
        "workers": args.workers,
        "out": out_dir,
    }
    csv_path = os.path.join(out_dir, "samples.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    manifest_path = os.path.join(out_dir, "manifest.json")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO

    result = run_campaign(cfg)
    summary = campaign_summary(cfg, result)
    try:
        write_outcomes_csv(csv_path, result.outcomes, shape, args.rank)
        _write_json_atomic(summary_path, summary)
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        _write_manifest(
            manifest_path, "sample", config, args.seed, started,
            (csv_path, summary_path), strict=False,
        )
        return EXIT_IO
    try:
        _write_manifest(
            manifest_path, "sample", config, args.seed, started,
            (csv_path, summary_path), strict=True,
        )
    except OSError as exc:
        print(f"error: writing manifest failed: {exc}", file=sys.stderr)
        return EXIT_IO

    real, cplx, failed = summary["counts"]["real"], summary["counts"]["complex"], summary["counts"]["failed"]
    print(
        f"{summary['total_samples']} samples ({real} real, {cplx} complex, "
        f"{failed} failed), real fraction {summary['real_fraction']:.4f}, "
        f"{summary['wall_time_s']:.1f}s -> {csv_path}"
    )
    return EXIT_OK


def cmd_fit(args) -> int:
    started = _now()
    column = _COLUMN_FOR_WHICH[args.which]
    ccdf_path, fig_path, manifest_path = _report_paths(args.out)
    config = {"in": args.infile, "which": args.which, "out": args.out}
    outputs = (args.out, ccdf_path, fig_path)

    def fail_manifest() -> None:
        _write_manifest(
            manifest_path, "fit", config, None, started, outputs, strict=False
        )

    try:
        with open(args.infile, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        print(f"error: cannot read {args.infile}: {exc}", file=sys.stderr)
        fail_manifest()
        return EXIT_IO
    if not rows:
        print(f"error: {args.infile} holds no samples", file=sys.stderr)
        fail_manifest()
        return EXIT_NO_DATA
    try:
        shape = rows[0]["shape"]
        r = int(rows[0]["r"])
        values = np.array(
            [float(row[column]) for row in rows if row[column]], dtype=float
        )
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: malformed samples CSV: {exc!r}", file=sys.stderr)
        return EXIT_USAGE

    finite = values[np.isfinite(values)]
    if finite.size == 0:
        print("error: no finite condition numbers to fit", file=sys.stderr)
        fail_manifest()
        return EXIT_NO_DATA
    try:
        report = fit_report(shape, r, args.which, values)
    except TooFewTailPoints as exc:
        print(f"error: {exc} ({exc.points} points)", file=sys.stderr)
        fail_manifest()
        return EXIT_NO_DATA

    ccdf = empirical_ccdf(finite)
    fit = fit_tail(ccdf)
    kappa0 = ccdf.quantile(FIT_C_LOW)
    mean = truncated_mean(finite, fit, kappa0)
    report["n_finite"] = int(finite.size)
    report["kappa0"] = kappa0
    if math.isinf(mean):
        report["tail_truncated_mean"] = None
        report["note"] = "tail-truncated mean: infinite"
    else:
        report["tail_truncated_mean"] = mean

    from cpdcond.plots import render_ccdf_figure  # deferred: pulls in matplotlib

    try:
        _write_json_atomic(args.out, report)
        write_ccdf_csv(ccdf_path, ccdf)
        render_ccdf_figure(
            fig_path, ccdf, fit, f"{shape} r={r} {args.which} condition number"
        )
        _write_manifest(
            manifest_path, "fit", config, None, started, outputs, strict=True
        )
    except OSError as exc:
        print(f"error: writing report failed: {exc}", file=sys.stderr)
        fail_manifest()
        return EXIT_IO

    line = (
        f"{args.which} tail: b = {report['b']:.4f}, a = {report['a']:.4f}, "
        f"R^2 = {report['r2']:.4f} ({report['points_used']} window points, "
        f"{report['excluded_inf']} infinite excluded) -> {args.out}"
    )
    print(line)
    if "note" in report:
        print(report["note"])
    return EXIT_OK


def cmd_condition(args) -> int:
    try:
        if args.cpd is not None:
            with open(args.cpd, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = args.factors
        cpd = CPDecomposition.from_json(text)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: bad decomposition input: {exc}", file=sys.stderr)
        return EXIT_USAGE

    rep = condition_report(cpd)
    payload = {
        "shape": str(cpd.shape),
        "r": cpd.rank,
        "kappa": _json_real(rep.kappa),
        "kappa_angular": _json_real(rep.kappa_angular),
        "sigma_min_regular": _json_real(rep.sigma_min_regular),
        "sigma_min_angular": _json_real(rep.sigma_min_angular),
        "reason": rep.reason,
    }
    if len(cpd.shape.dims) == 3:
        certified, kranks = kruskal_certify(cpd)
        payload["kruskal"] = {"certified": certified, "kranks": list(kranks)}
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_bf_table(args) -> int:
    if args.n_max < 2:
        print("error: --n-max must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    observed: dict[int, float] = {}
    for item in args.observed or ():
        n_text, sep, frac_text = item.partition(":")
        try:
            if not sep:
                raise ValueError(item)
            observed[int(n_text)] = float(frac_text)
        except ValueError:
            print(f"error: --observed expects N:FRACTION, got {item!r}", file=sys.stderr)
            return EXIT_USAGE

    header = f"{'n':>3s}  {'p_n':<16s}"
    if observed:
        header += f"  {'observed':<10s}  {'diff':<10s}"
    print(header)
    for n in range(2, args.n_max + 1):
        line = f"{n:>3d}  {bf_probability(n):.12f}"
        if observed:
            if n in observed:
                diff = observed[n] - bf_probability(n)
                line += f"  {observed[n]:<10.6f}  {diff:+.2e}"
            else:
                line += f"  {'-':<10s}  {'-':<10s}"
        print(line)
    return EXIT_OK


def cmd_verify(args) -> int:
    started = _now()
    try:
        reports = run_suite(trials=args.trials, seed=args.seed, only=args.only or None)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    for report in reports:
        print(report.line())
    if any(r.name == "check_q_lower_bound" for r in reports):
        sweep = q_bound_epsilon_sweep(
            args.trials, substream(args.seed, len(ORACLE_NAMES))
        )
        held = sorted(eps for eps, ok in sweep.items() if ok)
        if held:
            print(
                f"note: q lower bound held at every tested epsilon down to {held[0]} "
                f"(grid {sorted(sweep)})"
            )
        else:
            print("note: q lower bound held at none of the tested epsilons")

    if args.json_out is not None:
        payload = []
        for report in reports:
            entry = asdict(report)
            entry["max_violation"] = _json_real(entry["max_violation"])
            payload.append(entry)
        config = {"trials": args.trials, "seed": args.seed, "only": args.only}
        manifest_path = _report_paths(args.json_out)[2]
        try:
            _write_json_atomic(args.json_out, payload)
            _write_manifest(
                manifest_path, "verify", config, args.seed, started,
                (args.json_out,), strict=True,
            )
        except OSError as exc:
            print(f"error: writing report failed: {exc}", file=sys.stderr)
            return EXIT_IO

    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAIL


# -- parser ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpdcond",
        description="Condition numbers of CP tensor decompositions: sampling "
        "campaigns, tail fits, point evaluations, and numerical oracles.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "sample", help="sample Gaussian tensors in a perfect space until a "
        "target count of real decompositions is reached",
    )
    p.add_argument("--shape", required=True, help="mode sizes, e.g. 2x2x2")
    p.add_argument("--rank", required=True, type=int)
    p.add_argument("--target-real", required=True, type=int, dest="target_real")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--workers", type=int, default=_default_workers(),
        help="worker processes (default: $CPDCOND_WORKERS or 1); results do "
        "not depend on this",
    )
    p.add_argument("--out", default=None, help="output directory (default: <shape>-r<rank>-seed<seed>)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a power-law tail to a campaign CSV")
    p.add_argument("--in", dest="infile", required=True, metavar="SAMPLES_CSV")
    p.add_argument("--which", required=True, choices=sorted(_COLUMN_FOR_WHICH))
    p.add_argument("--out", required=True, metavar="REPORT_JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser(
        "condition", help="condition numbers of one explicit decomposition"
    )
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--cpd", help="JSON file with dims and rank-one terms")
    group.add_argument("--factors", help="the same JSON given inline")
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser(
        "bf-table", help="exact real-rank probabilities for n x n x 2"
    )
    p.add_argument("--n-max", dest="n_max", type=int, required=True)
    p.add_argument(
        "--observed", action="append", metavar="N:FRACTION",
        help="empirical fraction to print next to a row (repeatable)",
    )
    p.set_defaults(func=cmd_bf_table)

    p = sub.add_parser("verify", help="run the numerical oracle suite")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--only", action="append", metavar="ORACLE",
        help=f"restrict to named oracles; known: {', '.join(ORACLE_NAMES)}",
    )
    p.add_argument("--json", dest="json_out", default=None, metavar="REPORT_JSON")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
