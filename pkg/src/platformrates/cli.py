"""Batch command line: error-rate tables, LLN runs, the FDR scenario, FCM tooling.

Exit codes: 0 success, 2 argument/validation errors (argparse usage text on
stderr), 3 store corruption (diagnostics on stderr, partial results still
written).  Stochastic subcommands require --seed; every subcommand accepts it.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_STORE = 3


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _add_common(sub: argparse.ArgumentParser, *, fmt: bool = True) -> None:
    sub.add_argument("--seed", type=int, default=None,
                     help="RNG seed (required for stochastic subcommands)")
    sub.add_argument("--out", default=None, metavar="PATH",
                     help="output path (default: stdout)")
    if fmt:
        sub.add_argument("--format", choices=("csv", "json"), default=None,
                         help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platformrates",
        description="Error-rate calculus and Monte Carlo simulation for platform trials.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    var = sub.add_parser("var-table", help="StdDev(V*) table over family sizes and correlations")
    var.add_argument("--n", type=int, nargs="+", default=[5, 10, 20, 40],
                     help="family sizes (default: 5 10 20 40)")
    var.add_argument("--rho", type=float, nargs="+", default=[0.0, 0.3, 0.5],
                     help="common correlations (default: 0 0.3 0.5)")
    var.add_argument("--alpha", type=float, default=0.05)
    _add_common(var)
    var.set_defaults(func=cmd_var_table)

    simp = sub.add_parser("simulate", help="running-FAR trajectory over many platforms")
    simp.add_argument("--platforms", type=int, default=10000)
    simp.add_argument("--k", type=int, default=10, help="true-null studies per platform")
    simp.add_argument("--alpha", type=float, default=0.05)
    simp.add_argument("--arm-size", type=int, default=100)
    simp.add_argument("--control-size", type=int, default=None,
                      help="control arm size (default: --arm-size)")
    simp.add_argument("--statements", type=int, default=1)
    simp.add_argument("--checkpoint-every", type=int, default=None, metavar="PLATFORMS")
    simp.add_argument("--tally-out", default=None, metavar="PATH",
                      help="path for the final tally JSON (default: stdout)")
    _add_common(simp, fmt=False)
    simp.set_defaults(func=cmd_simulate)

    fdr = sub.add_parser("fdr-scenario", help="sure-reject false null + true null at a chosen level")
    fdr.add_argument("--alpha", type=float, required=True,
                     help="level at which the true null is tested")
    fdr.add_argument("--reps", type=int, default=1000000)
    _add_common(fdr)
    fdr.set_defaults(func=cmd_fdr_scenario)

    fcm = sub.add_parser("fcm", help="family concurrency matrix tooling")
    fcm_sub = fcm.add_subparsers(dest="verb", required=True)

    fb = fcm_sub.add_parser("build", help="FCM of one rejection vector")
    fb.add_argument("rejections", nargs="*", help="rejection vector entries, each 0 or 1")
    fb.add_argument("--from-csv", default=None, metavar="PATH",
                    help="read the rejection vector from a CSV file instead")
    fb.add_argument("--labels", nargs="+", default=None)
    fb.add_argument("--store", default=None, metavar="PATH",
                    help="also append this trial to a JSONL store")
    fb.add_argument("--platform-id", default=None, help="platform id for --store")
    fb.add_argument("--timestamp", default=None,
                    help="ISO-8601 timestamp for --store (default: now, UTC)")
    _add_common(fb, fmt=False)
    fb.set_defaults(func=cmd_fcm_build)

    fc = fcm_sub.add_parser("combine", help="combined FCM across all stored trials")
    fc.add_argument("--store", required=True, metavar="PATH")
    _add_common(fc, fmt=False)
    fc.set_defaults(func=cmd_fcm_combine)

    fm = fcm_sub.add_parser("monitor", help="block densities of the combined FCM")
    fm.add_argument("--store", required=True, metavar="PATH")
    fm.add_argument("--alpha", type=float, default=0.05)
    _add_common(fm, fmt=False)
    fm.set_defaults(func=cmd_fcm_monitor)

    bvn = sub.add_parser("bvn", help="bivariate normal upper-orthant probability")
    bvn.add_argument("--h", type=float, required=True)
    bvn.add_argument("--k", type=float, required=True)
    bvn.add_argument("--rho", type=float, required=True)
    _add_common(bvn, fmt=False)
    bvn.set_defaults(func=cmd_bvn)

    return parser


def _require_seed(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    if args.seed is None:
        parser.error(f"--seed is required for '{args.command}'")
    return args.seed


def cmd_var_table(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from .variance import stddev_table, table_to_csv

    try:
        cells = stddev_table(args.n, args.rho, args.alpha)
    except ValueError as exc:
        parser.error(str(exc))
    if (args.format or "csv") == "csv":
        _write(table_to_csv(cells), args.out)
    else:
        rows = [
            {
                "n_true": c.report.n_true,
                "erpf": c.report.erpf,
                "rho": c.rho,
                "stddev": c.report.stddev_V,
            }
            for c in cells
        ]
        _write(json.dumps(rows, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from .sim import SequenceConfig, equal_arm_config, lln_to_csv, simulate_sequence

    seed = _require_seed(parser, args)
    try:
        platform = equal_arm_config(
            k=args.k,
            arm_size=args.arm_size,
            control_size=args.control_size,
            alpha=args.alpha,
            statements_per_study=args.statements,
        )
        config = SequenceConfig(
            num_platforms=args.platforms,
            platform_config=platform,
            seed=seed,
            checkpoint_every=args.checkpoint_every,
        )
    except ValueError as exc:
        parser.error(str(exc))
    report, tally = simulate_sequence(config)
    _write(lln_to_csv(report), args.out)
    _write(tally.to_json() + "\n", args.tally_out)
    return EXIT_OK


def cmd_fdr_scenario(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from .sim import fdr_scenario

    seed = _require_seed(parser, args)
    try:
        result = fdr_scenario(args.alpha, args.reps, seed)
    except ValueError as exc:
        parser.error(str(exc))
    if (args.format or "json") == "json":
        payload = {
            "alpha_true_null": args.alpha,
            "reps": args.reps,
            "empirical_fdr": result.empirical_fdr,
            "empirical_far": result.empirical_far,
        }
        _write(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [
            "alpha_true_null,reps,empirical_fdr,empirical_far",
            f"{args.alpha:.4f},{args.reps},{result.empirical_fdr:.4f},{result.empirical_far:.4f}",
        ]
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _read_vector_csv(path: str) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    tokens: list[str] = []
    for line in text.splitlines():
        tokens.extend(tok.strip() for tok in line.split(",") if tok.strip())
    return tokens


def cmd_fcm_build(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from .fcm import TrialRecord, append_record, build_fcm

    tokens = list(args.rejections)
    if args.from_csv is not None:
        if tokens:
            parser.error("give the rejection vector either as arguments or via --from-csv, not both")
        try:
            tokens = _read_vector_csv(args.from_csv)
        except OSError as exc:
            parser.error(f"cannot read --from-csv file: {exc}")
    if not tokens:
        parser.error("no rejection vector given")
    flags: list[int] = []
    for tok in tokens:
        if tok not in ("0", "1"):
            parser.error(f"rejection entries must be 0 or 1, got {tok!r}")
        flags.append(int(tok))
    try:
        matrix = build_fcm(flags, args.labels)
    except ValueError as exc:
        parser.error(str(exc))
    if args.store is not None:
        if args.platform_id is None:
            parser.error("--store requires --platform-id")
        timestamp = args.timestamp or datetime.now(timezone.utc).isoformat()
        try:
            record = TrialRecord(
                platform_id=args.platform_id,
                timestamp=timestamp,
                rejections=tuple(
                    (label, bool(flag)) for label, flag in zip(matrix.labels, flags)
                ),
            )
        except ValueError as exc:
            parser.error(str(exc))
        append_record(args.store, record)
    _write(matrix.to_csv(), args.out)
    return EXIT_OK


def _load_store(parser: argparse.ArgumentParser, path: str):
    from .fcm import load_records

    try:
        records, diagnostics = load_records(path)
    except OSError as exc:
        parser.error(f"cannot read store: {exc}")
    for diag in diagnostics:
        print(f"store {path}: {diag}", file=sys.stderr)
    return records, diagnostics


def cmd_fcm_combine(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from .fcm import combine_fcm

    records, diagnostics = _load_store(parser, args.store)
    try:
        combined = combine_fcm(records)
    except ValueError as exc:
        parser.error(str(exc))
    _write(combined.to_csv(), args.out)
    return EXIT_STORE if diagnostics else EXIT_OK


def cmd_fcm_monitor(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from .fcm import block_report, combine_fcm

    records, diagnostics = _load_store(parser, args.store)
    try:
        combined = combine_fcm(records)
        report = block_report(combined, [len(r.rejections) for r in records], args.alpha)
    except ValueError as exc:
        parser.error(str(exc))
    payload = {"platforms": [r.platform_id for r in records],
               "block_sizes": [len(r.rejections) for r in records]}
    payload.update(report.as_dict())
    _write(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_STORE if diagnostics else EXIT_OK


def cmd_bvn(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from .numerics import bvn_upper_orthant

    try:
        p = bvn_upper_orthant(args.h, args.k, args.rho)
    except ValueError as exc:
        parser.error(str(exc))
    _write(f"{p:.8g}\n", args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(parser, args)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return EXIT_OK
        return code if isinstance(code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
