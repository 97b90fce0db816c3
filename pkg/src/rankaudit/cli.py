"""Command line entry point: ``rankaudit {audit,simulate,power,rationalize,calibrate}``.

Exit status is 0 whenever a command completes, whether or not a test
rejects (an audit with no testable moments still writes its report and
prints the diagnostic); 2 signals a usage or data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from .audit import AuditConfig, audit
from .calibration import binned_calibration, calibration_svg, read_scored_rows, write_calibration_csv
from .io import IngestError, write_csv, write_jsonl
from .rationalize import construct_information_structure, read_distribution
from .simulate import AdditiveNormal, Bernoulli, NormalQuality, SimConfig, Uniform01, run_size_power, simulate_dataset

log = logging.getLogger("rankaudit")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _quality(text: str):
    """``uniform`` or ``normal:MEAN,SD``."""
    if text == "uniform":
        return Uniform01()
    if text.startswith("normal:"):
        mean, sd = _floats(text[len("normal:"):])
        return NormalQuality(mean, sd)
    raise argparse.ArgumentTypeError(f"bad quality law {text!r}")


def _noise(text: str):
    """``bernoulli`` or ``normal:SD``."""
    if text == "bernoulli":
        return Bernoulli()
    if text.startswith("normal:"):
        return AdditiveNormal(float(text[len("normal:"):]))
    raise argparse.ArgumentTypeError(f"bad outcome noise {text!r}")


def _add_sim_args(p: argparse.ArgumentParser, multi_tau: bool = False) -> None:
    p.add_argument("--j", type=int, default=11, help="candidates per query")
    p.add_argument("--q", type=int, default=1000, help="number of queries")
    p.add_argument("--p-group", type=float, default=0.5, help="probability a candidate is in group 1")
    if multi_tau:
        p.add_argument("--tau", type=_floats, default=[0.0], help="comma-separated penalty grid")
    else:
        p.add_argument("--tau", type=float, default=0.0, help="penalty against group 1")
    p.add_argument("--gamma", type=float, default=0.0, help="position effect per rank")
    p.add_argument("--quality", type=_quality, default=Uniform01(), help="uniform | normal:MEAN,SD")
    p.add_argument("--noise", type=_noise, default=Bernoulli(), help="bernoulli | normal:SD")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankaudit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", help="test a ranked-list log for bias")
    a.add_argument("--input", default="-", help="data file, '-' for stdin")
    a.add_argument("--format", choices=["jsonl", "csv"], default=None)
    a.add_argument("--protected", type=_names, default=(), help="comma-separated protected group labels")
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--gamma", type=float, default=0.0, help="known position effect")
    a.add_argument("--normalize", action="store_true", help="NDCG-normalize outcomes per query")
    a.add_argument("--conditioning", choices=["pair", "full"], default="pair")
    a.add_argument("--min-n", type=int, default=30)
    a.add_argument("--joint", choices=["lf", "bonferroni"], default="lf")
    a.add_argument("--mc-reps", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--stratify-by", type=_names, default=(), help="comma-separated feature names")
    a.add_argument("--out", default="audit_out", help="output directory")

    s = sub.add_parser("simulate", help="emit a synthetic dataset")
    _add_sim_args(s)
    s.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    s.add_argument("--out", default="-", help="output file, '-' for stdout")

    p = sub.add_parser("power", help="size/power table over a penalty grid")
    _add_sim_args(p, multi_tau=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--mc-reps", type=int, default=10_000)
    p.add_argument("--audit-gamma", type=float, default=None, help="position adjustment used by the test")
    p.add_argument("--out", default="-", help="CSV output file, '-' for stdout")

    r = sub.add_parser("rationalize", help="check a finite distribution and emit a certificate")
    r.add_argument("--input", default="-")
    r.add_argument("--out", default="-")

    c = sub.add_parser("calibrate", help="binned outcome-vs-score calibration by group")
    c.add_argument("--input", required=True, help="CSV with score, group, outcome columns")
    c.add_argument("--bins", type=int, default=20)
    c.add_argument("--out", default="calibration_out", help="output directory")
    return parser


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def _sim_config(args, tau: float) -> SimConfig:
    return SimConfig(
        J=args.j, Q=args.q, p_group=args.p_group, quality_law=args.quality, tau=tau,
        gamma=args.gamma, outcome_noise=args.noise, seed=args.seed,
    )


def cmd_audit(args) -> int:
    config = AuditConfig(
        input=args.input, format=args.format or ("csv" if args.input.endswith(".csv") else "jsonl"),
        protected=args.protected, alpha=args.alpha, gamma=args.gamma, normalize=args.normalize,
        conditioning=args.conditioning, min_n=args.min_n, joint=args.joint, mc_reps=args.mc_reps,
        seed=args.seed, stratify_by=args.stratify_by, out=args.out,
    )
    report, paths = audit(config)
    s = report.summary
    print(f"queries: {s['n_queries']}  moments: {len(report.pointwise)}  max list length: {s['max_len']}")
    for name, j in report.joint.items():
        verdict = "reject" if j["reject"] else "no rejection"
        print(f"  joint[{name}] K={j['K']} T={j['T_stat']:.3f} p={j['p_value']:.4g} ({verdict} at {j['alpha']})")
    for w in report.warnings:
        print(f"  warning: {w}")
    if report.diagnostic:
        print(f"rankaudit: {report.diagnostic}", file=sys.stderr)
    print("wrote " + ", ".join(paths.values()))
    return 0


def cmd_simulate(args) -> int:
    ds = simulate_dataset(_sim_config(args, args.tau))
    fh = _open_out(args.out)
    try:
        (write_jsonl if args.format == "jsonl" else write_csv)(ds, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_power(args) -> int:
    grid = [_sim_config(args, t) for t in args.tau]
    rows = run_size_power(grid, args.alpha, args.reps, args.seed, audit_gamma=args.audit_gamma, mc_reps=args.mc_reps)
    fh = _open_out(args.out)
    try:
        records = [r.to_dict() for r in rows]
        w = csv.DictWriter(fh, fieldnames=list(records[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(records)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_rationalize(args) -> int:
    if args.input == "-":
        dist = read_distribution(sys.stdin)
    else:
        with open(args.input) as fh:
            dist = read_distribution(fh)
    cert = construct_information_structure(dist)
    fh = _open_out(args.out)
    try:
        fh.write(cert.to_text() + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_calibrate(args) -> int:
    import os

    with open(args.input, newline="") as fh:
        groups, scores, outcomes = read_scored_rows(fh)
    points, warnings = binned_calibration(groups, scores, outcomes, args.bins)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "calibration.csv"), "w", newline="") as fh:
        write_calibration_csv(points, fh)
    with open(os.path.join(args.out, "calibration.svg"), "w") as fh:
        fh.write(calibration_svg(points))
    for w in warnings:
        print(f"warning: {w}")
    print(f"wrote {len(points)} bin(s) to {args.out}")
    return 0


COMMANDS = {
    "audit": cmd_audit,
    "simulate": cmd_simulate,
    "power": cmd_power,
    "rationalize": cmd_rationalize,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (IngestError, ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"rankaudit: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
