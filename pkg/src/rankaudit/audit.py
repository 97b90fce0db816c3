"""The audit pipeline: data in, report and plot artifacts out."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence, TextIO

from . import __version__, svg
from .inference import pointwise_test, subset_joint_tests, subset_label, testable
from .io import ingest
from .model import Dataset
from .moments import Adjustment, FullPattern, build_adjacent_family, estimate_family, normalized_outcomes

log = logging.getLogger(__name__)

SCHEMA = 1


@dataclass(frozen=True)
class AuditConfig:
    input: str = "-"
    format: str = "jsonl"
    protected: tuple[str, ...] = ()
    alpha: float = 0.05
    gamma: float = 0.0
    normalize: bool = False
    conditioning: str = "pair"
    min_n: int = 30
    joint: str = "lf"
    mc_reps: int = 10_000
    seed: int = 0
    stratify_by: tuple[str, ...] = ()
    out: str = "audit_out"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.gamma > -1:
            raise ValueError("gamma must be > -1")
        if self.conditioning not in ("pair", "full"):
            raise ValueError("conditioning must be 'pair' or 'full'")
        if self.joint not in ("lf", "bonferroni"):
            raise ValueError("joint must be 'lf' or 'bonferroni'")
        if self.mc_reps < 1:
            raise ValueError("mc_reps must be >= 1")


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    summary: dict
    pointwise: list[dict]
    joint: dict[str, dict]
    subsets: dict[str, list[str]]
    warnings: list[str]
    provenance: dict
    estimates: list = field(default_factory=list, repr=False)
    diagnostic: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "summary": self.summary,
            "pointwise": self.pointwise,
            "joint": self.joint,
            "subsets": self.subsets,
            "warnings": self.warnings,
            "diagnostic": self.diagnostic,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def dataset_summary(dataset: Dataset) -> dict:
    lengths = Counter(len(q) for q in dataset.queries)
    groups = Counter(g for q in dataset.queries for g in q.groups)
    return {
        "n_queries": len(dataset),
        "max_len": dataset.max_len,
        "length_histogram": {str(k): lengths[k] for k in sorted(lengths)},
        "group_counts": {g: groups[g] for g in sorted(groups)},
    }


def run_audit(config: AuditConfig, dataset: Dataset | None = None) -> TestReport:
    """Estimate the adjacent family, run pointwise and per-subset joint tests.

    When no moment survives the joint-test filters the report is still
    produced, with no joint results and the diagnostic in ``diagnostic``.
    """
    if dataset is None:
        dataset = ingest(config.input, config.format)
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    warnings: list[str] = []
    summary = dataset_summary(dataset)
    if config.normalize:
        _, keep = normalized_outcomes(dataset.arrays)
        skipped = int((~keep).sum())
        summary["skipped_zero_idcg"] = skipped
        if skipped:
            warnings.append(f"{skipped} query(ies) with zero IDCG skipped in normalized analysis")

    adj = Adjustment(config.gamma, config.normalize)
    specs = build_adjacent_family(dataset, config.conditioning, adj, config.stratify_by or None)
    estimates = estimate_family(dataset, specs)
    kept, notes = testable(estimates, config.min_n)
    diagnostic = None
    if not kept:
        diagnostic = (
            f"no testable moments: none of {len(estimates)} moment(s) has n_matched >= {config.min_n} "
            "and positive variance"
        )
    warnings += notes
    n_empty = sum(e.empty for e in estimates)
    if n_empty:
        warnings.append(f"{n_empty} moment(s) match no query")

    labels = dataset.labels
    joint = {}
    if kept:
        joint = subset_joint_tests(estimates, config.joint, config.alpha, config.mc_reps, config.seed, config.min_n)
    kept_ids = {id(e) for e in kept}
    rows, subsets = [], {}
    for e in estimates:
        pw = pointwise_test(e)
        s = e.spec
        bucket = subset_label(*s.group_pair, labels)
        subsets.setdefault(bucket, []).append(s.label)
        rows.append(
            {
                "moment": s.label,
                "high_rank": s.high_rank,
                "low_rank": s.low_rank,
                "high_group": s.group_pair[0],
                "low_group": s.group_pair[1],
                "pattern": list(s.conditioning.groups) if isinstance(s.conditioning, FullPattern) else None,
                "stratum": {k: [hi, lo] for k, hi, lo in s.stratum},
                "subset": bucket,
                "n_matched": e.n_matched,
                "n_total": e.n_total,
                "mean_conditional": _num(e.mean_conditional),
                "se_conditional": _num(e.se_conditional),
                "mean_unconditional": _num(e.mean_unconditional),
                "se_unconditional": _num(e.se_unconditional),
                "t_stat": _num(pw.t_stat) if pw.defined else None,
                "p_value": _num(pw.p_value) if pw.defined else None,
                "ci_lower": _num(pw.ci_lower) if pw.defined else None,
                "ci_upper": _num(pw.ci_upper) if pw.defined else None,
                "in_joint_test": id(e) in kept_ids,
            }
        )
    for name in ["all"] + sorted(subsets):
        if kept and name not in joint:
            warnings.append(f"subset {name} has no testable moments; joint test omitted")

    cfg = asdict(config)
    cfg["protected"] = list(config.protected)
    cfg["stratify_by"] = list(config.stratify_by)
    provenance = {"config": cfg, "seed": config.seed, "version": __version__}
    return TestReport(
        summary,
        rows,
        {k: v.to_dict() for k, v in joint.items()},
        {k: subsets[k] for k in sorted(subsets)},
        warnings,
        provenance,
        estimates,
        diagnostic,
    )


MOMENT_COLUMNS = [
    "high_rank", "low_rank", "high_group", "low_group", "pattern", "stratum",
    "n_matched", "mean", "se", "ci_lower", "ci_upper",
]


def write_moments_csv(report: TestReport, fh: TextIO) -> None:
    """Plot data: one row per moment with the conditional mean and its 95% CI."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(MOMENT_COLUMNS)

    def cell(x):
        return "" if x is None else repr(x)

    for r in report.pointwise:
        w.writerow(
            [
                r["high_rank"], r["low_rank"], r["high_group"], r["low_group"],
                "" if r["pattern"] is None else ",".join(r["pattern"]),
                ";".join(f"{k}={hi}/{lo}" for k, (hi, lo) in r["stratum"].items()),
                r["n_matched"], cell(r["mean_conditional"]), cell(r["se_conditional"]),
                cell(r["ci_lower"]), cell(r["ci_upper"]),
            ]
        )


def moments_svg(report: TestReport, protected: Sequence[str] = ()) -> str:
    """One panel per ordered pair of distinct groups, x = rank of the higher candidate."""
    pairs = sorted({(r["high_group"], r["low_group"]) for r in report.pointwise})
    mixed = [p for p in pairs if p[0] != p[1]] or pairs
    if protected:
        mixed = [p for p in mixed if p[0] in protected or p[1] in protected] or mixed
    panels = []
    for hi, lo in mixed:
        rows = [r for r in report.pointwise if (r["high_group"], r["low_group"]) == (hi, lo)]
        rows = [r for r in rows if r["mean_conditional"] is not None]
        nan = float("nan")
        panels.append(
            svg.Panel(
                f"higher ranked {hi}, lower ranked {lo}",
                [r["high_rank"] for r in rows],
                [r["mean_conditional"] for r in rows],
                [nan if r["ci_lower"] is None else r["ci_lower"] for r in rows],
                [nan if r["ci_upper"] is None else r["ci_upper"] for r in rows],
                x_label="rank of higher-ranked candidate",
                y_label="mean outcome difference",
            )
        )
    return svg.render(panels, title="Adjacent-rank outcome differences")


def write_artifacts(report: TestReport, out_dir: str, protected: Sequence[str] = ()) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, k) for k in ("report.json", "moments.csv", "moments.svg")}
    with open(paths["report.json"], "w") as fh:
        fh.write(report.to_json())
    with open(paths["moments.csv"], "w", newline="") as fh:
        write_moments_csv(report, fh)
    with open(paths["moments.svg"], "w") as fh:
        fh.write(moments_svg(report, protected))
    return paths


def audit(config: AuditConfig, dataset: Dataset | None = None) -> tuple[TestReport, dict[str, str]]:
    report = run_audit(config, dataset)
    return report, write_artifacts(report, config.out, config.protected)
