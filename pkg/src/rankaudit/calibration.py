"""Binned calibration of outcomes against a ranking score, by group."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from . import svg

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationPoint:
    group: str
    bin: int
    n: int
    mean_score: float
    mean_outcome: float


def read_scored_rows(fh: TextIO) -> tuple[list[str], np.ndarray, np.ndarray]:
    reader = csv.DictReader(fh)
    missing = [c for c in ("score", "group", "outcome") if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"missing column(s): {', '.join(missing)}")
    groups, scores, outcomes = [], [], []
    for row in reader:
        s, y = float(row["score"]), float(row["outcome"])
        if not (math.isfinite(s) and math.isfinite(y)):
            raise ValueError(f"non-finite score or outcome in row {row}")
        groups.append(row["group"])
        scores.append(s)
        outcomes.append(y)
    return groups, np.asarray(scores), np.asarray(outcomes)


def binned_calibration(groups, scores, outcomes, n_bins: int = 20) -> tuple[list[CalibrationPoint], list[str]]:
    """Equal-count score bins within each group: mean score vs mean outcome.

    A group with fewer distinct scores than ``n_bins`` gets one bin per
    distinct score, and a warning.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    groups = np.asarray(groups, dtype=str)
    scores = np.asarray(scores, dtype=float)
    outcomes = np.asarray(outcomes, dtype=float)
    points, warnings = [], []
    for g in sorted(set(groups.tolist())):
        sel = groups == g
        s, y = scores[sel], outcomes[sel]
        order = np.argsort(s, kind="stable")
        s, y = s[order], y[order]
        k = n_bins
        distinct = len(np.unique(s))
        if distinct < k:
            k = distinct
            msg = f"group {g!r}: only {distinct} distinct score(s), using {k} bin(s)"
            log.warning(msg)
            warnings.append(msg)
        for b, idx in enumerate(np.array_split(np.arange(s.size), k)):
            points.append(CalibrationPoint(g, b + 1, int(idx.size), float(s[idx].mean()), float(y[idx].mean())))
    return points, warnings


def write_calibration_csv(points, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["group", "bin", "n", "mean_score", "mean_outcome"])
    for p in points:
        w.writerow([p.group, p.bin, p.n, repr(p.mean_score), repr(p.mean_outcome)])


def calibration_svg(points) -> str:
    panel = svg.Panel(
        "Outcome by score",
        [p.mean_score for p in points],
        [p.mean_outcome for p in points],
        series=[p.group for p in points],
        x_label="mean score in bin",
        y_label="mean outcome",
        zero_line=False,
        diagonal=True,
    )
    return svg.render([panel], panel_width=420, panel_height=320)
