"""Exact rationalization of finite-support rank distributions.

Given a joint law of (group vector, outcome vector) by rank, either find a
violated adjacent inequality ``E[Y_a - Y_{a+1} | G = g] < 0`` or build an
information structure under which an unbiased ranker produces exactly that
law. The construction gives the ranker one signal per group vector ``g``:
conditional on the unordered set of groups, signal ``g`` occurs with
probability ``P(G = g | {G} = {g})`` and the candidates' outcomes then follow
``Y | G = g``. Sorting by conditional expected outcome reproduces ``g``.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .model import Dataset, optimal_ranking
from .moments import FullPattern, MomentSpec

INPUT_TOL = 1e-12
VERIFY_TOL = 1e-10


@dataclass(frozen=True)
class SupportPoint:
    groups: tuple[str, ...]
    outcomes: tuple[float, ...]
    probability: float


@dataclass(frozen=True)
class EmpiricalRankDistribution:
    support: tuple[SupportPoint, ...]
    J: int = field(init=False)

    def __post_init__(self):
        pts = tuple(
            SupportPoint(tuple(map(str, p.groups)), tuple(map(float, p.outcomes)), float(p.probability))
            for p in self.support
        )
        if not pts:
            raise ValueError("empty support")
        J = len(pts[0].groups)
        for p in pts:
            if len(p.groups) != J or len(p.outcomes) != J:
                raise ValueError("every support point needs J groups and J outcomes")
            if p.probability < 0 or not math.isfinite(p.probability):
                raise ValueError("probabilities must be finite and nonnegative")
            if not all(math.isfinite(y) for y in p.outcomes):
                raise ValueError("outcomes must be finite")
        total = math.fsum(p.probability for p in pts)
        if abs(total - 1.0) > INPUT_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "support", pts)
        object.__setattr__(self, "J", J)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[float, Sequence[str], Sequence[float]]]) -> EmpiricalRankDistribution:
        return cls(tuple(SupportPoint(tuple(g), tuple(y), p) for p, g, y in rows))

    def pattern_law(self) -> dict[tuple[str, ...], list[tuple[tuple[float, ...], float]]]:
        """Outcome vectors and their joint probabilities, grouped by pattern."""
        law: dict[tuple[str, ...], dict[tuple[float, ...], float]] = defaultdict(lambda: defaultdict(float))
        for p in self.support:
            if p.probability > 0:
                law[p.groups][p.outcomes] += p.probability
        return {g: sorted(ys.items()) for g, ys in sorted(law.items())}


def _conditional_means(outcomes: list[tuple[tuple[float, ...], float]]) -> tuple[float, np.ndarray]:
    mass = math.fsum(p for _, p in outcomes)
    ys = np.array([y for y, _ in outcomes])
    ps = np.array([p for _, p in outcomes])
    return mass, (ps @ ys) / mass


@dataclass(frozen=True)
class Violation:
    groups: tuple[str, ...]
    rank: int
    value: float


def check_inequalities(dist: EmpiricalRankDistribution) -> list[Violation]:
    """Adjacent conditional-mean gaps below -1e-12, for every pattern in the support."""
    out = []
    for g, outcomes in dist.pattern_law().items():
        _, m = _conditional_means(outcomes)
        for a in range(1, dist.J):
            gap = float(m[a - 1] - m[a])
            if gap < -INPUT_TOL:
                out.append(Violation(g, a, gap))
    return out


@dataclass(frozen=True)
class Signal:
    groups: tuple[str, ...]
    probability_given_groups: float
    outcome_law: tuple[tuple[tuple[float, ...], float], ...]
    expected_outcomes: tuple[float, ...]


@dataclass(frozen=True)
class RationalizationCertificate:
    status: str
    signals: tuple[Signal, ...] = ()
    violation: MomentSpec | None = None
    violation_value: float | None = None
    means_nonincreasing: bool = False
    law_reproduced: bool = False
    max_law_error: float | None = None

    @property
    def rationalized(self) -> bool:
        return self.status == "rationalized"

    def to_dict(self) -> dict:
        d: dict = {"status": self.status}
        if self.violation is not None:
            d["violation"] = {
                "high_rank": self.violation.high_rank,
                "low_rank": self.violation.low_rank,
                "groups": list(self.violation.conditioning.groups),
                "value": self.violation_value,
            }
        if self.signals:
            d["signals"] = [
                {
                    "groups": list(s.groups),
                    "probability_given_group_multiset": s.probability_given_groups,
                    "expected_outcomes": list(s.expected_outcomes),
                    "outcome_law": [{"outcomes": list(y), "probability": p} for y, p in s.outcome_law],
                }
                for s in self.signals
            ]
            d["verification"] = {
                "means_nonincreasing": self.means_nonincreasing,
                "law_reproduced": self.law_reproduced,
                "max_law_error": self.max_law_error,
            }
        return d

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def construct_information_structure(dist: EmpiricalRankDistribution) -> RationalizationCertificate:
    violations = check_inequalities(dist)
    if violations:
        v = min(violations, key=lambda v: v.value)
        spec = MomentSpec(v.rank, v.rank + 1, FullPattern(v.groups))
        return RationalizationCertificate("violated", violation=spec, violation_value=v.value)

    law = dist.pattern_law()
    multiset_mass: dict[tuple[str, ...], float] = defaultdict(float)
    pattern_mass = {}
    for g, outcomes in law.items():
        pattern_mass[g] = math.fsum(p for _, p in outcomes)
        multiset_mass[tuple(sorted(g))] += pattern_mass[g]

    signals = []
    for g, outcomes in law.items():
        mass, means = _conditional_means(outcomes)
        signals.append(
            Signal(
                g,
                mass / multiset_mass[tuple(sorted(g))],
                tuple((y, p / mass) for y, p in outcomes),
                tuple(means.tolist()),
            )
        )

    nonincreasing = all(
        s.expected_outcomes[r] - s.expected_outcomes[r + 1] >= -VERIFY_TOL
        for s in signals
        for r in range(dist.J - 1)
    )
    implied = implied_law(signals, multiset_mass)
    observed = {(g, y): p for g, outcomes in law.items() for y, p in outcomes}
    keys = set(implied) | set(observed)
    err = max(abs(implied.get(k, 0.0) - observed.get(k, 0.0)) for k in keys)
    return RationalizationCertificate(
        "rationalized",
        signals=tuple(signals),
        means_nonincreasing=nonincreasing,
        law_reproduced=err <= VERIFY_TOL,
        max_law_error=err,
    )


def implied_law(signals: Sequence[Signal], multiset_mass: dict) -> dict:
    """Joint (G, Y) law generated when an expected-outcome maximizer sees the signals.

    For each signal the candidates are indexed as in the signal's pattern;
    the ranker sorts them by expected outcome, which fixes the observed
    group vector and the rank order of the realized outcomes. No rank
    weights are involved: sorting is optimal for every decreasing scheme.
    Means within ``VERIFY_TOL`` of each other count as ties, which the
    ranker breaks by candidate index.
    """
    out: dict = defaultdict(float)
    for s in signals:
        m = s.expected_outcomes
        if all(m[r] - m[r + 1] >= -VERIFY_TOL for r in range(len(m) - 1)):
            order = tuple(range(len(m)))
        else:
            order = optimal_ranking(m)
        groups = tuple(s.groups[j] for j in order)
        p_signal = multiset_mass[tuple(sorted(s.groups))] * s.probability_given_groups
        for y, p in s.outcome_law:
            out[(groups, tuple(y[j] for j in order))] += p_signal * p
    return dict(out)


def empirical_distribution(dataset: Dataset) -> EmpiricalRankDistribution:
    """The exact empirical law of a dataset whose queries all share one length."""
    lengths = {len(q) for q in dataset.queries}
    if len(lengths) != 1:
        raise ValueError("empirical distribution needs queries of a single length")
    counts: dict = defaultdict(int)
    for q in dataset.queries:
        counts[(q.groups, q.outcomes)] += 1
    n = len(dataset.queries)
    return EmpiricalRankDistribution(
        tuple(SupportPoint(g, y, c / n) for (g, y), c in sorted(counts.items()))
    )


def read_distribution(fh: TextIO) -> EmpiricalRankDistribution:
    """Parse ``probability groups outcomes`` rows.

    Groups and outcomes are comma-separated; fields are separated by
    whitespace. Blank lines and ``#`` comments are skipped.
    """
    rows = []
    for lineno, line in enumerate(fh, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'probability groups outcomes'")
        p, g, y = parts
        rows.append((float(p), g.split(","), [float(v) for v in y.split(",")]))
    return EmpiricalRankDistribution.from_rows(rows)
