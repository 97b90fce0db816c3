"""Ranked-list data types and the weighted ranking objective.

A query is stored rank-ordered: position 0 of every per-rank tuple is rank 1
(the best slot). Outcomes may be any finite reals; only NDCG normalization
requires them to be nonnegative.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np


class ZeroIDCG(ValueError):
    """Raised when a query's ideal DCG is zero, so NDCG is undefined."""


def ndcg_weight(r: int) -> float:
    if r < 1:
        raise ValueError(f"rank must be >= 1, got {r}")
    return 1.0 / math.log2(r + 1)


@dataclass(frozen=True)
class WeightScheme:
    """Strictly decreasing positive rank weights.

    ``kind`` is ``"ndcg"`` (``1/log2(r+1)``), ``"geometric"``
    (``(1+gamma)**-r``, which is decreasing only for ``gamma > 0``) or
    ``"explicit"`` (a finite list, usable up to its length).
    """

    kind: str = "ndcg"
    gamma: float = 0.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("ndcg", "geometric", "explicit"):
            raise ValueError(f"unknown weight scheme {self.kind!r}")
        if self.kind == "geometric":
            if not self.gamma > -1:
                raise ValueError("geometric weights need gamma > -1")
            if self.gamma <= 0:
                raise ValueError("geometric weights are strictly decreasing only for gamma > 0")
        if self.kind == "explicit":
            w = tuple(float(v) for v in self.values)
            if not w:
                raise ValueError("explicit weights must be nonempty")
            if any(not math.isfinite(v) or v <= 0 for v in w):
                raise ValueError("weights must be finite and positive")
            if any(b >= a for a, b in zip(w, w[1:])):
                raise ValueError("weights must be strictly decreasing")
            object.__setattr__(self, "values", w)

    @classmethod
    def ndcg(cls) -> WeightScheme:
        return cls("ndcg")

    @classmethod
    def geometric(cls, gamma: float) -> WeightScheme:
        return cls("geometric", gamma=gamma)

    @classmethod
    def explicit(cls, values: Iterable[float]) -> WeightScheme:
        return cls("explicit", values=tuple(values))

    def resolve(self, n: int) -> np.ndarray:
        """The first ``n`` weights, ``w_1 .. w_n``."""
        if self.kind == "explicit":
            if n > len(self.values):
                raise ValueError(f"explicit scheme has {len(self.values)} weights, {n} requested")
            return np.asarray(self.values[:n], dtype=float)
        r = np.arange(1, n + 1, dtype=float)
        if self.kind == "ndcg":
            return 1.0 / np.log2(r + 1.0)
        return (1.0 + self.gamma) ** -r


NDCG = WeightScheme.ndcg()


@dataclass(frozen=True)
class QueryRecord:
    """One ranked list. ``groups[i]``, ``outcomes[i]`` belong to rank ``i + 1``."""

    query_id: str
    groups: tuple[str, ...]
    outcomes: tuple[float, ...]
    features: tuple[Mapping[str, str], ...] | None = None

    def __post_init__(self):
        groups = tuple(str(g) for g in self.groups)
        outcomes = tuple(float(y) for y in self.outcomes)
        if not groups:
            raise ValueError(f"query {self.query_id!r} is empty")
        if len(groups) != len(outcomes):
            raise ValueError(f"query {self.query_id!r}: groups and outcomes differ in length")
        if not all(math.isfinite(y) for y in outcomes):
            raise ValueError(f"query {self.query_id!r}: non-finite outcome")
        object.__setattr__(self, "query_id", str(self.query_id))
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "outcomes", outcomes)
        if self.features is not None:
            feats = tuple({str(k): str(v) for k, v in f.items()} for f in self.features)
            if len(feats) != len(groups):
                raise ValueError(f"query {self.query_id!r}: features and groups differ in length")
            object.__setattr__(self, "features", feats)

    def __len__(self) -> int:
        return len(self.groups)

    def with_outcomes(self, outcomes: Sequence[float]) -> QueryRecord:
        return replace(self, outcomes=tuple(outcomes))


@dataclass(frozen=True, eq=False)
class RankArrays:
    """Padded array view of a collection of queries, used by the estimators.

    ``groups`` holds indices into ``labels`` with -1 past a query's end;
    ``outcomes`` is zero-padded. ``features`` maps a feature name to an
    integer code array shaped like ``groups`` (codes index ``levels[name]``).
    """

    outcomes: np.ndarray
    groups: np.ndarray
    lengths: np.ndarray
    labels: tuple[str, ...]
    features: Mapping[str, np.ndarray] = field(default_factory=dict)
    levels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def n_queries(self) -> int:
        return self.outcomes.shape[0]

    @property
    def max_len(self) -> int:
        return self.outcomes.shape[1]

    @classmethod
    def from_queries(cls, queries: Sequence[QueryRecord], labels: Sequence[str]) -> RankArrays:
        labels = tuple(labels)
        code = {g: i for i, g in enumerate(labels)}
        n = len(queries)
        width = max((len(q) for q in queries), default=0)
        outcomes = np.zeros((n, width))
        groups = np.full((n, width), -1, dtype=np.int64)
        lengths = np.zeros(n, dtype=np.int64)
        names = sorted({k for q in queries if q.features for f in q.features for k in f})
        raw = {k: np.full((n, width), "", dtype=object) for k in names}
        for i, q in enumerate(queries):
            m = len(q)
            lengths[i] = m
            outcomes[i, :m] = q.outcomes
            groups[i, :m] = [code[g] for g in q.groups]
            if q.features:
                for r, f in enumerate(q.features):
                    for k, v in f.items():
                        raw[k][i, r] = v
        features, levels = {}, {}
        for k, arr in raw.items():
            lv, inv = np.unique(arr.astype(str), return_inverse=True)
            levels[k] = tuple(lv.tolist())
            features[k] = inv.reshape(arr.shape).astype(np.int64)
        return cls(outcomes, groups, lengths, labels, features, levels)


@dataclass(frozen=True, eq=True)
class Dataset:
    queries: tuple[QueryRecord, ...]
    group_alphabet: frozenset[str] = field(init=False)
    max_len: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        object.__setattr__(self, "group_alphabet", frozenset(g for q in self.queries for g in q.groups))
        object.__setattr__(self, "max_len", max((len(q) for q in self.queries), default=0))

    def __len__(self) -> int:
        return len(self.queries)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted(self.group_alphabet))

    @cached_property
    def arrays(self) -> RankArrays:
        return RankArrays.from_queries(self.queries, self.labels)


def dcg(outcomes_by_rank: Sequence[float], weights: WeightScheme = NDCG) -> float:
    y = np.asarray(outcomes_by_rank, dtype=float)
    if y.size == 0:
        return 0.0
    return float(weights.resolve(y.size) @ y)


def idcg(outcomes: Iterable[float], weights: WeightScheme = NDCG) -> float:
    return dcg(sorted(outcomes, reverse=True), weights)


def ndcg_normalize(query: QueryRecord, weights: WeightScheme = NDCG) -> QueryRecord:
    """Divide every outcome by the query's ideal DCG.

    Raises ``ZeroIDCG`` when all outcomes are zero; negative outcomes are
    rejected since the normalization is meaningless for them.
    """
    if any(y < 0 for y in query.outcomes):
        raise ValueError(f"query {query.query_id!r}: NDCG normalization needs nonnegative outcomes")
    ideal = idcg(query.outcomes, weights)
    if ideal == 0:
        raise ZeroIDCG(query.query_id)
    return query.with_outcomes([y / ideal for y in query.outcomes])


def position_adjust(query: QueryRecord, gamma: float) -> QueryRecord:
    """Scale the outcome at rank ``a`` by ``(1+gamma)**a``.

    With engagement that shrinks by ``1+gamma`` per position, this recovers
    an outcome that no longer depends on where the candidate was shown.
    """
    if not gamma > -1:
        raise ValueError(f"gamma must be > -1, got {gamma}")
    if gamma == 0:
        return query
    return query.with_outcomes([(1.0 + gamma) ** a * y for a, y in enumerate(query.outcomes, start=1)])


def objective_value(query: QueryRecord, weights: WeightScheme = NDCG) -> float:
    return dcg(query.outcomes, weights)


def optimal_ranking(expected_outcomes: Sequence[float]) -> tuple[int, ...]:
    """Candidate indices (0-based) in rank order: descending, ties by index."""
    y = np.asarray(expected_outcomes, dtype=float)
    return tuple(int(i) for i in np.argsort(-y, kind="stable"))


def brute_force_best(expected_outcomes: Sequence[float], weights: WeightScheme = NDCG) -> float:
    """Maximum of the objective over every ordering. Exponential; small J only."""
    y = list(expected_outcomes)
    if not y:
        return 0.0
    w = weights.resolve(len(y))
    return max(float(w @ np.asarray(p)) for p in itertools.permutations(y))
