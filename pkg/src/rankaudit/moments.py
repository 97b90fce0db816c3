"""Adjacent-rank outcome moments.

For ranks ``a < b`` an unbiased ranker satisfies

    E[(Y_a - (1+gamma) Y_b) 1{condition}] >= 0

where the condition fixes either the groups at ranks ``a`` and ``b``
(``Pair``) or the whole group vector (``FullPattern``), optionally within a
stratum of discrete observed features. Each estimate keeps its per-query
contribution vector so joint tests can estimate cross-moment correlation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .model import Dataset, RankArrays, WeightScheme


@dataclass(frozen=True)
class Pair:
    high: str
    low: str


@dataclass(frozen=True)
class FullPattern:
    groups: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))


Conditioning = Union[Pair, FullPattern]


@dataclass(frozen=True)
class Adjustment:
    gamma: float = 0.0
    normalized: bool = False

    def __post_init__(self):
        if not self.gamma > -1:
            raise ValueError(f"gamma must be > -1, got {self.gamma}")


@dataclass(frozen=True)
class MomentSpec:
    """One inequality. ``stratum`` holds ``(feature, value_at_a, value_at_b)``."""

    high_rank: int
    low_rank: int
    conditioning: Conditioning
    stratum: tuple[tuple[str, str, str], ...] = ()
    adjustment: Adjustment = Adjustment()

    def __post_init__(self):
        if not 1 <= self.high_rank < self.low_rank:
            raise ValueError(f"need 1 <= a < b, got a={self.high_rank}, b={self.low_rank}")
        if isinstance(self.conditioning, FullPattern) and self.low_rank > len(self.conditioning.groups):
            raise ValueError("ranks exceed the length of the group pattern")
        object.__setattr__(self, "stratum", tuple(tuple(s) for s in self.stratum))

    @property
    def group_pair(self) -> tuple[str, str]:
        """Groups of the compared candidates (high, low)."""
        c = self.conditioning
        if isinstance(c, Pair):
            return c.high, c.low
        return c.groups[self.high_rank - 1], c.groups[self.low_rank - 1]

    @property
    def label(self) -> str:
        c = self.conditioning
        cond = f"{c.high}>{c.low}" if isinstance(c, Pair) else "[" + ",".join(c.groups) + "]"
        text = f"r{self.high_rank}-{self.low_rank}:{cond}"
        if self.stratum:
            text += "|" + ",".join(f"{k}={hi}/{lo}" for k, hi, lo in self.stratum)
        return text


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Estimated moment over one dataset.

    ``contributions`` has one entry per query of the dataset, zero where the
    query is unusable or does not match; ``usable`` and ``matched`` are the
    corresponding masks. Undefined means and standard errors are NaN.
    """

    spec: MomentSpec
    n_matched: int
    n_total: int
    mean_unconditional: float
    mean_conditional: float
    se_unconditional: float
    se_conditional: float
    contributions: np.ndarray = field(repr=False)
    usable: np.ndarray = field(repr=False)
    matched: np.ndarray = field(repr=False)

    @property
    def empty(self) -> bool:
        return self.n_matched == 0

    @classmethod
    def from_contributions(cls, spec, contributions, usable=None, matched=None) -> MomentEstimate:
        c = np.asarray(contributions, dtype=float)
        usable = np.ones(c.shape, bool) if usable is None else np.asarray(usable, bool)
        matched = usable.copy() if matched is None else np.asarray(matched, bool) & usable
        c = np.where(matched, c, 0.0)
        n_total, n_matched = int(usable.sum()), int(matched.sum())
        mu, su = _masked_moments(c, usable, n_total)
        mc, sc = _masked_moments(c, matched, n_matched)
        return cls(spec, n_matched, n_total, mu, mc, su, sc, c, usable, matched)


def _masked_moments(c: np.ndarray, mask: np.ndarray, n: int) -> tuple[float, float]:
    """Mean and standard error (n-1 denominator) of ``c`` over ``mask``."""
    if n == 0:
        return float("nan"), float("nan")
    mean = float(np.sum(c, where=mask)) / n
    if n < 2:
        return mean, float("nan")
    dev = c - mean
    var = float(np.sum(dev * dev, where=mask)) / (n - 1)
    return mean, float(np.sqrt(var / n))


def as_arrays(data: Dataset | RankArrays) -> RankArrays:
    return data.arrays if isinstance(data, Dataset) else data


def normalized_outcomes(arrays: RankArrays) -> tuple[np.ndarray, np.ndarray]:
    """NDCG-normalized outcomes and the mask of queries with nonzero IDCG."""
    y = arrays.outcomes
    valid = np.arange(arrays.max_len) < arrays.lengths[:, None]
    if np.any(y[valid] < 0):
        raise ValueError("NDCG normalization needs nonnegative outcomes")
    w = WeightScheme.ndcg().resolve(arrays.max_len)
    ideal = -np.sort(-np.where(valid, y, 0.0), axis=1) @ w
    keep = ideal > 0
    out = np.divide(y, ideal[:, None], out=np.zeros_like(y), where=keep[:, None])
    return out, keep


class _Prepared:
    """Adjusted outcomes and lookup tables shared by every spec of one dataset."""

    def __init__(self, arrays: RankArrays):
        self.arrays = arrays
        self._norm = None
        self._patterns = None
        self._diffs: dict = {}
        self.code = {g: i for i, g in enumerate(arrays.labels)}
        self._by_rank = np.ascontiguousarray(arrays.groups.T)

    def outcomes(self, normalized: bool) -> tuple[np.ndarray, np.ndarray]:
        a = self.arrays
        if not normalized:
            return a.outcomes, np.ones(a.n_queries, bool)
        if self._norm is None:
            self._norm = normalized_outcomes(a)
        return self._norm

    def pattern_ids(self) -> dict[tuple[int, ...], np.ndarray]:
        if self._patterns is None:
            a = self.arrays
            ids: dict[tuple[int, ...], list[int]] = {}
            for i in range(a.n_queries):
                ids.setdefault(tuple(a.groups[i, : a.lengths[i]].tolist()), []).append(i)
            self._patterns = {k: np.asarray(v, dtype=np.int64) for k, v in ids.items()}
        return self._patterns

    def condition(self, spec: MomentSpec) -> np.ndarray:
        a = self.arrays
        ia, ib = spec.high_rank - 1, spec.low_rank - 1
        c = spec.conditioning
        if isinstance(c, Pair):
            gh, gl = self.code.get(c.high, -2), self.code.get(c.low, -2)
            cond = (self._by_rank[ia] == gh) & (self._by_rank[ib] == gl)
        else:
            key = tuple(self.code.get(g, -2) for g in c.groups)
            cond = np.zeros(a.n_queries, bool)
            cond[self.pattern_ids().get(key, np.empty(0, np.int64))] = True
        for name, hi, lo in spec.stratum:
            lv = a.levels.get(name, ())
            if hi not in lv or lo not in lv:
                return np.zeros(a.n_queries, bool)
            f = a.features[name]
            cond &= (f[:, ia] == lv.index(hi)) & (f[:, ib] == lv.index(lo))
        return cond

    def estimate(self, spec: MomentSpec) -> MomentEstimate:
        a = self.arrays
        if spec.low_rank > a.max_len:
            raise ValueError(f"rank {spec.low_rank} exceeds the longest query ({a.max_len})")
        adj = spec.adjustment
        key = (spec.high_rank, spec.low_rank, adj)
        if key not in self._diffs:
            y, keep = self.outcomes(adj.normalized)
            usable = keep & (a.lengths >= spec.low_rank)
            diff = y[:, spec.high_rank - 1] - (1.0 + adj.gamma) * y[:, spec.low_rank - 1]
            self._diffs[key] = (np.where(usable, diff, 0.0), usable)
        diff, usable = self._diffs[key]
        return MomentEstimate.from_contributions(spec, diff, usable, usable & self.condition(spec))


def estimate_moment(data: Dataset | RankArrays, spec: MomentSpec) -> MomentEstimate:
    return _Prepared(as_arrays(data)).estimate(spec)


def estimate_family(data: Dataset | RankArrays, specs: Sequence[MomentSpec]) -> list[MomentEstimate]:
    prep = _Prepared(as_arrays(data))
    return [prep.estimate(s) for s in specs]


def _observed_strata(arrays: RankArrays, a: int, keys: Sequence[str]) -> list[tuple]:
    """Feature-value combinations seen at ranks (a, a+1) among long-enough queries."""
    rows = arrays.lengths >= a + 1
    combos = set()
    cols = []
    for k in keys:
        if k not in arrays.features:
            raise KeyError(f"unknown feature {k!r}")
        f = arrays.features[k]
        cols.append((f[rows, a - 1], f[rows, a]))
    for i in range(int(rows.sum())):
        combos.add(tuple((k, arrays.levels[k][hi[i]], arrays.levels[k][lo[i]]) for k, (hi, lo) in zip(keys, cols)))
    return sorted(combos)


def build_adjacent_family(
    data: Dataset | RankArrays,
    conditioning: str = "pair",
    adjustment: Adjustment = Adjustment(),
    strata_keys: Sequence[str] | None = None,
) -> list[MomentSpec]:
    """Every adjacent-rank moment (a, a+1) for a = 1 .. max_len - 1.

    Pair mode crosses each rank with all ordered pairs of group labels; full
    mode with every group vector observed among queries long enough to
    contain rank a+1. Specs that end up matching nothing are kept; their
    estimates come back with ``n_matched == 0``.
    """
    arrays = as_arrays(data)
    if arrays.n_queries == 0:
        raise ValueError("dataset is empty")
    keys = tuple(sorted(strata_keys or ()))
    labels = arrays.labels
    if conditioning == "full":
        patterns = sorted(
            {tuple(labels[c] for c in arrays.groups[i, : arrays.lengths[i]]) for i in range(arrays.n_queries)},
            key=lambda p: (len(p), p),
        )
    elif conditioning != "pair":
        raise ValueError(f"conditioning must be 'pair' or 'full', got {conditioning!r}")
    specs = []
    for a in range(1, arrays.max_len):
        strata = _observed_strata(arrays, a, keys) if keys else [()]
        if conditioning == "pair":
            conds = [Pair(h, l) for h, l in itertools.product(labels, repeat=2)]
        else:
            conds = [FullPattern(p) for p in patterns if len(p) >= a + 1]
        for cond in conds:
            for st in strata:
                specs.append(MomentSpec(a, a + 1, cond, st, adjustment))
    return specs


def telescope_check(data: Dataset | RankArrays, pattern: Sequence[str], a: int, b: int, c: int):
    """Conditional means ``(m(a,b), m(b,c), m(a,c))`` given the full pattern.

    The third equals the sum of the first two whenever they are defined.
    """
    if not a < b < c:
        raise ValueError("need a < b < c")
    cond = FullPattern(tuple(pattern))
    prep = _Prepared(as_arrays(data))
    return tuple(prep.estimate(MomentSpec(x, y, cond)).mean_conditional for x, y in ((a, b), (b, c), (a, c)))
