"""Synthetic rankers and Monte Carlo size/power studies.

Each candidate has a latent expected quality ``mu`` and a binary group
``G``. The ranker sorts by ``mu - tau * G`` (``tau > 0`` is a taste penalty
against group 1) and the realized outcome is drawn around ``mu``. A
position effect ``gamma`` shrinks realized engagement by ``1 + gamma`` per
position, i.e. the outcome shown at rank ``r`` is scaled by
``(1+gamma)**-r``; ``position_adjust`` with the same gamma undoes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .inference import NoTestableMoments, joint_test_lf, pointwise_test
from .model import Dataset, QueryRecord, RankArrays
from .moments import Adjustment, build_adjacent_family, estimate_family
from .rng import REPLICATION, SIMULATION, derive_seed, substream

GROUP_LABELS = ("0", "1")


@dataclass(frozen=True)
class Uniform01:
    pass


@dataclass(frozen=True)
class NormalQuality:
    mean: float = 0.0
    sd: float = 1.0


@dataclass(frozen=True)
class Bernoulli:
    pass


@dataclass(frozen=True)
class AdditiveNormal:
    sd: float = 1.0

    def __post_init__(self):
        if self.sd < 0:
            raise ValueError("noise sd must be >= 0")


QualityLaw = Union[Uniform01, NormalQuality]
OutcomeNoise = Union[Bernoulli, AdditiveNormal]


@dataclass(frozen=True)
class SimConfig:
    J: int = 11
    Q: int = 1000
    p_group: float = 0.5
    quality_law: QualityLaw = field(default_factory=Uniform01)
    tau: float = 0.0
    gamma: float = 0.0
    outcome_noise: OutcomeNoise = field(default_factory=Bernoulli)
    seed: int = 0

    def __post_init__(self):
        if self.J < 2:
            raise ValueError("J must be >= 2")
        if self.Q < 1:
            raise ValueError("Q must be >= 1")
        if not 0 < self.p_group < 1:
            raise ValueError("p_group must lie in (0, 1)")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if not self.gamma > -1:
            raise ValueError("gamma must be > -1")
        if isinstance(self.outcome_noise, Bernoulli) and not isinstance(self.quality_law, Uniform01):
            raise ValueError("Bernoulli outcomes need qualities in [0, 1] (Uniform01)")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def _draw(config: SimConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-ordered qualities, groups and outcomes, each shaped (Q, J).

    All draws come from one Philox stream keyed by the seed and are laid
    out row-major by (query, candidate index), so candidate j of query q
    always consumes the same counters.
    """
    Q, J = config.Q, config.J
    rng = substream(config.seed, SIMULATION)
    if isinstance(config.quality_law, Uniform01):
        mu = rng.random((Q, J))
    else:
        mu = config.quality_law.mean + config.quality_law.sd * rng.standard_normal((Q, J))
    g = (rng.random((Q, J)) < config.p_group).astype(np.int64)
    if isinstance(config.outcome_noise, Bernoulli):
        y = (rng.random((Q, J)) < mu).astype(float)
    else:
        y = mu + config.outcome_noise.sd * rng.standard_normal((Q, J))
    order = np.argsort(-(mu - config.tau * g), axis=1, kind="stable")
    mu, g, y = (np.take_along_axis(x, order, axis=1) for x in (mu, g, y))
    if config.gamma != 0:
        y = y * (1.0 + config.gamma) ** -np.arange(1, J + 1, dtype=float)
    return mu, g, y


def simulate_arrays(config: SimConfig) -> RankArrays:
    _, g, y = _draw(config)
    return RankArrays(y, g, np.full(config.Q, config.J, dtype=np.int64), GROUP_LABELS)


def simulate_with_quality(config: SimConfig) -> tuple[Dataset, np.ndarray]:
    """The dataset together with the rank-ordered latent qualities."""
    mu, g, y = _draw(config)
    queries = tuple(
        QueryRecord(f"q{i}", tuple(GROUP_LABELS[c] for c in g[i]), tuple(y[i].tolist())) for i in range(config.Q)
    )
    return Dataset(queries), mu


def simulate_dataset(config: SimConfig) -> Dataset:
    return simulate_with_quality(config)[0]


@dataclass
class PowerRow:
    config: SimConfig
    rejection_rate: float
    mc_se: float
    reps: int
    audit_gamma: float = 0.0
    pointwise_rates: dict[str, float] | None = None

    def to_dict(self) -> dict:
        c = self.config
        return {
            "J": c.J, "Q": c.Q, "tau": c.tau, "gamma": c.gamma, "p_group": c.p_group,
            "audit_gamma": self.audit_gamma, "reps": self.reps,
            "rejection_rate": self.rejection_rate, "mc_se": self.mc_se,
        }


def binomial_se(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1 - rate) / reps)


def run_size_power(
    config_grid: Sequence[SimConfig],
    alpha: float = 0.05,
    reps: int = 500,
    seed: int = 0,
    *,
    audit_gamma: float | None = None,
    mc_reps: int = 10_000,
    min_n: int = 30,
    pointwise: bool = False,
) -> list[PowerRow]:
    """Rejection frequency of the adjacent-pair least-favorable test.

    Replication ``i`` of every config uses the dataset seed and Monte Carlo
    seed derived from ``(seed, i)``, so configs share random numbers and
    the whole table is reproducible. ``audit_gamma`` defaults to the
    config's own gamma (the correctly specified position adjustment). A
    replication with no testable moment counts as a non-rejection.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    rows = []
    for config in config_grid:
        g_audit = config.gamma if audit_gamma is None else audit_gamma
        adj = Adjustment(gamma=g_audit)
        rejections = 0
        pw_hits: dict[str, int] = {}
        for i in range(reps):
            cfg = replace(config, seed=derive_seed(seed, REPLICATION, i, 0))
            arrays = simulate_arrays(cfg)
            ests = estimate_family(arrays, build_adjacent_family(arrays, "pair", adj))
            try:
                res = joint_test_lf(ests, alpha, mc_reps, derive_seed(seed, REPLICATION, i, 1), min_n)
                rejections += res.reject
            except NoTestableMoments:
                pass
            if pointwise:
                for e in ests:
                    r = pointwise_test(e)
                    hit = r.defined and r.p_value <= alpha
                    pw_hits[e.spec.label] = pw_hits.get(e.spec.label, 0) + hit
        rate = rejections / reps
        rows.append(
            PowerRow(
                config, rate, binomial_se(rate, reps), reps, g_audit,
                {k: v / reps for k, v in pw_hits.items()} if pointwise else None,
            )
        )
    return rows


def inframarginality_experiment(
    J_grid: Sequence[int],
    tau_small: float,
    Q: int = 2000,
    reps: int = 300,
    seed: int = 0,
    alpha: float = 0.05,
    *,
    outcome_noise: OutcomeNoise = Bernoulli(),
    mc_reps: int = 10_000,
    include_null: bool = False,
) -> list[PowerRow]:
    """Rejection rate for a fixed small penalty as the list length grows.

    Adjacent quality gaps shrink like 1/J, so a fixed penalty that hides
    behind inframarginal gaps in short lists becomes visible in long ones.
    With ``include_null`` a tau = 0 row is added for every J.
    """
    if not tau_small > 0:
        raise ValueError("tau_small must be > 0")
    taus = (0.0, tau_small) if include_null else (tau_small,)
    grid = [SimConfig(J=j, Q=Q, tau=t, outcome_noise=outcome_noise) for j in J_grid for t in taus]
    return run_size_power(grid, alpha, reps, seed, mc_reps=mc_reps)
