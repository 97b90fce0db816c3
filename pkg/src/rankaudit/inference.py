"""Pointwise and joint tests of the moment inequalities.

Pointwise tests are one-sided normal tests of ``H0: mean >= 0`` on the
conditional mean. Joint tests use the studentized unconditional moments,
``v_j = -sqrt(n) * m_j / sigma_j``, and compare ``T = max_j v_j`` with the
distribution of the maximum of a correlated standard normal vector: every
moment is placed at the boundary of the null (mean zero), which is the
least favorable configuration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .moments import MomentEstimate, MomentSpec
from .rng import MONTE_CARLO, substream

log = logging.getLogger(__name__)

Z_975 = 1.959963984540054
REPORTED_ALPHAS = (0.01, 0.05, 0.10)
CHUNK = 4096
EIG_FLOOR = 1e-10


class NoTestableMoments(ValueError):
    pass


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class PointwiseResult:
    spec: MomentSpec
    t_stat: float
    p_value: float
    ci_lower: float
    ci_upper: float
    defined: bool = True


def pointwise_test(est: MomentEstimate) -> PointwiseResult:
    """One-sided test on the conditional mean; small p means a violation.

    With a zero standard error the p-value is 1, 0.5 or 0 for a positive,
    zero or negative mean. Fewer than two matches gives an undefined result.
    """
    nan = float("nan")
    if est.n_matched < 2:
        return PointwiseResult(est.spec, nan, nan, nan, nan, defined=False)
    m, se = est.mean_conditional, est.se_conditional
    if se == 0:
        p = 1.0 if m > 0 else (0.0 if m < 0 else 0.5)
        t = math.copysign(math.inf, m) if m != 0 else 0.0
        return PointwiseResult(est.spec, t, p, m, m)
    t = m / se
    return PointwiseResult(est.spec, t, norm_cdf(t), m - Z_975 * se, m + Z_975 * se)


@dataclass(frozen=True)
class JointResult:
    moment_subset: str
    K: int
    T_stat: float
    critical_values: dict[float, float]
    p_value: float
    method: str
    mc_reps: int
    seed: int
    alpha: float
    reject: bool
    moments: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "subset": self.moment_subset,
            "method": self.method,
            "K": self.K,
            "T_stat": _finite_or_none(self.T_stat),
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "critical_values": {f"{a:g}": _finite_or_none(c) for a, c in sorted(self.critical_values.items())},
            "mc_reps": self.mc_reps,
            "seed": self.seed,
            "moments": list(self.moments),
            "warnings": list(self.warnings),
        }


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


def testable(estimates: Sequence[MomentEstimate], min_n: int = 30) -> tuple[list[MomentEstimate], list[str]]:
    """Moments that enter a joint test, plus notes on the ones dropped."""
    keep, notes = [], []
    small = [e for e in estimates if e.n_matched < min_n]
    if small:
        notes.append(f"{len(small)} moment(s) with n_matched < {min_n} excluded")
    for e in estimates:
        if e.n_matched < min_n:
            continue
        if not e.se_unconditional > 0:
            notes.append(f"zero-variance moment {e.spec.label} dropped")
            continue
        keep.append(e)
    return keep, notes


def correlation(estimates: Sequence[MomentEstimate]) -> np.ndarray:
    """Correlation of the studentized unconditional means.

    Each moment's contributions are centered on its own usable queries and
    zeroed elsewhere, so moments defined on different query subsets (short
    lists) still get a positive semidefinite estimate.
    """
    rows = []
    for e in estimates:
        c = np.where(e.usable, e.contributions - e.mean_unconditional, 0.0)
        rows.append(c / np.sqrt(np.sum(c * c)))
    d = np.vstack(rows)
    omega = d @ d.T
    s = np.sqrt(np.diag(omega))
    omega = omega / np.outer(s, s)
    np.fill_diagonal(omega, 1.0)
    return omega


def _factor(omega: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((omega + omega.T) / 2)
    return vecs * np.sqrt(np.maximum(vals, EIG_FLOOR))


def max_normal_draws(omega: np.ndarray, mc_reps: int, seed: int) -> np.ndarray:
    """``mc_reps`` draws of ``max_j Z_j`` with ``Z ~ N(0, omega)``.

    Draws come in fixed chunks, chunk ``k`` from the substream keyed by
    ``(seed, k)``, so draw ``i`` does not depend on how chunks are scheduled.
    """
    L = _factor(omega)
    k = omega.shape[0]
    out = np.empty(mc_reps)
    for start in range(0, mc_reps, CHUNK):
        n = min(CHUNK, mc_reps - start)
        e = substream(seed, MONTE_CARLO, start // CHUNK).standard_normal((CHUNK, k))[:n]
        out[start : start + n] = (e @ L.T).max(axis=1)
    return out


def violation_stats(estimates: Sequence[MomentEstimate]) -> np.ndarray:
    return np.array([-e.mean_unconditional / e.se_unconditional for e in estimates])


def joint_test_lf(
    estimates: Sequence[MomentEstimate],
    alpha: float = 0.05,
    mc_reps: int = 10_000,
    seed: int = 0,
    min_n: int = 30,
    label: str = "all",
) -> JointResult:
    """Least-favorable joint test over the testable moments."""
    kept, notes = testable(estimates, min_n)
    for n in notes:
        log.debug(n)
    if not kept:
        raise NoTestableMoments("no testable moments")
    v = violation_stats(kept)
    T = float(v.max())
    draws = max_normal_draws(correlation(kept), mc_reps, seed)
    alphas = sorted(set(REPORTED_ALPHAS) | {alpha})
    crit = {a: float(np.quantile(draws, 1 - a)) for a in alphas}
    p = (1 + int(np.count_nonzero(draws >= T))) / (mc_reps + 1)
    return JointResult(
        label, len(kept), T, crit, p, "lf", mc_reps, seed, alpha,
        bool(T > crit[alpha]), tuple(e.spec.label for e in kept), tuple(notes),
    )


def joint_test_bonferroni(
    estimates: Sequence[MomentEstimate], alpha: float = 0.05, min_n: int = 30, label: str = "all"
) -> JointResult:
    kept, notes = testable(estimates, min_n)
    if not kept:
        raise NoTestableMoments("no testable moments")
    ps = [pointwise_test(e).p_value for e in kept]
    k = len(kept)
    p = min(1.0, k * min(ps))
    T = float(violation_stats(kept).max())
    # Bonferroni critical value for the max of K one-sided normal statistics.
    crit = {a: _norm_ppf(1 - a / k) for a in sorted(set(REPORTED_ALPHAS) | {alpha})}
    return JointResult(
        label, k, T, crit, p, "bonferroni", 0, 0, alpha, bool(p <= alpha),
        tuple(e.spec.label for e in kept), tuple(notes),
    )


def _norm_ppf(q: float) -> float:
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if norm_cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def subset_label(high: str, low: str, labels: Sequence[str]) -> str:
    """``"FM"`` style names for single-character labels, ``"F>M"`` otherwise."""
    if all(len(g) == 1 for g in labels):
        return high + low
    return f"{high}>{low}"


def subset_joint_tests(
    estimates: Sequence[MomentEstimate],
    method: str = "lf",
    alpha: float = 0.05,
    mc_reps: int = 10_000,
    seed: int = 0,
    min_n: int = 30,
) -> dict[str, JointResult]:
    """One joint test over all moments plus one per (high, low) group pair.

    Subsets left with no testable moments are omitted (with a log warning).
    """
    labels = sorted({g for e in estimates for g in e.spec.group_pair})
    buckets: dict[str, list[MomentEstimate]] = {"all": list(estimates)}
    for e in estimates:
        buckets.setdefault(subset_label(*e.spec.group_pair, labels), []).append(e)
    out = {}
    for name in ["all"] + sorted(k for k in buckets if k != "all"):
        try:
            if method == "lf":
                out[name] = joint_test_lf(buckets[name], alpha, mc_reps, seed, min_n, label=name)
            elif method == "bonferroni":
                out[name] = joint_test_bonferroni(buckets[name], alpha, min_n, label=name)
            else:
                raise ValueError(f"unknown joint method {method!r}")
        except NoTestableMoments:
            log.warning("subset %s has no testable moments; omitted", name)
    return out
