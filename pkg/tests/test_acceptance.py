"""Acceptance suite: one test per numbered criterion.

Each test prints a ``criterion N: PASS/FAIL`` line and the terminal summary
repeats them in order. Monte Carlo thresholds use 2 binomial standard errors.
"""

import io
import itertools
import math
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from rankaudit.audit import AuditConfig, audit
from rankaudit.io import read_jsonl, write_csv, write_jsonl
from rankaudit.model import NDCG, QueryRecord, objective_value, optimal_ranking
from rankaudit.moments import FullPattern, MomentSpec, build_adjacent_family, estimate_family
from rankaudit.rationalize import EmpiricalRankDistribution, check_inequalities, construct_information_structure
from rankaudit.rng import substream
from rankaudit.simulate import AdditiveNormal, SimConfig, run_size_power, simulate_dataset

ALPHA = 0.05
REPS = 500


def size_bound(reps=REPS, alpha=ALPHA):
    return alpha + 2 * math.sqrt(alpha * (1 - alpha) / reps)


@pytest.fixture(scope="module")
def null_run():
    """The size design shared by criteria 4 and 8."""
    return run_size_power([SimConfig(J=11, Q=1000, tau=0.0)], ALPHA, REPS, seed=0, pointwise=True)[0]


def test_criterion_01_swap_identity_and_sorting(criterion):
    rng = substream(101, 0)
    start = time.perf_counter()
    worst, mismatches = 0.0, 0
    for _ in range(1000):
        J = int(rng.integers(1, 7))
        y = rng.normal(0, 3, J).round(int(rng.integers(0, 3)))  # rounding creates ties
        w = NDCG.resolve(J)
        q = QueryRecord("q", ("A",) * J, tuple(y))
        for a, b in itertools.combinations(range(J), 2):
            z = y.copy()
            z[a], z[b] = z[b], z[a]
            change = objective_value(q) - objective_value(q.with_outcomes(z))
            worst = max(worst, abs(change - (w[a] - w[b]) * (y[a] - y[b])))
        best = max(float(w @ y[list(p)]) for p in itertools.permutations(range(J)))
        mismatches += float(w @ y[list(optimal_ranking(y))]) != best
    elapsed = time.perf_counter() - start
    criterion(
        1,
        worst <= 1e-10 and mismatches == 0 and elapsed < 10,
        f"max swap error {worst:.2e}, {mismatches} ranking mismatches, {elapsed:.1f}s",
    )


def test_criterion_02_telescoping(criterion):
    data = simulate_dataset(SimConfig(J=5, Q=3000, p_group=0.3, outcome_noise=AdditiveNormal(1.0), seed=2))
    patterns = sorted({q.groups for q in data.queries})
    triples = list(itertools.combinations(range(1, 6), 3))
    specs, index = [], {}
    for g in patterns:
        for a, b in itertools.combinations(range(1, 6), 2):
            index[(g, a, b)] = len(specs)
            specs.append(MomentSpec(a, b, FullPattern(g)))
    means = [e.mean_conditional for e in estimate_family(data, specs)]
    worst = 0.0
    for g in patterns:
        for a, b, c in triples:
            m = lambda x, y: means[index[(g, x, y)]]  # noqa: E731
            worst = max(worst, abs(m(a, c) - m(a, b) - m(b, c)))
    criterion(2, worst <= 1e-10, f"{len(patterns)} patterns x {len(triples)} triples, max error {worst:.2e}")


def _random_distribution(rng):
    J = int(rng.integers(2, 5))
    levels = rng.choice(10, size=int(rng.integers(1, 6)), replace=False).astype(float)
    rows = []
    for _ in range(int(rng.integers(1, 7))):
        g = rng.choice(["A", "B"], size=J)
        y = rng.choice(levels, size=J)
        if rng.random() < 0.5:
            y = np.sort(y)[::-1]
        rows.append([float(rng.integers(1, 20)), tuple(g), tuple(y)])
    total = sum(r[0] for r in rows)
    return EmpiricalRankDistribution.from_rows((w / total, g, y) for w, g, y in rows)


def test_criterion_03_rationalization_iff(criterion):
    rng = substream(103, 0)
    disagreements = bad_certificates = rationalized = 0
    for _ in range(200):
        d = _random_distribution(rng)
        cert = construct_information_structure(d)
        disagreements += cert.rationalized != (check_inequalities(d) == [])
        if cert.rationalized:
            rationalized += 1
            ok = cert.means_nonincreasing and cert.law_reproduced and cert.max_law_error <= 1e-10
            bad_certificates += not ok
    criterion(
        3,
        disagreements == 0 and bad_certificates == 0 and 0 < rationalized < 200,
        f"{rationalized}/200 rationalized, {disagreements} disagreements, {bad_certificates} failed certificates",
    )


def test_criterion_04_size(null_run, criterion):
    r = null_run
    criterion(4, r.rejection_rate <= size_bound(), f"LF rejection rate {r.rejection_rate:.4f} <= {size_bound():.4f}")


def test_criterion_05_power_monotone(criterion):
    rows = run_size_power([SimConfig(J=11, Q=2000, tau=t) for t in (0.2, 0.5)], ALPHA, REPS, seed=0)
    low, high = rows
    tol = 2 * math.hypot(low.mc_se, high.mc_se)
    monotone = high.rejection_rate >= low.rejection_rate - tol
    criterion(
        5,
        monotone and high.rejection_rate >= 0.9,
        f"rates tau=0.2: {low.rejection_rate:.3f}, tau=0.5: {high.rejection_rate:.3f} (threshold 0.9)",
    )


def test_criterion_06_sign_pattern(criterion):
    # Literal statement: moments with the penalized group ("1") ranked
    # directly above the other group negative, the reverse positive.
    data = simulate_dataset(SimConfig(J=11, Q=2000, tau=0.5, seed=6))
    ests = estimate_family(data, build_adjacent_family(data))
    penalized_above = [e.mean_conditional for e in ests if e.spec.group_pair == ("1", "0")]
    other_above = [e.mean_conditional for e in ests if e.spec.group_pair == ("0", "1")]
    ok = all(m < 0 for m in penalized_above) and all(m > 0 for m in other_above)
    criterion(
        6,
        ok,
        f"penalized above: {sum(m < 0 for m in penalized_above)}/{len(penalized_above)} negative; "
        f"reverse: {sum(m > 0 for m in other_above)}/{len(other_above)} positive",
    )


def test_criterion_07_position_effect(criterion):
    cfg = SimConfig(J=11, Q=1000, tau=0.0, gamma=0.1)
    matched = run_size_power([cfg], ALPHA, REPS, seed=0, audit_gamma=0.1)[0]
    ignored = run_size_power([cfg], ALPHA, REPS, seed=0, audit_gamma=0.0)[0]
    over = ALPHA + 2 * ignored.mc_se
    criterion(
        7,
        matched.rejection_rate <= size_bound() and ignored.rejection_rate > over,
        f"gamma 0.1 audit: {matched.rejection_rate:.4f} <= {size_bound():.4f}; "
        f"gamma 0 audit: {ignored.rejection_rate:.4f} vs required > {over:.4f}",
    )


def test_criterion_08_pointwise_calibration(null_run, criterion):
    rates = null_run.pointwise_rates
    bound = size_bound()
    worst = max(rates, key=rates.get)
    criterion(
        8,
        all(r <= bound for r in rates.values()),
        f"{len(rates)} moments, max pointwise rate {rates[worst]:.4f} ({worst}) <= {bound:.4f}",
    )


def test_criterion_09_determinism_and_roundtrip(criterion, tmp_path):
    cfg = SimConfig(J=6, Q=400, tau=0.2, seed=9)
    texts = []
    for _ in range(2):
        buf = io.StringIO()
        write_jsonl(simulate_dataset(cfg), buf)
        texts.append(buf.getvalue())
    csvs = []
    for _ in range(2):
        buf = io.StringIO()
        write_csv(simulate_dataset(cfg), buf)
        csvs.append(buf.getvalue())
    roundtrip = read_jsonl(io.StringIO(texts[0])) == simulate_dataset(cfg)

    (tmp_path / "d.jsonl").write_text(texts[0])
    outputs = []
    for run in range(2):
        config = AuditConfig(input=str(tmp_path / "d.jsonl"), mc_reps=2000, min_n=10, out=str(tmp_path / "out"))
        _, paths = audit(config)
        outputs.append([Path(paths[k]).read_bytes() for k in ("report.json", "moments.csv", "moments.svg")])
        shutil.rmtree(tmp_path / "out")
    ok = texts[0] == texts[1] and csvs[0] == csvs[1] and roundtrip and outputs[0] == outputs[1]
    criterion(9, ok, f"datasets equal: {texts[0] == texts[1]}, artifacts equal: {outputs[0] == outputs[1]}, "
                     f"round-trip: {roundtrip}")


def test_criterion_10_inframarginality(criterion):
    # Pinned design: continuous outcomes with small noise, large Q.
    noise = AdditiveNormal(0.01)
    rows = run_size_power(
        [SimConfig(J=j, Q=20000, tau=0.02, outcome_noise=noise) for j in (2, 50)], ALPHA, 300, seed=0
    )
    short, long = rows
    margin = 2 * math.hypot(short.mc_se, long.mc_se)
    criterion(
        10,
        long.rejection_rate - short.rejection_rate > margin,
        f"J=2: {short.rejection_rate:.4f}, J=50: {long.rejection_rate:.4f}, need gap > {margin:.4f}",
    )
