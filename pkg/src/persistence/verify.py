"""Self-check suite behind ``persistence verify``.

Each check compares a closed form against an independent computation
(enumeration, recurrence iteration, dynamic programming) and reports the
first counterexample it finds.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import analytics
from .engine import Horizon, StreamInstance, offline_dp, offline_payoff, simulate
from .generators import IID, measure_density, synth_c_dense
from .oracle import OFFLINE, enumerate_iid_expectation, enumerate_permutation_expectation
from .policies import NaivePolicy, ThresholdPolicy, rank_threshold


@dataclass(frozen=True)
class CheckResult:
    name: str
    claim: str
    passed: bool
    detail: str


def _random_distinct(rng: random.Random, n: int) -> list[Fraction]:
    vals: set[Fraction] = set()
    while len(vals) < n:
        vals.add(Fraction(rng.randint(1, 60), rng.randint(1, 7)))
    return sorted(vals)


def _random_probs(rng: random.Random, k: int) -> list[Fraction]:
    w = [rng.randint(1, 9) for _ in range(k)]
    return [Fraction(x, sum(w)) for x in w]


def check_identity_a(max_n: int = 20) -> str | None:
    for n in range(1, max_n + 1):
        for k in range(1, n + 1):
            lhs, rhs = analytics.identity_sum_f_a(n, k)
            if lhs != rhs:
                return f"n={n}, k={k}: {lhs} != {rhs}"
    return None


def check_identity_b(max_n: int = 20) -> str | None:
    for n in range(2, max_n + 1):
        for k in range(1, n):
            lhs, rhs = analytics.identity_sum_f_b(n, k)
            if lhs != rhs:
                return f"n={n}, k={k}: {lhs} != {rhs}"
    return None


def check_coefficient_limit() -> str | None:
    for c in (Fraction(1, 10), Fraction(3, 10), Fraction(1, 2)):
        target = 1 / (1 + c)
        errs = [abs(analytics.asymptotic_coefficient(n, math.floor(c * n)) - target) for n in (100, 1000)]
        if not errs[1] < errs[0]:
            return f"c={c}: error did not shrink ({float(errs[0])} -> {float(errs[1])})"
    return None


def check_perm_threshold(seed: int = 1, max_n: int = 6) -> str | None:
    rng = random.Random(seed)
    for n in range(2, max_n + 1):
        vals = _random_distinct(rng, n)
        for k in range(1, n + 1):
            policy = ThresholdPolicy(rank_threshold(vals, k))
            exact = enumerate_permutation_expectation(vals, policy, Horizon.N_PLUS_ONE_STEPS).value
            formula = analytics.perm_threshold_total(vals, k)
            if exact != formula:
                return f"values={[str(v) for v in vals]}, k={k}: enumeration {exact} != formula {formula}"
    return None


def check_perm_offline(seed: int = 2, max_n: int = 6) -> str | None:
    rng = random.Random(seed)
    for n in range(2, max_n + 1):
        vals = _random_distinct(rng, n)
        interior = enumerate_permutation_expectation(vals, OFFLINE, interior=True).value
        if interior != analytics.perm_opt_relative(vals):
            return f"values={[str(v) for v in vals]}: per-step {interior}"
        for horizon in Horizon:
            total = enumerate_permutation_expectation(vals, OFFLINE, horizon).value
            if total != analytics.perm_opt_total(vals, horizon):
                return f"values={[str(v) for v in vals]}, horizon={horizon.value}: total {total}"
    return None


def check_iid(seed: int = 3, max_n: int = 6) -> str | None:
    rng = random.Random(seed)
    for k in (2, 3):
        vals = _random_distinct(rng, k)
        probs = _random_probs(rng, k)
        for n in range(1, max_n + 1):
            model = IID(vals, probs, n)
            for r in range(k):
                exact = enumerate_iid_expectation(model, ThresholdPolicy(vals[r])).value
                formula = analytics.iid_threshold_total(vals, probs, r, n)
                if exact != formula:
                    return f"k={k}, n={n}, r={r}: enumeration {exact} != formula {formula}"
            if n >= 2:
                step = enumerate_iid_expectation(model, OFFLINE, interior=True).value
                if step != analytics.iid_opt_relative(vals, probs):
                    return f"k={k}, n={n}: offline per-step {step}"
    return None


def check_q_recurrence() -> str | None:
    for P in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
        for i in range(101):
            if analytics.q_closed(i, P) != analytics.q_recurrence(i, P):
                return f"P={P}, i={i}"
    return None


def check_policy_invariants(seed: int = 4) -> str | None:
    rng = random.Random(seed)
    for _ in range(50):
        n = rng.randint(1, 12)
        stream = StreamInstance(Fraction(rng.randint(0, 9)) for _ in range(n))
        for horizon in Horizon:
            high = simulate(stream, ThresholdPolicy(max(stream) + 1), horizon)
            if high != simulate(stream, NaivePolicy(), horizon):
                return f"stream={[str(v) for v in stream]}: high threshold differs from naive"
            T = Fraction(rng.randint(0, 10))
            trace = simulate(stream, ThresholdPolicy(T), horizon)
            if trace.total_payoff > offline_payoff(stream, horizon):
                return f"stream={[str(v) for v in stream]}, T={T}: online beats offline"
            if offline_dp(stream, horizon)[0] != offline_payoff(stream, horizon):
                return f"stream={[str(v) for v in stream]}: DP disagrees with max-of-slots sum"
    return None


def check_density_round_trip() -> str | None:
    for t in (4, 10, 40, 1000):
        for i in range(1, 11):
            c = Fraction(i, 20)
            if math.floor(c * t) < 1:
                continue
            report = measure_density(synth_c_dense(c, t))
            if report.c != c or report.residual != 0:
                return f"c={c}, t={t}: measured c={report.c}, residual={report.residual}"
    return None


def check_rho() -> str | None:
    if analytics.rho(Fraction(1, 2)) != Fraction(2, 3):
        return f"rho(1/2) = {analytics.rho(Fraction(1, 2))}"
    grid = [analytics.rho(Fraction(i, 20)) for i in range(1, 11)]
    if any(b >= a for a, b in zip(grid, grid[1:])):
        return "rho is not decreasing on the c grid"
    if not abs(analytics.rho(Fraction(1, 10**6)) - 1) < Fraction(1, 10**5):
        return "rho does not approach 1 as c -> 0"
    return None


CHECKS: list[tuple[str, str, Callable[[], str | None]]] = [
    ("sum_f_identity_a", "sum over positions of f_tnk has the single alternating-sum form", check_identity_a),
    ("sum_f_identity_b", "summed observation probability of below-threshold items", check_identity_b),
    ("coefficient_limit", "normalized alternating sum tends to 1/(1+c)", check_coefficient_limit),
    ("perm_threshold_exact", "random-order threshold total equals enumeration", check_perm_threshold),
    ("perm_offline_exact", "random-order offline payoff equals enumeration", check_perm_offline),
    ("iid_exact", "iid threshold total and offline per-step payoff equal enumeration", check_iid),
    ("q_recurrence", "position probability closed form equals the recurrence", check_q_recurrence),
    ("policy_invariants", "naive equivalence, online <= offline, DP optimum", check_policy_invariants),
    ("density_round_trip", "synthesized c-dense sets measure back exactly", check_density_round_trip),
    ("rho_spectrum", "rho(1/2) = 2/3, decreasing in c, tends to 1", check_rho),
]


def run_checks() -> list[CheckResult]:
    results = []
    for name, claim, fn in CHECKS:
        try:
            failure = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            failure = f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, claim, failure is None, failure or "ok"))
    return results
