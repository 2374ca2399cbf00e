"""Ground truth by exhaustive enumeration and seeded Monte Carlo.

Nothing here uses the closed forms in :mod:`persistence.analytics`; the
expectations come from running the buffer state machine over every
outcome (or over sampled outcomes) and averaging.

Two enumeration paths exist.  ``method="direct"`` builds each ordering as a
:class:`StreamInstance` and calls :func:`simulate` / :func:`offline_payoff`.
``method="batch"`` steps the same state machine across all outcomes at
once with NumPy, after tabulating the policy's decision for every
(value, position) pair, which is valid because policies may only depend on
those two inputs.  Tests pin the two paths to each other.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .engine import Horizon, Policy, Position, StreamInstance, offline_payoff, simulate
from .errors import EnumerationGuardError, ValidationError
from .generators import IID, RandomPermutation, derive_seed, iid_indices, permutation_indices

MAX_PERMUTATION_N = 9
MAX_IID_OUTCOMES = 10**6


class Offline(Enum):
    OFFLINE = "offline"


OFFLINE = Offline.OFFLINE
Subject = Union[Policy, Offline]


@dataclass(frozen=True)
class ExactExpectation:
    value: Fraction
    outcomes_enumerated: int
    horizon: Horizon


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: Fraction
    standard_error: float
    trials: int
    base_seed: int
    horizon: Horizon
    steps: int
    relative: bool = False


# ---------------------------------------------------------------------------
# batch state machine
# ---------------------------------------------------------------------------


def _decision_table(policy: Policy, labels: Sequence[Fraction]) -> np.ndarray:
    table = np.empty((len(labels), 2), dtype=np.int8)
    for i, v in enumerate(labels):
        for pos in Position:
            table[i, pos] = int(policy.decide(pos, v))
    return table


def _slot_labels(streams: np.ndarray, t: int, pos: np.ndarray) -> np.ndarray:
    """Label in the observer's slot at step ``t`` per row, -1 when empty."""
    rows, n = streams.shape
    in0 = streams[:, t - 1] if t <= n else np.full(rows, -1, dtype=streams.dtype)
    in1 = streams[:, t - 2] if t >= 2 else np.full(rows, -1, dtype=streams.dtype)
    return np.where(pos == 0, in0, in1)


def _policy_counts(streams: np.ndarray, table: np.ndarray, steps: int) -> np.ndarray:
    """Observation counts per (row, label) for every stream row."""
    rows = streams.shape[0]
    counts = np.zeros((rows, table.shape[0]), dtype=np.int32)
    pos = np.zeros(rows, dtype=np.int8)
    every = np.arange(rows)
    for t in range(1, steps + 1):
        if t > 1:
            pos = np.where(prev >= 0, table[np.maximum(prev, 0), pos], pos)
        obs = _slot_labels(streams, t, pos)
        seen = obs >= 0
        counts[every[seen], obs[seen]] += 1
        prev = obs
    return counts


def _offline_counts(streams: np.ndarray, rank: np.ndarray, steps: int, interior: bool = False) -> np.ndarray:
    """Per (row, label) count of steps where the label is the larger slot."""
    rows, n = streams.shape
    counts = np.zeros((rows, len(rank)), dtype=np.int32)
    every = np.arange(rows)
    lo, hi = (2, n) if interior else (1, steps)
    for t in range(lo, hi + 1):
        a = streams[:, t - 1] if t <= n else None
        b = streams[:, t - 2] if t >= 2 else None
        if a is None:
            best = b
        elif b is None:
            best = a
        else:
            best = np.where(rank[a] >= rank[b], a, b)
        counts[every, best] += 1
    return counts


def _weighted_value(label_counts: Iterable[int], labels: Sequence[Fraction]) -> Fraction:
    return sum((int(c) * v for c, v in zip(label_counts, labels)), Fraction(0))


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------


def _check_perm_size(n: int) -> None:
    if n > MAX_PERMUTATION_N:
        raise EnumerationGuardError(
            f"refusing to enumerate {n}! orderings; the limit is n <= {MAX_PERMUTATION_N}"
        )


def enumerate_permutation_expectation(
    values: Iterable,
    subject: Subject,
    horizon: Horizon = Horizon.N_PLUS_ONE_STEPS,
    *,
    interior: bool = False,
    method: str = "batch",
) -> ExactExpectation:
    """Exact mean payoff over all ``n!`` orderings of ``values``.

    With ``interior=True`` (offline subject only) the result is the mean
    offline payoff of a single step among ``2..n`` instead of the total.
    """
    vals = RandomPermutation(values).values
    n = len(vals)
    _check_perm_size(n)
    if interior and subject is not OFFLINE:
        raise ValueError("interior-step means are defined for the offline subject only")
    if interior and n < 2:
        raise ValueError("interior steps need n >= 2")
    outcomes = math.factorial(n)

    if method == "direct":
        total = Fraction(0)
        for order in itertools.permutations(vals):
            stream = StreamInstance(order)
            if interior:
                total += sum((max(a, b) for a, b in zip(order, order[1:])), Fraction(0)) / (n - 1)
            elif subject is OFFLINE:
                total += offline_payoff(stream, horizon)
            else:
                total += simulate(stream, subject, horizon).total_payoff
        return ExactExpectation(total / outcomes, outcomes, horizon)
    if method != "batch":
        raise ValueError(f"unknown method {method!r}")

    streams = np.array(list(itertools.permutations(range(n))), dtype=np.int16).reshape(outcomes, n)
    steps = horizon.steps(n)
    if subject is OFFLINE:
        # vals is sorted, so the label doubles as the rank
        counts = _offline_counts(streams, np.arange(n), steps, interior)
    else:
        counts = _policy_counts(streams, _decision_table(subject, vals), steps)
    value = _weighted_value(counts.sum(axis=0, dtype=np.int64), vals) / outcomes
    if interior:
        value /= n - 1
    return ExactExpectation(value, outcomes, horizon)


# ---------------------------------------------------------------------------
# iid
# ---------------------------------------------------------------------------


def enumerate_iid_expectation(
    model: IID,
    subject: Subject,
    horizon: Horizon = Horizon.N_STEPS,
    *,
    interior: bool = False,
    method: str = "batch",
) -> ExactExpectation:
    """Probability-weighted exact mean over all ``k**n`` value sequences."""
    k, n = model.k, model.n
    outcomes = k**n
    if outcomes > MAX_IID_OUTCOMES:
        raise EnumerationGuardError(
            f"refusing to enumerate {k}^{n} = {outcomes} sequences; the limit is {MAX_IID_OUTCOMES}"
        )
    if interior and subject is not OFFLINE:
        raise ValueError("interior-step means are defined for the offline subject only")
    if interior and n < 2:
        raise ValueError("interior steps need n >= 2")
    vals, probs = model.values, model.probs

    if method == "direct":
        total = Fraction(0)
        for seq in itertools.product(range(k), repeat=n):
            weight = math.prod((probs[i] for i in seq), start=Fraction(1))
            if weight == 0:
                continue
            order = [vals[i] for i in seq]
            if interior:
                payoff = sum((max(a, b) for a, b in zip(order, order[1:])), Fraction(0)) / (n - 1)
            elif subject is OFFLINE:
                payoff = offline_payoff(StreamInstance(order), horizon)
            else:
                payoff = simulate(StreamInstance(order), subject, horizon).total_payoff
            total += weight * payoff
        return ExactExpectation(total, outcomes, horizon)
    if method != "batch":
        raise ValueError(f"unknown method {method!r}")

    dtype = np.int8 if k < 127 else np.int32
    streams = np.array(list(itertools.product(range(k), repeat=n)), dtype=dtype).reshape(outcomes, n)
    steps = horizon.steps(n)
    if subject is OFFLINE:
        counts = _offline_counts(streams, np.arange(k), steps, interior)
    else:
        counts = _policy_counts(streams, _decision_table(subject, vals), steps)

    # An outcome's probability depends only on how often each value occurs,
    # so aggregate counts per composition and weight each composition once.
    composition = np.stack([(streams == j).sum(axis=1) for j in range(k)], axis=1)
    groups, inverse = np.unique(composition, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    grouped = np.zeros((len(groups), k), dtype=np.int64)
    np.add.at(grouped, inverse, counts)
    total = Fraction(0)
    for comp, label_counts in zip(groups, grouped):
        weight = math.prod((probs[j] ** int(m) for j, m in enumerate(comp)), start=Fraction(1))
        if weight:
            total += weight * _weighted_value(label_counts, vals)
    if interior:
        total /= n - 1
    return ExactExpectation(total, outcomes, horizon)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _threshold_run_counts(big: np.ndarray, horizon: Horizon) -> np.ndarray:
    """Per-item observation counts for a policy that always returns from ``L1``.

    ``big[i]`` says whether the policy persists on item ``i`` when it sees it
    at ``L0``.  The first item of every maximal run of persisted items is
    seen (whatever precedes it leaves the observer at ``L0``); inside a run
    the observer alternately persists and misses, and the item after a run
    is missed exactly when the run's last item was persisted.
    """
    n = len(big)
    idx = np.arange(n)
    prev_big = np.concatenate(([False], big[:-1]))
    starts = big & ~prev_big
    run_start = np.maximum.accumulate(np.where(starts, idx, 0))
    persisted = big & ((idx - run_start) % 2 == 0)
    prev_persisted = np.concatenate(([False], persisted[:-1]))
    counts = np.where(persisted, 2, np.where(prev_persisted, 0, 1)).astype(np.int64)
    if horizon is Horizon.N_STEPS and persisted[-1]:
        counts[-1] = 1
    return counts


def _offline_run_counts(ranks: np.ndarray, horizon: Horizon) -> np.ndarray:
    """Per-item count of steps in which the item is the larger slot."""
    n = len(ranks)
    counts = np.zeros(n, dtype=np.int64)
    counts[0] += 1
    if n > 1:
        later = ranks[1:] > ranks[:-1]
        np.add.at(counts, np.where(later, np.arange(1, n), np.arange(n - 1)), 1)
    if horizon is Horizon.N_PLUS_ONE_STEPS:
        counts[-1] += 1
    return counts


def _trial_payoff(model, subject, horizon: Horizon, seed: int) -> Fraction:
    rng = np.random.default_rng(seed)
    if isinstance(model, RandomPermutation):
        labels = permutation_indices(model.n, rng)  # index into the sorted values
    else:
        labels = iid_indices(model, rng)
    vals = model.values

    if subject is OFFLINE:
        counts = _offline_run_counts(labels, horizon)
    else:
        table = _decision_table(subject, vals)
        if np.all(table[:, Position.L1] == Position.L0):
            counts = _threshold_run_counts(table[labels, Position.L0] == Position.L1, horizon)
        else:
            stream = StreamInstance(vals[i] for i in labels)
            return simulate(stream, subject, horizon).total_payoff
    per_label = np.zeros(len(vals), dtype=np.int64)
    np.add.at(per_label, labels, counts)
    return _weighted_value(per_label, vals)


def _trial_chunk(args) -> list[Fraction]:
    model, subject, horizon, base_seed, indices, scale = args
    return [_trial_payoff(model, subject, horizon, derive_seed(base_seed, i)) / scale for i in indices]


def monte_carlo(
    model: RandomPermutation | IID,
    subject: Subject,
    trials: int,
    base_seed: int,
    horizon: Horizon = Horizon.N_STEPS,
    *,
    relative: bool = False,
    workers: int = 1,
) -> MonteCarloEstimate:
    """Mean payoff over seeded trials with its standard error.

    Trial ``i`` uses ``derive_seed(base_seed, i)`` and per-trial payoffs are
    exact rationals aggregated exactly, so the estimate is identical for
    any ``workers`` count.  With ``relative=True`` each trial's total is
    divided by the number of steps.
    """
    if trials < 2:
        raise ValidationError("need at least two trials for a standard error")
    steps = horizon.steps(model.n)
    scale = steps if relative else 1
    if workers <= 1:
        payoffs = _trial_chunk((model, subject, horizon, base_seed, range(trials), scale))
    else:
        bounds = np.linspace(0, trials, workers + 1).astype(int)
        chunks = [
            (model, subject, horizon, base_seed, range(lo, hi), scale)
            for lo, hi in zip(bounds, bounds[1:])
            if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            payoffs = [p for part in pool.map(_trial_chunk, chunks) for p in part]
    mean = sum(payoffs, Fraction(0)) / trials
    variance = sum(((p - mean) ** 2 for p in payoffs), Fraction(0)) / (trials - 1)
    return MonteCarloEstimate(
        mean=mean,
        standard_error=math.sqrt(variance / trials),
        trials=trials,
        base_seed=base_seed,
        horizon=horizon,
        steps=steps,
        relative=relative,
    )
