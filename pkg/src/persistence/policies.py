"""Constant-memory online policies and threshold selection helpers."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .engine import Position, as_fraction
from .errors import DomainError


@dataclass(frozen=True)
class ThresholdPolicy:
    """Follow an item into ``L1`` when its value is at least ``threshold``.

    From ``L1`` the observer always heads back to ``L0``.
    """

    threshold: Fraction

    def __post_init__(self):
        object.__setattr__(self, "threshold", as_fraction(self.threshold))

    def decide(self, position: Position, observed: Fraction) -> Position:
        if position is Position.L1:
            return Position.L0
        return Position.L1 if observed >= self.threshold else Position.L0


@dataclass(frozen=True)
class NaivePolicy:
    """Never leave ``L0``; every item is observed exactly once."""

    def decide(self, position: Position, observed: Fraction) -> Position:
        return Position.L0


def decide(policy: ThresholdPolicy, position: Position, observed) -> Position:
    return policy.decide(position, as_fraction(observed))


def median_threshold(values: Iterable) -> Fraction:
    """Threshold splitting ``values`` as evenly as possible.

    Among the distinct values, pick the one whose count of items at or
    above it is closest to ``m/2``; on a tie prefer the larger count.  For
    distinct values this is the element of rank ``ceil(m/2)`` from the top.
    """
    vals = sorted((as_fraction(v) for v in values), reverse=True)
    if not vals:
        raise DomainError("median of an empty value set")
    m = len(vals)
    best = None
    for i, v in enumerate(vals):
        if i + 1 < m and vals[i + 1] == v:
            continue
        at_or_above = i + 1
        key = (abs(2 * at_or_above - m), -at_or_above)
        if best is None or key < best[0]:
            best = (key, v)
    return best[1]


def rank_threshold(values: Iterable, k: int) -> Fraction:
    """The ``k``-th largest value (1-based)."""
    vals = sorted((as_fraction(v) for v in values), reverse=True)
    if not 1 <= k <= len(vals):
        raise DomainError(f"rank {k} outside 1..{len(vals)}")
    return vals[k - 1]
