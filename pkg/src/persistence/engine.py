"""Two-slot stream buffer with a synchronously moving observer.

Items enter slot ``L0`` one per time step and move to ``L1`` on the next
step before leaving.  The observer processes exactly one slot per step and
collects the value of the item it sees there.  Moving happens at the same
instant the items shift, so returning from ``L1`` to ``L0`` skips the item
that just moved past.

All values are kept as :class:`fractions.Fraction` so that simulated payoffs
can be compared bit-for-bit with closed-form expectations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Iterable, Optional, Protocol, Sequence

from .errors import ValidationError


class Position(IntEnum):
    L0 = 0
    L1 = 1


class Horizon(Enum):
    """How many steps a run lasts for a stream of ``n`` items.

    ``N_STEPS`` stops after step ``n``; ``N_PLUS_ONE_STEPS`` adds a final
    step in which only ``L1`` is occupied, so every item has had the chance
    to be seen in both slots.
    """

    N_STEPS = "n"
    N_PLUS_ONE_STEPS = "n+1"

    def steps(self, n: int) -> int:
        return n if self is Horizon.N_STEPS else n + 1

    @classmethod
    def parse(cls, text: str | Horizon) -> Horizon:
        if isinstance(text, Horizon):
            return text
        for member in cls:
            if text in (member.value, member.name):
                return member
        raise ValueError(f"unknown horizon {text!r}; expected 'n' or 'n+1'")


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # repr round-trips, so "0.1" stays 1/10 instead of the binary expansion
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class StreamInstance:
    values: tuple[Fraction, ...]

    def __init__(self, values: Iterable):
        vals = tuple(as_fraction(v) for v in values)
        if not vals:
            raise ValidationError("a stream needs at least one item")
        if any(v < 0 for v in vals):
            raise ValidationError("item values must be nonnegative")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class BufferView:
    """Slot contents at one time step; ``None`` marks an empty slot."""

    time: int
    slot0: Optional[Fraction]
    slot1: Optional[Fraction]

    def slot(self, position: Position) -> Optional[Fraction]:
        return self.slot0 if position is Position.L0 else self.slot1


class Policy(Protocol):
    """Online decision rule.

    ``decide`` sees only the observer's current position and the value it
    processed during the step just completed, and returns the position for
    the next step.  It must be a pure function of those two arguments.
    """

    def decide(self, position: Position, observed: Fraction) -> Position: ...


@dataclass(frozen=True)
class Step:
    time: int
    position: Position
    item: Optional[int]  # 0-based index of the observed item, None if the slot is empty
    observed: Optional[Fraction]
    payoff: Fraction


@dataclass(frozen=True)
class SimulationTrace:
    steps: tuple[Step, ...]
    total_payoff: Fraction
    observation_counts: tuple[int, ...]
    horizon: Horizon


def _slot_item(n: int, t: int, position: Position) -> Optional[int]:
    """Index of the item sitting in ``position`` at step ``t``, if any."""
    i = t - 1 if position is Position.L0 else t - 2
    return i if 0 <= i < n else None


def buffer_at(stream: StreamInstance, t: int) -> BufferView:
    n = len(stream)
    if not 1 <= t <= n + 1:
        raise IndexError(f"step {t} outside 1..{n + 1}")
    i0 = _slot_item(n, t, Position.L0)
    i1 = _slot_item(n, t, Position.L1)
    return BufferView(
        time=t,
        slot0=None if i0 is None else stream.values[i0],
        slot1=None if i1 is None else stream.values[i1],
    )


def simulate(
    stream: StreamInstance,
    policy: Policy,
    horizon: Horizon = Horizon.N_PLUS_ONE_STEPS,
) -> SimulationTrace:
    """Run ``policy`` over ``stream`` and record every step.

    The observer starts at ``L0``.  Before each later step the policy picks
    the next position from the previous position and the value observed
    there; the new position and the item shift take effect together.
    """
    values = stream.values
    n = len(values)
    counts = [0] * n
    steps = []
    total = Fraction(0)
    position = Position.L0
    last_observed: Optional[Fraction] = None
    for t in range(1, horizon.steps(n) + 1):
        if t > 1 and last_observed is not None:
            position = Position(policy.decide(position, last_observed))
        item = _slot_item(n, t, position)
        if item is None:
            observed = None
            payoff = Fraction(0)
        else:
            observed = payoff = values[item]
            counts[item] += 1
            total += payoff
        steps.append(Step(t, position, item, observed, payoff))
        last_observed = observed
    return SimulationTrace(tuple(steps), total, tuple(counts), horizon)


def offline_payoff(stream: StreamInstance, horizon: Horizon = Horizon.N_PLUS_ONE_STEPS) -> Fraction:
    """Payoff of the clairvoyant schedule: the larger slot at every step."""
    v = stream.values
    total = v[0] + sum((max(a, b) for a, b in zip(v, v[1:])), Fraction(0))
    if horizon is Horizon.N_PLUS_ONE_STEPS:
        total += v[-1]
    return total


def offline_dp(
    stream: StreamInstance,
    horizon: Horizon = Horizon.N_PLUS_ONE_STEPS,
) -> tuple[Fraction, tuple[Position, ...]]:
    """Best schedule by dynamic programming over (step, position).

    Unlike :func:`offline_payoff` this does not assume the greedy
    max-of-two rule; it only uses the transition structure (start at
    ``L0``, free movement in either direction each step).  Ties go to ``L0``.
    """
    n = len(stream)
    total_steps = horizon.steps(n)

    def gain(t: int, pos: Position) -> Fraction:
        i = _slot_item(n, t, pos)
        return Fraction(0) if i is None else stream.values[i]

    # best[pos] = best payoff of a schedule over steps 1..t ending at pos
    best = {Position.L0: gain(1, Position.L0), Position.L1: None}
    back: list[dict[Position, Position]] = []
    for t in range(2, total_steps + 1):
        nxt = {}
        arg = {}
        for pos in Position:
            candidates = [(best[p], p) for p in Position if best[p] is not None]
            value, prev = max(candidates, key=lambda c: (c[0], -c[1]))
            nxt[pos] = value + gain(t, pos)
            arg[pos] = prev
        best = nxt
        back.append(arg)
    finish = max((p for p in Position if best[p] is not None), key=lambda p: (best[p], -p))
    schedule = [finish]
    for arg in reversed(back):
        schedule.append(arg[schedule[-1]])
    schedule.reverse()
    return best[finish], tuple(schedule)


def schedule_payoff(stream: StreamInstance, schedule: Sequence[Position]) -> Fraction:
    """Total collected by following ``schedule`` (one position per step)."""
    n = len(stream)
    total = Fraction(0)
    for t, pos in enumerate(schedule, start=1):
        i = _slot_item(n, t, pos)
        if i is not None:
            total += stream.values[i]
    return total
