"""Stream models, seeded samplers, adversarial sequences and c-density tools."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import StreamInstance, as_fraction
from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class RandomPermutation:
    """Uniformly random ordering of a fixed set of labeled items."""

    values: tuple[Fraction, ...]

    def __init__(self, values: Iterable):
        vals = tuple(sorted(as_fraction(v) for v in values))
        if not vals:
            raise ValidationError("permutation model needs at least one value")
        if vals[0] < 0:
            raise ValidationError("values must be nonnegative")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class IID:
    """``n`` independent draws from ``values`` with probabilities ``probs``."""

    values: tuple[Fraction, ...]
    probs: tuple[Fraction, ...]
    n: int

    def __init__(self, values: Iterable, probs: Iterable, n: int):
        vals = tuple(as_fraction(v) for v in values)
        ps = tuple(as_fraction(p) for p in probs)
        if not vals or len(vals) != len(ps):
            raise ValidationError("values and probs must be nonempty and equally long")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError("values must be strictly increasing")
        if vals[0] < 0:
            raise ValidationError("values must be nonnegative")
        if any(p < 0 for p in ps):
            raise ValidationError("probabilities must be nonnegative")
        if sum(ps) != 1:
            raise ValidationError(f"probabilities sum to {sum(ps)}, not 1")
        if n < 1:
            raise ValidationError("stream length must be at least 1")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", ps)
        object.__setattr__(self, "n", int(n))

    @property
    def k(self) -> int:
        return len(self.values)

    @classmethod
    def uniform(cls, values: Iterable, n: int) -> IID:
        vals = list(values)
        return cls(vals, [Fraction(1, len(vals))] * len(vals), n)


StreamModel = RandomPermutation | IID


def derive_seed(base_seed: int, index: int) -> int:
    """Per-trial seed as a pure function of ``(base_seed, index)``.

    Both integers are fed to NumPy's ``SeedSequence`` hash, and the first
    64-bit word of its output is the derived seed.  The result does not
    depend on which worker runs the trial or in what order.
    """
    ss = np.random.SeedSequence([int(base_seed) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & (2**64 - 1))


def permutation_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    # Generator.permutation is an unbiased Fisher-Yates shuffle
    return rng.permutation(n)


class _IntegerSampler:
    """Exact categorical sampling from rational probabilities.

    Probabilities are put over a common denominator ``D``; a uniform
    integer in ``[0, D)`` is mapped to its category through the cumulative
    integer weights, so no floating-point rounding enters the draw.
    """

    def __init__(self, probs: Sequence[Fraction]):
        denom = math.lcm(*(p.denominator for p in probs))
        weights = [p.numerator * (denom // p.denominator) for p in probs]
        self.exact = denom < 2**62
        if self.exact:
            self.denom = denom
            self.edges = np.cumsum(np.array(weights, dtype=np.int64))
        else:
            self.float_probs = np.array([float(p) for p in probs])
            self.float_probs /= self.float_probs.sum()

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.exact:
            u = rng.integers(0, self.denom, size=size, dtype=np.int64)
            return np.searchsorted(self.edges, u, side="right")
        return rng.choice(len(self.float_probs), size=size, p=self.float_probs)


def iid_indices(model: IID, rng: np.random.Generator) -> np.ndarray:
    return _IntegerSampler(model.probs).draw(rng, model.n)


def sample_permutation(values: Iterable, seed: int) -> StreamInstance:
    vals = [as_fraction(v) for v in values]
    if not vals:
        raise ValidationError("cannot permute an empty value set")
    order = permutation_indices(len(vals), _rng(seed))
    return StreamInstance(vals[i] for i in order)


def sample_iid(model: IID, seed: int) -> StreamInstance:
    idx = iid_indices(model, _rng(seed))
    return StreamInstance(model.values[i] for i in idx)


def alternating_adversary(lo, hi, n: int) -> StreamInstance:
    """``lo, hi, lo, hi, ...`` of length ``n``.

    A threshold at or below ``lo`` persists on every cheap item and misses
    every expensive one; the offline schedule does the opposite.
    """
    lo, hi = as_fraction(lo), as_fraction(hi)
    if lo >= hi:
        raise DomainError("need lo < hi")
    if n < 2:
        raise DomainError("need n >= 2")
    return StreamInstance(lo if i % 2 == 0 else hi for i in range(n))


@dataclass(frozen=True)
class DensityReport:
    c: Fraction
    top_count: int
    lhs: Fraction
    rhs: Fraction
    residual: Fraction

    @property
    def exact(self) -> bool:
        return self.residual == 0


def density_sides(values: Iterable, c) -> tuple[Fraction, Fraction]:
    """Both sides of the c-density condition at a given ``c``.

    Left side is ``1 - c``; right side is the weight fraction carried by
    the ``floor(c*t)`` largest values.
    """
    vals = sorted((as_fraction(v) for v in values), reverse=True)
    c = as_fraction(c)
    m = math.floor(c * len(vals))
    return 1 - c, sum(vals[:m], Fraction(0)) / sum(vals, Fraction(0))


def measure_density(values: Iterable) -> DensityReport:
    """Find the ``c`` in ``(0, 1/2]`` where the two density sides meet.

    For each top count ``m`` the right side is constant on
    ``m/t <= c < (m+1)/t``, so the best ``c`` on that piece is ``1 - W_m``
    clamped into the piece.  The piece with the smallest residual wins and
    the residual is reported as is; exact c-density means residual zero.
    """
    vals = sorted((as_fraction(v) for v in values), reverse=True)
    t = len(vals)
    if t < 2:
        raise DomainError("need at least two values")
    total = sum(vals, Fraction(0))
    if total <= 0:
        raise DomainError("total weight must be positive")
    half = Fraction(1, 2)
    best = None
    top = Fraction(0)
    for m in range(1, t // 2 + 1):
        top += vals[m - 1]
        weight = top / total
        lo = Fraction(m, t)
        hi = Fraction(m + 1, t)
        target = 1 - weight
        if target < lo:
            c = lo
        elif target < hi and target <= half:
            c = target
        elif hi > half:
            c = half
        else:
            # the piece is open on the right; its supremum belongs to m+1
            continue
        report = DensityReport(c, m, 1 - c, weight, (1 - c) - weight)
        if best is None or abs(report.residual) < abs(best.residual):
            best = report
    return best


def synth_c_dense(c, t: int) -> list[Fraction]:
    """``t`` values that are exactly c-dense.

    ``floor(c*t)`` heavy copies of ``h`` and the rest equal to 1, with ``h``
    solved exactly so the heavy items carry a ``1 - c`` share of the weight.
    """
    c = as_fraction(c)
    if not 0 < c <= Fraction(1, 2):
        raise DomainError("c must lie in (0, 1/2]")
    m = math.floor(c * t)
    if m < 1:
        raise DomainError(f"floor(c*t) = {m}; need at least one heavy value")
    heavy = (1 - c) * (t - m) / (c * m)
    if heavy < 1:
        raise DomainError(f"c={c} with t={t} needs a heavy value {heavy} below the light value 1")
    return [Fraction(1)] * (t - m) + [heavy] * m


def read_values(path: str | Path) -> list[Fraction]:
    """One rational per line (``p/q``, integer or decimal); blank lines and ``#`` comments skipped."""
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(Fraction(line))
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: not a rational: {raw!r}") from None
    return out


def format_rational(x: Fraction) -> str:
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def write_values(path: str | Path, values: Iterable) -> None:
    Path(path).write_text("".join(format_rational(v) + "\n" for v in values))
