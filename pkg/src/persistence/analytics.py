"""Closed-form expected payoffs, binomial identities and competitive ratios.

Everything finite is computed in exact rationals with arbitrary-precision
binomials.  Horizon conventions differ by model: random-permutation totals
count every item in full (``Horizon.N_PLUS_ONE_STEPS``) while iid totals
sum the per-step payoffs of steps ``1..n`` (``Horizon.N_STEPS``).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction
from math import comb
from typing import Iterable, Optional, Sequence

from .engine import Horizon, as_fraction
from .errors import DomainError, ValidationError

HALF = Fraction(1, 2)


def _alternating_binomial_sum(top: int, bottom: int, terms: int) -> int:
    """``sum_{s<terms} (-1)^s C(top-s, bottom-s)`` via the term ratio."""
    total = 0
    term = comb(top, bottom)
    for s in range(terms):
        if bottom - s < 0:
            break
        total += -term if s % 2 else term
        # C(top-s-1, bottom-s-1) = C(top-s, bottom-s) * (bottom-s) / (top-s)
        if top - s > 0:
            term = term * (bottom - s) // (top - s)
        else:
            term = 0
    return total


def f_tnk(t: int, n: int, k: int) -> Fraction:
    """Probability that an above-threshold item at position ``t`` is observed.

    ``n`` items in uniformly random order, ``k`` of them at or above the
    threshold.
    """
    if not (1 <= t <= n and 1 <= k <= n):
        raise DomainError(f"f_tnk needs 1 <= t <= n and 1 <= k <= n, got t={t}, n={n}, k={k}")
    s_max = min(t, k)
    num = sum((-1) ** s * comb(n - 1 - s, k - 1 - s) for s in range(s_max))
    return Fraction(num, comb(n - 1, k - 1))


def identity_sum_f_a(n: int, k: int) -> tuple[Fraction, Fraction]:
    """Sum of ``f_tnk`` over all positions, and its single-sum closed form."""
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= n")
    lhs = sum((f_tnk(t, n, k) for t in range(1, n + 1)), Fraction(0))
    rhs = n * Fraction(
        sum((-1) ** s * comb(n - s, k - 1 - s) for s in range(k)),
        comb(n, k - 1),
    )
    return lhs, rhs


def identity_sum_f_b(n: int, k: int) -> tuple[Fraction, Fraction]:
    """Summed observation probability of a below-threshold item, two ways.

    The left side uses the convention that ``f`` at position 0 is zero.
    """
    if not 1 <= k <= n - 1:
        raise DomainError("need 1 <= k <= n-1")

    def f_or_zero(t: int) -> Fraction:
        return Fraction(0) if t == 0 else f_tnk(t, n - 1, k)

    lhs = sum((1 - Fraction(k, n - 1) * f_or_zero(t - 1) for t in range(1, n + 1)), Fraction(0))
    rhs = n - n * Fraction(
        sum((-1) ** s * comb(n - 1 - s, k - 1 - s) for s in range(k)),
        comb(n, k),
    )
    return lhs, rhs


def asymptotic_coefficient(n: int, k: int) -> Fraction:
    """Normalized alternating sum whose limit is ``1/(1+c)`` when ``k/n -> c``."""
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= n")
    return Fraction(_alternating_binomial_sum(n, k - 1, k), comb(n, k - 1))


def _sorted_values(values: Iterable) -> list[Fraction]:
    vals = sorted(as_fraction(v) for v in values)
    if vals and vals[0] < 0:
        raise ValidationError("values must be nonnegative")
    return vals


def perm_opt_relative(values: Iterable) -> Fraction:
    """Expected offline payoff of one interior step under a random order.

    Equals ``sum_i i * a_i / C(n, 2)`` over the ascending values.
    """
    vals = _sorted_values(values)
    n = len(vals)
    if n < 2:
        raise DomainError("need at least two values")
    return sum((i * a for i, a in enumerate(vals)), Fraction(0)) / comb(n, 2)


def perm_opt_total(values: Iterable, horizon: Horizon = Horizon.N_PLUS_ONE_STEPS) -> Fraction:
    """Expected offline total over a random order, boundary steps included.

    Step 1 pays the first item and the optional step ``n+1`` pays the last
    one; each is ``A/n`` in expectation.
    """
    vals = _sorted_values(values)
    n = len(vals)
    if n < 2:
        raise DomainError("need at least two values")
    mean = sum(vals, Fraction(0)) / n
    edges = 2 if horizon is Horizon.N_PLUS_ONE_STEPS else 1
    return (n - 1) * perm_opt_relative(vals) + edges * mean


def perm_threshold_coefficients(n: int, k: int) -> tuple[Fraction, Fraction]:
    """Multipliers of the below-threshold and above-threshold value sums."""
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= n")
    below = 1 - Fraction(_alternating_binomial_sum(n - 1, k - 1, k), comb(n, k))
    above = 2 * asymptotic_coefficient(n, k)
    return below, above


def perm_threshold_total(values: Iterable, k: int) -> Fraction:
    """Expected total of the threshold policy over a random order.

    The threshold is the ``k``-th largest value; each item is counted in
    full, which is the ``n+1``-step horizon.
    """
    vals = _sorted_values(values)
    n = len(vals)
    if len(set(vals)) != n:
        raise ValidationError("random-permutation analysis needs distinct values")
    below, above = perm_threshold_coefficients(n, k)
    return below * sum(vals[: n - k], Fraction(0)) + above * sum(vals[n - k :], Fraction(0))


def perm_threshold_relative_asymptotic(A, L_k, n: int, c) -> Fraction:
    """Limit per-step payoff ``(A + L_k) / ((1+c) n)``."""
    A, L_k, c = as_fraction(A), as_fraction(L_k), as_fraction(c)
    if not 0 < c <= 1:
        raise DomainError("c must lie in (0, 1]")
    if L_k > A:
        raise DomainError("top-k sum cannot exceed the total")
    return (A + L_k) / ((1 + c) * n)


def perm_opt_upper_bound(A, L_k, n: int, c) -> Fraction:
    """``(2/n)((1-c)A + c L_k)``, the upper estimate of the offline per-step payoff."""
    A, L_k, c = as_fraction(A), as_fraction(L_k), as_fraction(c)
    return Fraction(2, n) * ((1 - c) * A + c * L_k)


def _iid_parts(values: Sequence, probs: Sequence, r: Optional[int] = None):
    vals = [as_fraction(v) for v in values]
    ps = [as_fraction(p) for p in probs]
    if not vals or len(vals) != len(ps):
        raise ValidationError("values and probs must be nonempty and equally long")
    if sum(ps) != 1 or any(p < 0 for p in ps):
        raise ValidationError("probs must be a probability vector")
    if r is None:
        return vals, ps
    # r == k means no value reaches the threshold (never persist)
    if not 0 <= r <= len(vals):
        raise DomainError(f"threshold index {r} outside 0..{len(vals)}")
    P = sum(ps[r:], Fraction(0))
    avg = sum((p * a for p, a in zip(ps, vals)), Fraction(0))
    avg_plus = sum((p * a for p, a in zip(ps[r:], vals[r:])), Fraction(0))
    return P, avg, avg_plus


def iid_opt_relative(values: Sequence, probs: Sequence) -> Fraction:
    """Expected maximum of two independent draws."""
    vals, ps = _iid_parts(values, probs)
    k = len(vals)
    first = sum((p * a for p, a in zip(ps, vals)), Fraction(0))
    second = sum(
        (ps[i] * ps[j] * (vals[j] - vals[i]) for i in range(k) for j in range(i + 1, k)),
        Fraction(0),
    )
    return first + second


def iid_opt_total(values: Sequence, probs: Sequence, n: int, horizon: Horizon = Horizon.N_STEPS) -> Fraction:
    vals, ps = _iid_parts(values, probs)
    avg = sum((p * a for p, a in zip(ps, vals)), Fraction(0))
    total = avg + (n - 1) * iid_opt_relative(vals, ps)
    if horizon is Horizon.N_PLUS_ONE_STEPS:
        total += avg
    return total


def iid_threshold_relative(values: Sequence, probs: Sequence, r: int) -> Fraction:
    """Limit per-step payoff of the threshold ``a_r``: ``(Avg + Avg+) / (1 + P)``."""
    P, avg, avg_plus = _iid_parts(values, probs, r)
    return (avg + avg_plus) / (1 + P)


def iid_threshold_total(values: Sequence, probs: Sequence, r: int, n: int) -> Fraction:
    """Exact expected payoff of the threshold ``a_r`` over steps ``1..n``."""
    if n < 1:
        raise DomainError("need n >= 1")
    P, avg, avg_plus = _iid_parts(values, probs, r)
    d = 1 + P
    coef_avg = Fraction(n) / d + (P + (-P) ** (n + 1)) / d**2
    coef_plus = Fraction(n) / d + ((-P) ** n - 1) / d**2
    return coef_avg * avg + coef_plus * avg_plus


def q_closed(i: int, P) -> Fraction:
    """Probability of being at ``L0`` at step ``i+1``: ``(1 - (-P)^(i+1)) / (1 + P)``."""
    P = as_fraction(P)
    return (1 - (-P) ** (i + 1)) / (1 + P)


def q_recurrence(i: int, P) -> Fraction:
    """Iterate ``q_{j+1} = 1 - P q_j`` from ``q_0 = 1``."""
    P = as_fraction(P)
    q = Fraction(1)
    for _ in range(i):
        q = 1 - P * q
    return q


def q_printed(i: int, P) -> Fraction:
    """``(1 - (-1)^i P^i) / (1 + P)`` as printed; this is ``q_closed(i-1, P)``.

    Kept for comparison only: it gives 0 at ``i = 0`` instead of 1.
    """
    P = as_fraction(P)
    return (1 - (-1) ** i * P**i) / (1 + P)


def q_probability(i: int, P) -> Fraction:
    if i < 0:
        raise DomainError("need i >= 0")
    P = as_fraction(P)
    if not 0 <= P <= 1:
        raise DomainError("P must lie in [0, 1]")
    closed = q_closed(i, P)
    if closed != q_recurrence(i, P):
        raise ArithmeticError(f"closed form and recurrence disagree at i={i}, P={P}")
    return closed


def rho(c) -> Fraction:
    """Competitive ratio ``(1/2)(2-c) / ((1-c)(1+c)^2)`` for c-dense inputs."""
    c = as_fraction(c)
    if not 0 < c <= HALF:
        raise DomainError("c must lie in (0, 1/2]")
    return HALF * (2 - c) / ((1 - c) * (1 + c) ** 2)


def competitive_bound_perm(A, L_k, c) -> Fraction:
    """Lower bound on ALG/OPT from the asymptotic ALG and the OPT upper estimate."""
    A, L_k, c = as_fraction(A), as_fraction(L_k), as_fraction(c)
    if not 0 < c <= HALF:
        raise DomainError("c must lie in (0, 1/2]")
    if A <= 0 or not 0 <= L_k <= A:
        raise DomainError("need A > 0 and 0 <= L_k <= A")
    x = L_k / A
    return HALF / (1 + c) * (1 + x) / ((1 - c) + c * x)


def _render(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (list, tuple)):
        return [_render(v) for v in value]
    return value


class _Record:
    def to_record(self) -> dict:
        """Flat JSON-compatible dict; rationals become ``"p/q"`` strings."""
        return {f.name: _render(getattr(self, f.name)) for f in fields(self)}


@dataclass(frozen=True)
class PermutationForecast(_Record):
    n: int
    k: int
    c: Fraction
    A: Fraction
    A_minus: Fraction
    A_plus: Fraction
    opt_relative: Fraction
    opt_total: Fraction
    opt_upper_bound: Fraction
    alg_total_exact: Optional[Fraction]
    alg_relative_asymptotic: Fraction
    horizon: str = Horizon.N_PLUS_ONE_STEPS.value


def permutation_forecast(values: Iterable, k: int) -> PermutationForecast:
    """All closed-form quantities for threshold = ``k``-th largest value.

    ``alg_total_exact`` is ``None`` when the values are not distinct.
    """
    vals = _sorted_values(values)
    n = len(vals)
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside 1..{n}")
    A = sum(vals, Fraction(0))
    A_plus = sum(vals[n - k :], Fraction(0))
    c = Fraction(k, n)
    exact = perm_threshold_total(vals, k) if len(set(vals)) == n else None
    return PermutationForecast(
        n=n,
        k=k,
        c=c,
        A=A,
        A_minus=A - A_plus,
        A_plus=A_plus,
        opt_relative=perm_opt_relative(vals),
        opt_total=perm_opt_total(vals, Horizon.N_PLUS_ONE_STEPS),
        opt_upper_bound=perm_opt_upper_bound(A, A_plus, n, c),
        alg_total_exact=exact,
        alg_relative_asymptotic=perm_threshold_relative_asymptotic(A, A_plus, n, c),
    )


@dataclass(frozen=True)
class IidForecast(_Record):
    k: int
    values: tuple[Fraction, ...]
    probs: tuple[Fraction, ...]
    r: int
    P: Fraction
    Avg: Fraction
    Avg_plus: Fraction
    c: Fraction  # (k - r) / k: share of the support at or above the threshold
    c_basis: str
    opt_relative: Fraction
    alg_relative_asymptotic: Fraction
    n: Optional[int] = None
    alg_total_exact: Optional[Fraction] = None
    opt_total: Optional[Fraction] = None
    horizon: str = Horizon.N_STEPS.value


def iid_forecast(values: Sequence, probs: Sequence, r: int, n: Optional[int] = None) -> IidForecast:
    vals = tuple(as_fraction(v) for v in values)
    ps = tuple(as_fraction(p) for p in probs)
    P, avg, avg_plus = _iid_parts(vals, ps, r)
    k = len(vals)
    return IidForecast(
        k=k,
        values=vals,
        probs=ps,
        r=r,
        P=P,
        Avg=avg,
        Avg_plus=avg_plus,
        c=Fraction(k - r, k),
        c_basis="support",
        opt_relative=iid_opt_relative(vals, ps),
        alg_relative_asymptotic=iid_threshold_relative(vals, ps, r),
        n=n,
        alg_total_exact=None if n is None else iid_threshold_total(vals, ps, r, n),
        opt_total=None if n is None else iid_opt_total(vals, ps, n, Horizon.N_STEPS),
    )
