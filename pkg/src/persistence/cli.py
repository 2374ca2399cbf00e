"""Command-line front end.

Subcommands: ``simulate``, ``exact``, ``formula``, ``sweep``, ``verify``.
Exit codes: 0 success, 1 usage error, 2 enumeration guard tripped,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Iterable, Optional

from . import analytics
from .engine import Horizon, StreamInstance, offline_payoff, simulate
from .errors import DomainError, EnumerationGuardError, ValidationError
from .generators import (
    IID,
    RandomPermutation,
    alternating_adversary,
    format_rational,
    measure_density,
    read_values,
    synth_c_dense,
)
from .oracle import OFFLINE, enumerate_iid_expectation, enumerate_permutation_expectation, monte_carlo
from .policies import NaivePolicy, ThresholdPolicy, median_threshold, rank_threshold
from .verify import run_checks

EXIT_USAGE = 1
EXIT_GUARD = 2
EXIT_VERIFY = 3

SIMULATE_FIELDS = [
    "command", "model", "policy", "threshold", "horizon", "n", "steps", "trials", "seed",
    "mean_total", "stderr_total", "mean_relative", "stderr_relative",
    "forecast_total", "forecast_relative",
]
EXACT_FIELDS = [
    "command", "model", "policy", "threshold", "horizon", "n", "steps", "outcomes",
    "expected_total", "expected_relative", "forecast_total",
]
DENSE_FIELDS = [
    "family", "c", "t", "feasible", "top_count", "residual", "rho", "alg_relative",
    "opt_upper_bound", "opt_relative", "ratio_bound", "ratio_exact_opt", "ratio_iid", "error",
]
ADVERSARIAL_FIELDS = [
    "family", "lo", "M", "n", "horizon", "naive_over_opt", "naive_predicted",
    "threshold", "threshold_over_opt", "threshold_predicted",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    return x


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _c_grid(text: str) -> list[Fraction]:
    """``0.05,0.1`` or ``start:stop:step`` (stop inclusive)."""
    if ":" in text:
        start, stop, step = (Fraction(p) for p in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("step must be positive")
        out = []
        c = start
        while c <= stop:
            out.append(c)
            c += step
        return out
    return [Fraction(p) for p in text.split(",") if p.strip()]


def _int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["perm", "iid", "stream"], required=True)
    p.add_argument("--values", metavar="FILE", help="values (perm), support (iid) or stream, one rational per line")
    p.add_argument("--probs", metavar="FILE", help="iid probabilities, one rational per line")
    p.add_argument("--n", type=int, help="stream length for the iid model")
    p.add_argument("--policy", choices=["threshold", "rank", "median", "naive", "offline"], required=True)
    p.add_argument("--threshold", type=_rational, help="threshold value for --policy threshold")
    p.add_argument("--rank", type=int, help="k for --policy rank: threshold is the k-th largest value")
    p.add_argument("--horizon", choices=["n", "n+1"], default=None)


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="persistence", description="Two-slot stream buffer simulation and exact analytics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="Monte Carlo (perm/iid) or a single run (stream)")
    _add_model_args(p)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    _add_output_args(p)

    p = sub.add_parser("exact", help="exhaustive expectation over all outcomes")
    _add_model_args(p)
    _add_output_args(p)

    p = sub.add_parser("formula", help="closed-form forecast for a model and threshold")
    _add_model_args(p)
    _add_output_args(p)

    p = sub.add_parser("sweep", help="c-dense spectrum or adversarial ratios")
    p.add_argument("--family", choices=["dense", "adversarial"], default="dense")
    p.add_argument("--c-grid", type=_c_grid, default="0.05:0.5:0.05")
    p.add_argument("--sizes", type=_int_list, default=None,
                   help="set sizes t (dense, default 1000) or M values (adversarial, default 1000)")
    p.add_argument("--n", type=int, default=10_000, help="stream length for the adversarial family")
    _add_output_args(p)

    p = sub.add_parser("verify", help="run the self-check suite")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--out", metavar="FILE")
    return parser


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------


def _load_model(args):
    if not args.values:
        raise UsageError("--values FILE is required")
    values = read_values(args.values)
    if args.model == "stream":
        return StreamInstance(values)
    if args.model == "perm":
        return RandomPermutation(values)
    if not args.probs:
        raise UsageError("--probs FILE is required for the iid model")
    if not args.n:
        raise UsageError("--n is required for the iid model")
    return IID(values, read_values(args.probs), args.n)


def _model_values(model) -> list[Fraction]:
    return list(model.values)


def _resolve_policy(args, model):
    values = _model_values(model)
    if args.policy == "naive":
        return NaivePolicy(), None
    if args.policy == "offline":
        return OFFLINE, None
    if args.policy == "threshold":
        if args.threshold is None:
            raise UsageError("--policy threshold needs --threshold")
        T = args.threshold
    elif args.policy == "rank":
        if args.rank is None:
            raise UsageError("--policy rank needs --rank")
        T = rank_threshold(values, args.rank)
    else:
        T = median_threshold(values)
    return ThresholdPolicy(T), T


def _default_horizon(args) -> Horizon:
    if args.horizon is not None:
        return Horizon.parse(args.horizon)
    return Horizon.N_STEPS if args.model == "iid" else Horizon.N_PLUS_ONE_STEPS


def _forecast(model, policy, T, horizon: Horizon) -> tuple[Optional[Fraction], Optional[Fraction]]:
    """(exact total, asymptotic per-step payoff) where a closed form exists."""
    if isinstance(model, RandomPermutation):
        vals = list(model.values)
        n = len(vals)
        A = sum(vals, Fraction(0))
        if policy is OFFLINE:
            if n < 2:
                return None, None
            return analytics.perm_opt_total(vals, horizon), analytics.perm_opt_relative(vals)
        k = 0 if T is None else sum(1 for v in vals if v >= T)
        if k == 0:
            return A, A / n
        total = None
        if horizon is Horizon.N_PLUS_ONE_STEPS and len(set(vals)) == n:
            total = analytics.perm_threshold_total(vals, k)
        L_k = sum(vals[n - k :], Fraction(0))
        return total, analytics.perm_threshold_relative_asymptotic(A, L_k, n, Fraction(k, n))
    if isinstance(model, IID):
        vals, probs = model.values, model.probs
        if policy is OFFLINE:
            return analytics.iid_opt_total(vals, probs, model.n, horizon), analytics.iid_opt_relative(vals, probs)
        r = model.k if T is None else next((i for i, v in enumerate(vals) if v >= T), model.k)
        total = analytics.iid_threshold_total(vals, probs, r, model.n) if horizon is Horizon.N_STEPS else None
        return total, analytics.iid_threshold_relative(vals, probs, r)
    return None, None


def _policy_fields(args, T) -> dict:
    return {"policy": args.policy, "threshold": _fmt(T)}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> list[dict]:
    model = _load_model(args)
    policy, T = _resolve_policy(args, model)
    horizon = _default_horizon(args)
    n = len(model) if isinstance(model, StreamInstance) else model.n
    steps = horizon.steps(n)
    record = dict.fromkeys(SIMULATE_FIELDS)
    record.update(command="simulate", model=args.model, horizon=horizon.value, n=n, steps=steps,
                  **_policy_fields(args, T))

    if isinstance(model, StreamInstance):
        total = offline_payoff(model, horizon) if policy is OFFLINE else simulate(model, policy, horizon).total_payoff
        record.update(trials=0, mean_total=_fmt(total), mean_relative=_fmt(total / steps))
        return [record]

    if args.trials < 2:
        raise UsageError("--trials must be at least 2 for the perm and iid models")
    if args.seed is None:
        raise UsageError("--seed is required whenever --trials > 0")
    est = monte_carlo(model, policy, args.trials, args.seed, horizon, workers=args.workers)
    total, relative = _forecast(model, policy, T, horizon)
    record.update(
        trials=args.trials,
        seed=args.seed,
        mean_total=_fmt(est.mean),
        stderr_total=est.standard_error,
        mean_relative=_fmt(est.mean / steps),
        stderr_relative=est.standard_error / steps,
        forecast_total=_fmt(total),
        forecast_relative=_fmt(relative),
    )
    return [record]


def cmd_exact(args) -> list[dict]:
    model = _load_model(args)
    policy, T = _resolve_policy(args, model)
    horizon = _default_horizon(args)
    if isinstance(model, RandomPermutation):
        result = enumerate_permutation_expectation(model.values, policy, horizon)
    elif isinstance(model, IID):
        result = enumerate_iid_expectation(model, policy, horizon)
    else:
        raise UsageError("exact needs --model perm or --model iid")
    n = model.n
    steps = horizon.steps(n)
    total, _ = _forecast(model, policy, T, horizon)
    record = dict.fromkeys(EXACT_FIELDS)
    record.update(
        command="exact", model=args.model, horizon=horizon.value, n=n, steps=steps,
        outcomes=result.outcomes_enumerated,
        expected_total=_fmt(result.value),
        expected_relative=_fmt(result.value / steps),
        forecast_total=_fmt(total),
        **_policy_fields(args, T),
    )
    return [record]


def cmd_formula(args) -> list[dict]:
    model = _load_model(args)
    policy, T = _resolve_policy(args, model)
    if isinstance(model, RandomPermutation):
        vals = list(model.values)
        if policy is OFFLINE or T is None:
            raise UsageError("formula needs a threshold-type policy (threshold, rank or median)")
        k = sum(1 for v in vals if v >= T)
        if k == 0:
            raise UsageError("threshold exceeds every value; the policy is naive")
        forecast = analytics.permutation_forecast(vals, k)
    elif isinstance(model, IID):
        if policy is OFFLINE or T is None:
            raise UsageError("formula needs a threshold-type policy (threshold, rank or median)")
        r = next((i for i, v in enumerate(model.values) if v >= T), model.k)
        forecast = analytics.iid_forecast(model.values, model.probs, r, model.n)
    else:
        raise UsageError("formula needs --model perm or --model iid")
    record = {"command": "formula", "model": args.model, **_policy_fields(args, T)}
    record.update(forecast.to_record())
    return [record]


def _dense_row(c: Fraction, t: int) -> dict:
    row = dict.fromkeys(DENSE_FIELDS)
    row.update(family="dense", c=_fmt(c), t=t)
    try:
        vals = synth_c_dense(c, t)
    except DomainError as exc:
        row.update(feasible=False, error=str(exc))
        return row
    report = measure_density(vals)
    m = report.top_count
    A = sum(vals, Fraction(0))
    L = sum(sorted(vals)[t - m :], Fraction(0))
    alg = analytics.perm_threshold_relative_asymptotic(A, L, t, c)
    support = sorted(set(vals))
    probs = [Fraction(vals.count(v), t) for v in support]
    r = support.index(sorted(vals)[t - m])
    iid_ratio = analytics.iid_threshold_relative(support, probs, r) / analytics.iid_opt_relative(support, probs)
    opt = analytics.perm_opt_relative(vals)
    row.update(
        feasible=True,
        top_count=m,
        residual=_fmt(report.residual),
        rho=_fmt(analytics.rho(c)),
        alg_relative=_fmt(alg),
        opt_upper_bound=_fmt(analytics.perm_opt_upper_bound(A, L, t, c)),
        opt_relative=_fmt(opt),
        ratio_bound=_fmt(analytics.competitive_bound_perm(A, L, c)),
        ratio_exact_opt=_fmt(alg / opt),
        ratio_iid=_fmt(iid_ratio),
    )
    return row


def _adversarial_row(M: int, n: int) -> dict:
    lo = Fraction(1)
    stream = alternating_adversary(lo, M, n)
    horizon = Horizon.N_STEPS
    opt = offline_payoff(stream, horizon)
    naive = simulate(stream, NaivePolicy(), horizon).total_payoff
    low = simulate(stream, ThresholdPolicy(lo), horizon).total_payoff
    row = dict.fromkeys(ADVERSARIAL_FIELDS)
    row.update(
        family="adversarial", lo=_fmt(lo), M=M, n=n, horizon=horizon.value,
        naive_over_opt=_fmt(naive / opt),
        naive_predicted=_fmt((1 + Fraction(M)) / (2 * M)),
        threshold=_fmt(lo),
        threshold_over_opt=_fmt(low / opt),
        threshold_predicted=_fmt(lo / M),
    )
    return row


def cmd_sweep(args) -> list[dict]:
    if args.family == "dense":
        sizes = args.sizes or [1000]
        for c in args.c_grid:
            if not 0 < c <= Fraction(1, 2):
                raise UsageError(f"c={c} outside (0, 1/2]")
        return [_dense_row(c, t) for t in sizes for c in args.c_grid]
    sizes = args.sizes or [1000]
    if any(M <= 1 for M in sizes):
        raise UsageError("adversarial M values must exceed 1")
    return [_adversarial_row(M, args.n) for M in sizes]


def cmd_verify(args) -> tuple[list[dict], bool]:
    results = run_checks()
    records = [{"check": r.name, "claim": r.claim, "passed": r.passed, "detail": r.detail} for r in results]
    return records, all(r.passed for r in results)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(json.dumps(r) + "\n" for r in records)
    buf = io.StringIO()
    if records:
        writer = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow({k: "" if v is None else v for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Iterable[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(None if argv is None else list(argv))
    try:
        if args.command == "verify":
            records, ok = cmd_verify(args)
            if args.format == "text":
                lines = [f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}: {r['claim']} ({r['detail']})"
                         for r in records]
                _emit("\n".join(lines) + "\n", args.out)
            else:
                _emit(render(records, args.format), args.out)
            return 0 if ok else EXIT_VERIFY
        handler = {"simulate": cmd_simulate, "exact": cmd_exact, "formula": cmd_formula, "sweep": cmd_sweep}
        records = handler[args.command](args)
    except EnumerationGuardError as exc:
        print(f"persistence: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, ValidationError, DomainError, OSError) as exc:
        print(f"persistence: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(render(records, args.format), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
