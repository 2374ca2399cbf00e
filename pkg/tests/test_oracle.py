import itertools
import math
import random
from fractions import Fraction

import pytest

from persistence import (
    EnumerationGuardError,
    Horizon,
    NaivePolicy,
    StreamInstance,
    ThresholdPolicy,
    ValidationError,
    simulate,
)
from persistence.analytics import iid_opt_relative, iid_threshold_total, perm_opt_total, perm_threshold_total
from persistence.generators import IID, RandomPermutation
from persistence.oracle import (
    MAX_PERMUTATION_N,
    OFFLINE,
    enumerate_iid_expectation,
    enumerate_permutation_expectation,
    monte_carlo,
)

F = Fraction
N, N1 = Horizon.N_STEPS, Horizon.N_PLUS_ONE_STEPS
HALF = F(1, 2)


def random_distinct(rng, n):
    return sorted(rng.sample(range(1, 10 * n), n))


class TestPermutationEnumeration:
    def test_threshold_example(self):
        totals = [simulate(StreamInstance(p), ThresholdPolicy(3), N1).total_payoff
                  for p in itertools.permutations([1, 2, 3])]
        assert totals == [9, 7, 9, 8, 8, 7]
        res = enumerate_permutation_expectation([1, 2, 3], ThresholdPolicy(3), N1)
        assert res.value == 8
        assert res.outcomes_enumerated == 6
        assert res.horizon is N1

    def test_offline_example(self):
        assert enumerate_permutation_expectation([1, 2, 3], OFFLINE, N1).value == F(28, 3)

    def test_offline_interior_example(self):
        assert enumerate_permutation_expectation([1, 2, 3], OFFLINE, interior=True).value == F(8, 3)

    def test_naive_sums_the_stream(self):
        assert enumerate_permutation_expectation([F(1, 3), 5], NaivePolicy(), N).value == F(16, 3)

    @pytest.mark.parametrize("n", range(1, 6))
    def test_batch_matches_direct(self, n):
        rng = random.Random(n)
        vals = [F(rng.randint(0, 30), rng.randint(1, 4)) for _ in range(n)]
        subjects = [NaivePolicy(), OFFLINE] + [ThresholdPolicy(v) for v in set(vals)]
        for subject, horizon in itertools.product(subjects, list(Horizon)):
            fast = enumerate_permutation_expectation(vals, subject, horizon)
            slow = enumerate_permutation_expectation(vals, subject, horizon, method="direct")
            assert fast == slow

    def test_guard(self):
        with pytest.raises(EnumerationGuardError, match="n <= 9"):
            enumerate_permutation_expectation(range(MAX_PERMUTATION_N + 1), NaivePolicy())

    def test_formulas_agree_small(self):
        rng = random.Random(0)
        for n in range(2, 7):
            vals = random_distinct(rng, n)
            for k in range(1, n + 1):
                T = vals[n - k]
                assert enumerate_permutation_expectation(vals, ThresholdPolicy(T), N1).value == perm_threshold_total(vals, k)
            assert enumerate_permutation_expectation(vals, OFFLINE, N1).value == perm_opt_total(vals, N1)


class TestIidEnumeration:
    coin = IID([0, 1], [HALF, HALF], 2)

    def test_offline_example(self):
        res = enumerate_iid_expectation(self.coin, OFFLINE, N)
        assert res.value == F(5, 4)
        assert res.outcomes_enumerated == 4

    def test_threshold_example(self):
        assert enumerate_iid_expectation(self.coin, ThresholdPolicy(1), N).value == F(5, 4)

    def test_degenerate(self):
        model = IID([F(7, 2)], [1], 5)
        assert enumerate_iid_expectation(model, NaivePolicy(), N).value == F(35, 2)

    @pytest.mark.parametrize("k, n", [(2, 1), (2, 4), (3, 3), (4, 2)])
    def test_batch_matches_direct(self, k, n):
        rng = random.Random(k * 10 + n)
        vals = random_distinct(rng, k)
        weights = [rng.randint(1, 5) for _ in range(k)]
        probs = [F(w, sum(weights)) for w in weights]
        model = IID(vals, probs, n)
        subjects = [NaivePolicy(), OFFLINE] + [ThresholdPolicy(v) for v in vals]
        for subject, horizon in itertools.product(subjects, list(Horizon)):
            fast = enumerate_iid_expectation(model, subject, horizon)
            slow = enumerate_iid_expectation(model, subject, horizon, method="direct")
            assert fast == slow
        if n >= 2:
            fast = enumerate_iid_expectation(model, OFFLINE, interior=True)
            assert fast == enumerate_iid_expectation(model, OFFLINE, interior=True, method="direct")

    def test_zero_probability_values(self):
        model = IID([1, 2, 3], [HALF, 0, HALF], 3)
        assert enumerate_iid_expectation(model, ThresholdPolicy(2), N).value == iid_threshold_total(
            model.values, model.probs, 1, 3
        )

    def test_formulas_agree_small(self):
        model = IID([1, 4, 6], [F(1, 6), F(1, 3), HALF], 5)
        for r in range(3):
            T = model.values[r]
            assert enumerate_iid_expectation(model, ThresholdPolicy(T), N).value == iid_threshold_total(
                model.values, model.probs, r, 5
            )
        interior = enumerate_iid_expectation(model, OFFLINE, interior=True).value
        assert interior == iid_opt_relative(model.values, model.probs)

    def test_guard(self):
        with pytest.raises(EnumerationGuardError):
            enumerate_iid_expectation(IID.uniform([0, 1], 21), NaivePolicy())


class TestMonteCarlo:
    def test_degenerate_has_no_spread(self):
        est = monte_carlo(IID([3], [1], 50), ThresholdPolicy(3), trials=5, base_seed=1)
        assert est.standard_error == 0
        assert est.mean == simulate(StreamInstance([3] * 50), ThresholdPolicy(3), N).total_payoff

    def test_needs_two_trials(self):
        with pytest.raises(ValidationError):
            monte_carlo(IID.uniform([0, 1], 5), NaivePolicy(), trials=1, base_seed=0)

    def test_same_seed_same_estimate(self):
        model = IID.uniform([0, 1, 2], 300)
        a = monte_carlo(model, ThresholdPolicy(1), 40, base_seed=9)
        b = monte_carlo(model, ThresholdPolicy(1), 40, base_seed=9)
        assert a == b

    def test_worker_count_does_not_matter(self):
        model = RandomPermutation(range(1, 200))
        one = monte_carlo(model, ThresholdPolicy(100), 30, base_seed=3, horizon=N1)
        three = monte_carlo(model, ThresholdPolicy(100), 30, base_seed=3, horizon=N1, workers=3)
        assert one == three

    def test_kernels_agree_with_simulation(self):
        # the vectorized kernels must reproduce the engine on the same draws
        from persistence.generators import derive_seed, sample_iid, sample_permutation
        from persistence.engine import offline_payoff
        from persistence.oracle import _trial_payoff

        iid = IID([1, 2, 7], [F(1, 4), F(1, 4), HALF], 60)
        perm = RandomPermutation([F(i, 3) for i in range(1, 40)])
        for i in range(10):
            seed = derive_seed(77, i)
            for horizon in Horizon:
                s = sample_iid(iid, seed)
                assert _trial_payoff(iid, ThresholdPolicy(2), horizon, seed) == simulate(s, ThresholdPolicy(2), horizon).total_payoff
                assert _trial_payoff(iid, OFFLINE, horizon, seed) == offline_payoff(s, horizon)
                p = sample_permutation(perm.values, seed)
                assert _trial_payoff(perm, ThresholdPolicy(5), horizon, seed) == simulate(p, ThresholdPolicy(5), horizon).total_payoff
                assert _trial_payoff(perm, OFFLINE, horizon, seed) == offline_payoff(p, horizon)

    def test_standard_error_scaling(self):
        model = IID.uniform([0, 1], 200)
        small = monte_carlo(model, ThresholdPolicy(1), 400, base_seed=5)
        large = monte_carlo(model, ThresholdPolicy(1), 800, base_seed=6)
        assert 0.6 < large.standard_error / small.standard_error < 0.82  # about 1/sqrt(2)

    @pytest.mark.parametrize(
        "model, subject, horizon",
        [
            (IID([1, 3], [F(1, 3), F(2, 3)], 6), ThresholdPolicy(3), N),
            (IID([1, 3], [F(1, 3), F(2, 3)], 6), OFFLINE, N),
            (RandomPermutation([1, 2, 5, 9]), ThresholdPolicy(5), N1),
            (RandomPermutation([1, 2, 5, 9]), OFFLINE, N1),
        ],
    )
    def test_converges_to_enumeration(self, model, subject, horizon):
        if isinstance(model, IID):
            exact = enumerate_iid_expectation(model, subject, horizon).value
        else:
            exact = enumerate_permutation_expectation(model.values, subject, horizon).value
        est = monte_carlo(model, subject, 10**5, base_seed=2024, horizon=horizon)
        assert abs(float(est.mean - exact)) <= 4 * est.standard_error

    def test_relative_divides_by_steps(self):
        model = IID.uniform([0, 1], 10)
        tot = monte_carlo(model, NaivePolicy(), 20, base_seed=1, horizon=N1)
        rel = monte_carlo(model, NaivePolicy(), 20, base_seed=1, horizon=N1, relative=True)
        assert rel.steps == 11 and rel.mean == tot.mean / 11
        assert math.isclose(rel.standard_error, tot.standard_error / 11)
