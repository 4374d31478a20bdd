import math

import numpy as np
import pytest

from nnsieve import sieve
from nnsieve.errors import DomainError, InvalidInputError
from nnsieve.network import Theta
from nnsieve.sieve import (
    CONSISTENCY,
    NORMALITY,
    EntropyQuery,
    SieveSchedule,
    check_consistency_rate,
    check_moment_condition,
    check_normality_rate,
    dims,
    is_feasible,
    log_covering_bound,
    predicted_rate,
)

TWO_UNIT = Theta(alpha0=-1.0, alpha=[1.0, -1.0], gamma0=[1.0, 1.0], gamma=[[2.0], [-1.0]])


class TestDims:
    def test_hidden_units_jump_between_200_and_500(self):
        assert dims(CONSISTENCY, 200).r == 3
        assert dims(CONSISTENCY, 500).r == 4

    @pytest.mark.parametrize("schedule", [CONSISTENCY, NORMALITY, SieveSchedule(0.5, 5.0, 0.5)])
    def test_n_one(self, schedule):
        assert dims(schedule, 1).r == 1

    def test_v_at_500(self):
        assert dims(CONSISTENCY, 500).V == pytest.approx(47.28708045015879, rel=1e-14)

    def test_exact_power_not_rounded_down(self):
        assert dims(CONSISTENCY, 10**4).r == 10
        assert dims(NORMALITY, 2**16).r == 4

    def test_parameter_count(self):
        s = dims(SieveSchedule(0.25, 10.0, 0.25, d=3), 16)
        assert s.p == s.r * 5 + 1

    def test_monotone(self):
        prev = None
        for n in range(1, 3000, 7):
            s = dims(NORMALITY, n)
            if prev:
                assert s.r >= prev.r and s.V >= prev.V and s.M >= prev.M
            assert s.V > 4 and s.M > 0
            prev = s

    def test_default_m(self):
        assert dims(CONSISTENCY, 1).M == 10.0
        assert dims(CONSISTENCY, 10**4).M == pytest.approx(100.0)

    def test_rejects_small_v(self):
        with pytest.raises(DomainError):
            SieveSchedule(v_scale=4.0)


class TestFeasible:
    def test_zero_theta(self):
        assert is_feasible(Theta.zeros(3, 2), 3, 5.0, 1.0)

    def test_l1_violation(self):
        th = Theta(0.0, [3.0, -4.0], [0.0, 0.0], [[0.0], [0.0]])
        assert not is_feasible(th, 2, 5.0, 10.0)

    def test_two_unit(self):
        assert is_feasible(TWO_UNIT, 2, 10.0, 3.0)
        assert not is_feasible(TWO_UNIT, 1, 10.0, 3.0)
        assert not is_feasible(TWO_UNIT, 2, 2.9, 3.0)
        assert not is_feasible(TWO_UNIT, 2, 10.0, 2.9)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            r = int(rng.integers(1, 5))
            th = Theta(rng.normal(), rng.normal(size=r), rng.normal(size=r), rng.normal(size=(r, 2)))
            perm = rng.permutation(r)
            pt = Theta(th.alpha0, th.alpha[perm], th.gamma0[perm], th.gamma[perm])
            V, M = rng.uniform(0, 6), rng.uniform(0, 4)
            assert is_feasible(th, r, V, M) == is_feasible(pt, r, V, M)


class TestCoveringBound:
    def test_value(self):
        # 4 * log(64 e), mpmath
        assert log_covering_bound(EntropyQuery(1.0), 1, 8.0, 1) == pytest.approx(20.635532333438687, rel=1e-14)

    def test_monotone_in_epsilon(self):
        for eps in (1e-3, 0.1, 1.0, 5.0):
            assert log_covering_bound(EntropyQuery(eps), 3, 20.0, 2) >= log_covering_bound(EntropyQuery(2 * eps), 3, 20.0, 2)

    def test_increasing_in_v_beyond_8(self):
        vals = [log_covering_bound(EntropyQuery(0.5), 2, V, 1) for V in (8.5, 12.0, 50.0, 400.0)]
        assert vals == sorted(vals)

    def test_nondecreasing_in_r(self):
        vals = [log_covering_bound(EntropyQuery(0.5), r, 20.0, 1) for r in range(1, 10)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            log_covering_bound(EntropyQuery(1.0), 1, 4.0, 1)
        with pytest.raises(InvalidInputError):
            EntropyQuery(0.0)


class TestRateChecks:
    def test_consistency_ratio_value(self):
        assert sieve.consistency_ratio(10, 31.62, 1, 10**4) == pytest.approx(21.348359382118602, rel=1e-12)

    def test_consistency_schedule_decreases_between_1e3_and_1e6(self):
        r = check_consistency_rate(CONSISTENCY, [10**3, 10**6])
        assert r[1] < r[0]

    def test_constant_v_single_unit_vanishes(self):
        sched = SieveSchedule(r_exponent=0.0, v_scale=6.0, v_exponent=0.0)
        grid = [10**k for k in range(2, 12)]
        r = check_consistency_rate(sched, grid)
        assert np.all(np.diff(r) < 0)
        # numerator is constant so the ratio is exactly c / n
        np.testing.assert_allclose(r * np.array(grid), r[0] * grid[0], rtol=1e-12)
        assert np.all(np.diff(check_normality_rate(sched, grid)) < 0)

    def test_consistency_schedule_fails_normality_condition(self):
        r = check_normality_rate(CONSISTENCY, [10**k for k in range(3, 10)])
        assert np.all(np.diff(r) > 0)

    def test_normality_schedule_eventually_decreasing(self):
        # the ratio behaves like n^{-0.025} log n, which turns down only near n ~ 1e11
        grid = [10**k for k in range(14, 40, 2)]
        r = check_normality_rate(NORMALITY, grid)
        assert np.all(np.diff(r) < 0)

    def test_grid_must_increase(self):
        with pytest.raises(InvalidInputError):
            check_consistency_rate(CONSISTENCY, [100, 50])

    def test_moment_condition_needs_lambda(self):
        with pytest.raises(TypeError):
            check_moment_condition(NORMALITY, [100])
        r = check_moment_condition(NORMALITY, [10**k for k in range(3, 30, 3)], lam=4.0)
        assert r[-1] < r[0]


class TestPredictedRate:
    def test_value(self):
        assert dims(CONSISTENCY, 2000).r == 6
        assert predicted_rate(CONSISTENCY, 2000) == pytest.approx(0.2615494640328646, rel=1e-13)

    def test_decreasing_with_fixed_units(self):
        sched = SieveSchedule(r_exponent=0.0, v_scale=10.0, v_exponent=0.0)
        for n in (10, 100, 1000, 10**5):
            assert predicted_rate(sched, 4 * n) < predicted_rate(sched, n)

    def test_scaling(self):
        # with r_n = n^{1/4} exactly, rate / (n^{-3/8} sqrt(log n)) = sqrt(d + 2)
        for k in (4, 8, 12):
            n = 2 ** (4 * k)
            ratio = predicted_rate(CONSISTENCY, n) / (n ** (-3 / 8) * math.sqrt(math.log(n)))
            assert ratio == pytest.approx(math.sqrt(3), rel=1e-9)

    def test_needs_two(self):
        with pytest.raises(InvalidInputError):
            predicted_rate(CONSISTENCY, 1)
