import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from horizonbet import NullSpec
from horizonbet.ratefun import (
    FiniteDist,
    c_t_minus,
    c_t_plus,
    classify_region,
    growth,
    growth_deriv,
    h,
    kelly_solve,
    log_mgf,
    quantization_bound,
    rate_minus,
    rate_plus,
    rate_plus_types,
)

BERN6 = FiniteDist.bernoulli(0.6)
BERN7 = FiniteDist.bernoulli(0.7)
BERN99 = FiniteDist.bernoulli(0.99)
B20 = math.log(20.0)


class TestFiniteDist:
    def test_validation(self):
        with pytest.raises(ValueError):
            FiniteDist((0.5, 0.2), (0.5, 0.5))  # not increasing
        with pytest.raises(ValueError):
            FiniteDist((0.0, 1.2), (0.5, 0.5))  # outside [0,1]
        with pytest.raises(ValueError):
            FiniteDist((0.0, 1.0), (0.7, 0.2))  # does not sum to 1
        with pytest.raises(ValueError):
            FiniteDist((0.0, 1.0), (1.0, 0.0))  # zero prob

    def test_bernoulli_degenerate_collapses(self):
        assert FiniteDist.bernoulli(1.0).atoms == (1.0,)
        assert FiniteDist.bernoulli(0.0).atoms == (0.0,)

    def test_basic_properties(self):
        d = FiniteDist((0.1, 0.4, 0.9), (0.2, 0.3, 0.5))
        assert d.k == 3
        assert d.p_min == 0.2
        assert d.mean == pytest.approx(0.59)


class TestPayoff:
    def test_zero_bet(self):
        for x in (0.0, 0.3, 1.0):
            assert h(0.0, x, 0.5) == 0.0

    def test_paper_values(self):
        assert h(0.4, 1.0, 0.5) == pytest.approx(math.log(1.2), abs=1e-12)
        assert h(4.9375, 1.0, 0.2) == pytest.approx(math.log(4.95), abs=1e-12)
        assert h(4.9375, 1.0, 0.2) == pytest.approx(1.5994, abs=1e-4)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            h(5.0, 0.0, 0.2)  # 1 - 5*0.2 = 0


class TestGrowth:
    def test_example_3_1(self):
        assert growth(BERN7, 0.8, 0.5) == pytest.approx(0.082283, abs=1e-5)

    def test_example_3_2(self):
        assert growth(BERN6, 0.4, 0.5) == pytest.approx(0.020136, abs=1e-5)

    def test_defensive_example(self):
        assert growth(BERN99, 4.9375, 0.2) == pytest.approx(1.53958, abs=1e-4)

    def test_infeasible_bet(self):
        with pytest.raises(ValueError):
            growth(BERN6, 5.1, 0.2)

    def test_concavity_random_triples(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            p = rng.uniform(0.1, 0.9)
            m = rng.uniform(0.2, 0.8)
            d = FiniteDist.bernoulli(p)
            lo, hi = -0.9 / (1 - m), 0.9 / m
            l1, l2, l3 = np.sort(rng.uniform(lo, hi, 3))
            if l3 - l1 < 1e-6:
                continue
            w = (l2 - l1) / (l3 - l1)
            chord = (1 - w) * growth(d, l1, m) + w * growth(d, l3, m)
            assert growth(d, l2, m) >= chord - 1e-12


class TestKellySolve:
    def test_bernoulli_closed_form(self):
        assert kelly_solve(BERN7, 0.5, (-1.998, 1.998)) == pytest.approx(0.8, abs=1e-8)
        assert kelly_solve(BERN6, 0.5, (-1.998, 1.998)) == pytest.approx(0.4, abs=1e-8)

    def test_point_mass_at_null(self):
        assert kelly_solve(FiniteDist((0.5,), (1.0,)), 0.5, (-1.9, 1.9)) == 0.0

    def test_closed_form_sweep(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            p = rng.uniform(0.05, 0.95)
            m = rng.uniform(0.1, 0.9)
            closed = (p - m) / (m * (1 - m))
            lo, hi = -(1 - 1e-6) / (1 - m), (1 - 1e-6) / m
            if not lo + 1e-3 < closed < hi - 1e-3:
                continue  # clipped case: closed form not applicable
            got = kelly_solve(FiniteDist.bernoulli(p), m, (lo, hi))
            assert got == pytest.approx(closed, abs=1e-7)

    def test_clipped_to_endpoint(self):
        # Bernoulli(0.99) vs m=0.5: closed form 1.96 exceeds hi=1.8 -> endpoint
        got = kelly_solve(FiniteDist.bernoulli(0.99), 0.5, (-1.8, 1.8))
        assert got == 1.8


def brute_force_rate(dist, lam, m, r, upper, step=1e-3):
    """Grid minimization of D(Q||P) over the constraint set (k <= 3).

    A coarse sweep followed by a fine sweep around the coarse argmin; pure
    enumeration, fully independent of the exponential-tilting solver.
    """
    hs = np.log1p(lam * (dist.atoms_array() - m))
    p = dist.probs_array()

    def kl_rows(q):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(q > 0, q * np.log(q / p), 0.0)
        return terms.sum(axis=-1)

    def sweep2(lo, hi, n):
        q1 = np.linspace(lo, hi, n)
        q = np.stack([1.0 - q1, q1], axis=1)
        means = q @ hs
        ok = means >= r if upper else means <= r
        if not ok.any():
            return math.inf, None
        d = kl_rows(q[ok])
        return float(d.min()), q1[ok][int(np.argmin(d))]

    def sweep3(lo1, hi1, lo2, hi2, n):
        q1 = np.linspace(lo1, hi1, n)
        q2 = np.linspace(lo2, hi2, n)
        g1, g2 = np.meshgrid(q1, q2, indexing="ij")
        g3 = 1.0 - g1 - g2
        valid = g3 >= 0.0
        q = np.stack([g1[valid], g2[valid], g3[valid]], axis=1)
        means = q @ hs
        ok = means >= r if upper else means <= r
        if not ok.any():
            return math.inf, None
        d = kl_rows(q[ok])
        j = int(np.argmin(d))
        return float(d.min()), (q[ok][j][0], q[ok][j][1])

    if dist.k == 2:
        best, arg = sweep2(0.0, 1.0, int(1.0 / step) + 1)
        if arg is not None:
            lo, hi = max(arg - 2 * step, 0.0), min(arg + 2 * step, 1.0)
            best = min(best, sweep2(lo, hi, 4001)[0])
        return best
    if dist.k == 3:
        best, arg = sweep3(0.0, 1.0, 0.0, 1.0, int(1.0 / step) + 1)
        if arg is not None:
            a1, a2 = arg
            fine, _ = sweep3(max(a1 - 2 * step, 0.0), min(a1 + 2 * step, 1.0),
                             max(a2 - 2 * step, 0.0), min(a2 + 2 * step, 1.0), 801)
            best = min(best, fine)
        return best
    raise NotImplementedError


class TestRatePlus:
    def test_feasible_zero(self):
        # r below the mean drift: P itself satisfies the constraint
        assert rate_plus(BERN6, 0.4, 0.5, 0.0) == 0.0

    def test_example_3_2_aggressive(self):
        r = B20 / 20
        assert rate_plus(BERN6, 1.5, 0.5, r) == pytest.approx(0.0815, abs=2e-3)

    def test_example_3_2_kelly(self):
        r = B20 / 20
        assert 0.5 * rate_plus(BERN6, 0.4, 0.5, r) == pytest.approx(0.132, abs=2e-3)

    def test_unattainable_is_infinite(self):
        assert math.isinf(rate_plus(BERN6, 0.4, 0.5, 10.0))

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            p = rng.uniform(0.2, 0.8)
            d = FiniteDist.bernoulli(p)
            m = rng.uniform(0.3, 0.7)
            lam = rng.uniform(-1.0, 1.0)
            hs = np.log1p(lam * (d.atoms_array() - m))
            r = rng.uniform(hs.min(), hs.max())
            got = rate_plus(d, lam, m, r)
            ref = brute_force_rate(d, lam, m, r, upper=True)
            assert got == pytest.approx(ref, abs=2e-4)

    def test_brute_force_three_atoms(self):
        d = FiniteDist((0.1, 0.5, 0.9), (0.3, 0.4, 0.3))
        for lam, r in [(0.8, 0.15), (1.2, 0.2), (-0.7, 0.1)]:
            got = rate_plus(d, lam, 0.45, r)
            ref = brute_force_rate(d, lam, 0.45, r, upper=True)
            assert got == pytest.approx(ref, abs=2e-4)

    def test_legendre_duality(self):
        # I+(r) = sup_{theta >= 0} theta*r - log MGF(theta) for r above the mean
        d = FiniteDist((0.0, 0.6, 1.0), (0.3, 0.3, 0.4))
        lam, m, r = 0.9, 0.45, 0.25
        got = rate_plus(d, lam, m, r)
        neg = lambda th: -(th * r - log_mgf(d, lam, m, th))
        res = minimize_scalar(neg, bounds=(0.0, 200.0), method="bounded",
                              options={"xatol": 1e-12})
        assert got == pytest.approx(-res.fun, abs=1e-9)

    def test_monotone_in_r(self):
        rs = np.linspace(-0.2, 0.17, 40)
        vals = [rate_plus(BERN6, 0.4, 0.5, r) for r in rs]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


class TestRateMinus:
    def test_feasible_zero(self):
        assert rate_minus(BERN6, 0.4, 0.5, 1.0) == 0.0

    def test_defensive_example(self):
        lam_def = 0.75 * 4.9375
        assert rate_minus(BERN99, lam_def, 0.2, 0.8) == pytest.approx(0.466, abs=5e-3)

    def test_defensive_example_kelly(self):
        r_minus = 2.0 * (0.8 - 0.5 * math.log(4.95))
        val = rate_minus(BERN99, 4.9375, 0.2, r_minus)
        assert 0.5 * val == pytest.approx(0.329, abs=5e-3)

    def test_unattainable_is_infinite(self):
        assert math.isinf(rate_minus(BERN6, 0.4, 0.5, -10.0))

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            p = rng.uniform(0.2, 0.8)
            d = FiniteDist.bernoulli(p)
            m = rng.uniform(0.3, 0.7)
            lam = rng.uniform(-1.0, 1.0)
            hs = np.log1p(lam * (d.atoms_array() - m))
            r = rng.uniform(hs.min(), hs.max())
            got = rate_minus(d, lam, m, r)
            ref = brute_force_rate(d, lam, m, r, upper=False)
            assert got == pytest.approx(ref, abs=2e-4)

    def test_monotone_in_r(self):
        rs = np.linspace(-0.22, 0.18, 40)
        vals = [rate_minus(BERN6, 0.4, 0.5, r) for r in rs]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestTypeRestrictedRates:
    def test_upper_bounded_by_quantization_cost(self):
        # I_n <= I + C(n, k, p_min), the content of the quantization lemma
        for n in (10, 25, 40):
            r = B20 / 20
            i_cont = rate_plus(BERN6, 1.5, 0.5, r)
            i_type = rate_plus_types(BERN6, 1.5, 0.5, r, n)
            assert i_type >= i_cont - 1e-12
            assert i_type <= i_cont + quantization_bound(n, 2, 0.4) + 1e-12


class TestCorrections:
    def test_c_t_plus_golden(self):
        assert c_t_plus(20, 2, 0.4) == pytest.approx(1.3152360427372014, rel=1e-12)

    def test_c_t_minus_golden(self):
        assert c_t_minus(20, 2, 0.4) == pytest.approx(1.2459213246812069, rel=1e-12)

    def test_minus_vs_plus_identity(self):
        # they differ by exactly (k/T) log 2
        for t_, k_, pm in [(10, 2, 0.3), (50, 4, 0.05)]:
            assert c_t_plus(t_, k_, pm) - c_t_minus(t_, k_, pm) == pytest.approx(
                (k_ / t_) * math.log(2.0), rel=1e-12)

    def test_asymptotic_order(self):
        # c_T+ = O(log T / T): the ratio to log(T)/T stays bounded and settles
        ratios = [c_t_plus(t_, 2, 0.4) / (math.log(t_) / t_)
                  for t_ in (10, 100, 1000, 10_000, 100_000)]
        assert max(ratios) < 10.0
        assert all(b <= a for a, b in zip(ratios, ratios[1:]))

    def test_monotone_in_p_min(self):
        vals = [c_t_plus(20, 2, pm) for pm in (0.1, 0.2, 0.4, 0.5)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_requires_t_at_least_two(self):
        with pytest.raises(ValueError):
            c_t_plus(1, 2, 0.4)


class TestQuantizationBound:
    def test_golden(self):
        assert quantization_bound(50, 3, 0.1) == pytest.approx(0.4928764859053315, rel=1e-12)

    def test_vanishes_with_n(self):
        assert quantization_bound(10**7, 3, 0.1) < 1e-5

    def test_single_atom(self):
        n = 37
        assert quantization_bound(n, 1, 1.0) == pytest.approx((2 + math.log(n)) / n, rel=1e-12)


class TestClassifyRegion:
    def test_example_3_1_kelly_zone(self):
        # T = 50000 remaining, b - y = 1475, window [0, 1], delta = 0.6, rho = 0.8
        spec = NullSpec(m=0.5, alpha=0.05, horizon_n=50_000)
        y = spec.threshold - 1475.0
        rep = classify_region(BERN7, spec, t=0, y=y, delta=0.6, rho=0.8,
                              lam_window=(0.0, 1.0))
        assert rep.lam_kelly == pytest.approx(0.8, abs=1e-8)
        assert rep.l_max == pytest.approx(0.082, abs=1e-3)
        assert rep.eps_delta == pytest.approx(0.047, abs=1e-3)
        assert rep.kelly_zone_threshold == pytest.approx(1442.0, rel=0.01)
        assert rep.deviation_threshold == pytest.approx(1522.0, rel=0.01)
        assert rep.delta_big >= rep.kelly_zone_threshold
        assert rep.classification == "kelly_zone"

    def test_example_3_2_behind_schedule(self):
        spec = NullSpec(m=0.5, alpha=0.05, horizon_n=20)
        rep = classify_region(BERN6, spec, t=0, y=0.0)
        assert rep.r == pytest.approx(0.1498, abs=1e-3)
        assert rep.b_kelly == pytest.approx(math.log(1.2), abs=1e-9)
        assert rep.r > max(rep.l_max, 0.5 * rep.b_kelly)
        assert rep.classification == "behind_schedule"

    def test_defensive_example_ahead_of_schedule(self):
        spec = NullSpec(m=0.2, alpha=0.05, horizon_n=5)
        y = spec.threshold - 0.8 * 5
        rep = classify_region(BERN99, spec, t=0, y=y)
        assert rep.classification == "ahead_of_schedule"
        assert rep.r_minus == pytest.approx(6.1e-4, rel=0.05)
        assert 0.5 * rep.b_kelly < rep.r < rep.l_max

    def test_already_won(self):
        spec = NullSpec(m=0.5, alpha=0.05, horizon_n=10)
        rep = classify_region(BERN6, spec, t=3, y=spec.threshold + 0.1)
        assert rep.classification == "already_won"

    def test_hopeless(self):
        # required drift above the best achievable one-step increment
        spec = NullSpec(m=0.5, alpha=1e-9, horizon_n=10)
        rep = classify_region(BERN6, spec, t=9, y=0.0)
        assert rep.classification == "hopeless"

    def test_eps_delta_drops_sides_outside_window(self):
        # with window [0, 1] and kelly 0.8, only the left point 0.2 is usable:
        # clamping the right point to 1.0 would understate the growth drop
        spec = NullSpec(m=0.5, alpha=0.05, horizon_n=100)
        rep = classify_region(BERN7, spec, t=0, y=0.0, delta=0.6, lam_window=(0.0, 1.0))
        expected = growth(BERN7, 0.8, 0.5) - growth(BERN7, 0.2, 0.5)
        assert rep.eps_delta == pytest.approx(expected, rel=1e-9)

    def test_requires_time_left(self):
        spec = NullSpec(m=0.5, horizon_n=5)
        with pytest.raises(ValueError):
            classify_region(BERN6, spec, t=5, y=0.0)
