import math

import numpy as np
import pytest

from horizonbet import NullSpec, WealthState, bet_range, run_episode, wealth_update
from horizonbet.strategies import ConstantBet, EmpiricalKelly, ZeroBet


class TestNullSpec:
    def test_threshold(self):
        assert NullSpec(m=0.5, alpha=0.05).threshold == pytest.approx(math.log(20.0))

    @pytest.mark.parametrize("m", [0.0, 1.0, -0.1, 1.5])
    def test_degenerate_null_mean_rejected(self, m):
        with pytest.raises(ValueError):
            NullSpec(m=m)

    @pytest.mark.parametrize("alpha", [0.0, 1.5, -0.05])
    def test_bad_alpha_rejected(self, alpha):
        with pytest.raises(ValueError):
            NullSpec(m=0.5, alpha=alpha)

    def test_bad_horizon_rejected(self):
        with pytest.raises(ValueError):
            NullSpec(m=0.5, horizon_n=0)

    def test_alpha_one_allowed(self):
        assert NullSpec(m=0.5, alpha=1.0).threshold == 0.0


class TestBetRange:
    def test_symmetric_null(self):
        lo, hi = bet_range(NullSpec(m=0.5, clip_eps=1e-3))
        assert (lo, hi) == pytest.approx((-1.998, 1.998))

    def test_zero_margin_limit(self):
        lo, hi = bet_range(NullSpec(m=0.5, clip_eps=0.0))
        assert (lo, hi) == (-2.0, 2.0)

    def test_asymmetric_null(self):
        # endpoint formulas -(1-eps)/(1-m) and (1-eps)/m directly
        lo, hi = bet_range(NullSpec(m=0.2, clip_eps=1e-3))
        assert (lo, hi) == pytest.approx((-1.24875, 4.995))

    def test_factor_bounded_away_from_zero(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            spec = NullSpec(m=rng.uniform(0.05, 0.95), clip_eps=10.0 ** rng.uniform(-6, -1))
            lo, hi = bet_range(spec)
            assert lo < 0.0 < hi
            for lam in (lo, hi):
                for x in (0.0, 1.0):
                    assert 1.0 + lam * (x - spec.m) >= spec.clip_eps - 1e-15


class TestWealthUpdate:
    def test_zero_bet_is_identity(self):
        spec = NullSpec(m=0.5)
        state = WealthState()
        out = wealth_update(state, 0.0, 0.73, spec)
        assert out.log_wealth == 0.0
        assert out.t == 1

    def test_win_multiplier(self):
        spec = NullSpec(m=0.5)
        out = wealth_update(WealthState(), 0.4, 1.0, spec)
        assert out.log_wealth == pytest.approx(math.log(1.2), abs=1e-12)

    def test_loss_multiplier(self):
        spec = NullSpec(m=0.5)
        out = wealth_update(WealthState(), 1.5, 0.0, spec)
        assert out.log_wealth == pytest.approx(math.log(0.25), abs=1e-12)

    def test_observation_domain_error(self):
        spec = NullSpec(m=0.5)
        with pytest.raises(ValueError):
            wealth_update(WealthState(), 0.0, 1.2, spec)

    def test_out_of_range_bet_clipped_not_rejected(self):
        spec = NullSpec(m=0.5)
        out = wealth_update(WealthState(), 100.0, 0.0, spec)
        # clipped to 1.998 so the factor is exactly clip_eps
        assert out.log_wealth == pytest.approx(math.log(1e-3), rel=1e-9)

    def test_running_sums(self):
        spec = NullSpec(m=0.5)
        s = wealth_update(WealthState(), 0.0, 0.8, spec)
        s = wealth_update(s, 0.0, 0.8, spec)
        assert s.s_sum == pytest.approx(0.6)
        assert s.v_sum == pytest.approx(0.18)
        assert s.x_sum == pytest.approx(1.6)
        assert s.mu_hat == pytest.approx(0.8)

    def test_wealth_stays_finite_with_clipped_bets(self):
        spec = NullSpec(m=0.3, clip_eps=1e-3)
        lo, hi = bet_range(spec)
        rng = np.random.default_rng(11)
        state = WealthState()
        for _ in range(500):
            lam = rng.uniform(2 * lo, 2 * hi)  # deliberately out of range half the time
            x = rng.choice([0.0, 1.0, rng.random()])
            state = wealth_update(state, lam, x, spec)
            assert math.isfinite(state.log_wealth)


class TestRunEpisode:
    def test_zero_strategy_never_rejects(self):
        spec = NullSpec(m=0.5, alpha=0.05, horizon_n=50)
        xs = np.random.default_rng(0).random(50)
        res = run_episode(spec, ZeroBet(), xs)
        assert not res.outcome.rejected
        assert res.outcome.hit_time is None
        assert res.outcome.final_log_wealth == 0.0
        assert len(res.log_wealth) == 50

    def test_all_ones_crossing_time(self):
        # constant 1.998 on all-ones data crosses at ceil(b / log(1.999)) = 5
        spec = NullSpec(m=0.5, alpha=0.05, horizon_n=20)
        res = run_episode(spec, ConstantBet(1.998), np.ones(20))
        assert res.outcome.rejected
        assert res.outcome.hit_time == 5
        assert len(res.log_wealth) == 5

    def test_first_crossing(self):
        spec = NullSpec(m=0.5, alpha=0.05, horizon_n=100)
        xs = np.random.default_rng(5).random(100) * 0.4 + 0.6
        res = run_episode(spec, EmpiricalKelly(), xs)
        if res.outcome.rejected:
            tau = res.outcome.hit_time
            assert res.log_wealth[tau - 1] >= spec.threshold
            assert np.all(res.log_wealth[: tau - 1] < spec.threshold)

    def test_trajectory_only_when_recorded(self):
        spec = NullSpec(m=0.5, horizon_n=10)
        res = run_episode(spec, ZeroBet(), np.zeros(10), record=False)
        assert res.bets is None and res.log_wealth is None

    def test_short_stream_raises(self):
        spec = NullSpec(m=0.5, horizon_n=10)
        with pytest.raises(ValueError):
            run_episode(spec, ZeroBet(), np.zeros(3))

    def test_deterministic_replay(self):
        from horizonbet.strategies import EpsGreedy, Schedule
        from horizonbet.distributions import stream

        spec = NullSpec(m=0.5, horizon_n=60)
        xs = stream(9, 0).random(60)
        runs = []
        for _ in range(2):
            strat = EpsGreedy(Schedule(0.25, 2, 60))
            res = run_episode(spec, strat, xs, rng=stream(9, 1))
            runs.append((res.outcome, res.bets.copy(), res.log_wealth.copy()))
        assert runs[0][0] == runs[1][0]
        np.testing.assert_array_equal(runs[0][1], runs[1][1])
        np.testing.assert_array_equal(runs[0][2], runs[1][2])


class TestValidity:
    def test_kelly_rejection_rate_under_null(self):
        # Ville: any predictable strategy rejects with prob <= alpha under the null
        from horizonbet.distributions import World
        from horizonbet.experiments import VecSpec, simulate_hits

        alpha, runs = 0.05, 10_000
        vspec = VecSpec(m=0.3, alpha=alpha, horizon_n=100)
        for world in (World.bernoulli(0.3), World.beta(0.3, 4.0)):
            res = simulate_hits(world, vspec, "kelly", runs, 77)
            bound = alpha + 3.0 * math.sqrt(alpha * (1 - alpha) / runs)
            assert res.hit_rate() <= bound
