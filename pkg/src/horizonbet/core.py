"""Test-martingale wealth process: null spec, state, updates, stopping.

The bettor starts with unit wealth and multiplies it by 1 + lambda_t*(X_t - m)
each step, with predictable bets lambda_t confined to a clipped safe range so
the factor stays >= clip_eps for every x in [0,1].  The test rejects at the
first time the log wealth reaches b = log(1/alpha); by Ville's inequality this
is a level-alpha stopping rule under any null with mean m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NullSpec",
    "WealthState",
    "StopOutcome",
    "EpisodeResult",
    "Strategy",
    "bet_range",
    "wealth_update",
    "run_episode",
]


@dataclass(frozen=True)
class NullSpec:
    """Testing problem: null mean m, level alpha, deadline N, clip margin.

    m in (0,1) is required so both directions are bettable; alpha in (0,1];
    clip_eps >= 0 shrinks the bet range so the wealth factor is bounded away
    from zero (0 is allowed only when the data provably avoids the singular
    endpoint).
    """

    m: float
    alpha: float = 0.05
    horizon_n: int = 100
    clip_eps: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise ValueError(f"null mean must be in (0,1), got {self.m}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0,1], got {self.alpha}")
        if int(self.horizon_n) != self.horizon_n or self.horizon_n < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon_n}")
        if not 0.0 <= self.clip_eps < 1.0:
            raise ValueError(f"clip_eps must be in [0,1), got {self.clip_eps}")

    @property
    def threshold(self) -> float:
        """Rejection threshold b = log(1/alpha) for the log wealth."""
        return -math.log(self.alpha)

    def bet_range(self) -> tuple[float, float]:
        return bet_range(self)

    def clip_bet(self, lam: float) -> float:
        lo, hi = bet_range(self)
        return min(max(lam, lo), hi)


def bet_range(spec: NullSpec) -> tuple[float, float]:
    """Safe bet interval [-(1-eps)/(1-m), (1-eps)/m].

    Any lambda in it keeps 1 + lambda*(x-m) >= eps for all x in [0,1].
    """
    eps = spec.clip_eps
    return (-(1.0 - eps) / (1.0 - spec.m), (1.0 - eps) / spec.m)


@dataclass(frozen=True)
class WealthState:
    """Trajectory state after t observations.

    Carries the log wealth and the running statistics every predictable
    strategy is allowed to see: S_t = sum(x_i - m), V_t = sum((x_i - m)^2),
    and raw moment sums of x up to order 4.
    """

    t: int = 0
    log_wealth: float = 0.0
    s_sum: float = 0.0
    v_sum: float = 0.0
    x_sum: float = 0.0
    x2_sum: float = 0.0
    x3_sum: float = 0.0
    x4_sum: float = 0.0

    @property
    def count(self) -> int:
        return self.t

    @property
    def mu_hat(self) -> float | None:
        """Empirical mean of the observations so far; None before any data."""
        if self.t == 0:
            return None
        return self.x_sum / self.t


def wealth_update(state: WealthState, bet: float, obs: float, spec: NullSpec) -> WealthState:
    """Advance one step: clip the bet to the safe range, multiply the wealth.

    Out-of-range bets are clipped, never rejected, so strategies compose
    freely; observations outside [0,1] are a domain error.
    """
    if not 0.0 <= obs <= 1.0:
        raise ValueError(f"observation {obs} outside [0,1]")
    lam = spec.clip_bet(bet)
    gain = math.log1p(lam * (obs - spec.m))
    d = obs - spec.m
    return WealthState(
        t=state.t + 1,
        log_wealth=state.log_wealth + gain,
        s_sum=state.s_sum + d,
        v_sum=state.v_sum + d * d,
        x_sum=state.x_sum + obs,
        x2_sum=state.x2_sum + obs * obs,
        x3_sum=state.x3_sum + obs**3,
        x4_sum=state.x4_sum + obs**4,
    )


@dataclass(frozen=True)
class StopOutcome:
    """Rejection flag, first crossing time (1-based) if any, final log wealth."""

    rejected: bool
    hit_time: int | None
    final_log_wealth: float


@dataclass
class EpisodeResult:
    outcome: StopOutcome
    bets: np.ndarray | None = None
    log_wealth: np.ndarray | None = None
    actions: list | None = None

    @property
    def steps(self) -> int:
        n = self.outcome.hit_time
        return n if n is not None else -1


class Strategy:
    """Predictable bet policy: sees only the past state plus its own randomness."""

    def bet(self, state: WealthState, spec: NullSpec, rng: np.random.Generator | None) -> float:
        raise NotImplementedError

    def reset(self) -> None:
        """Clear per-episode internal state (default: stateless)."""

    @property
    def last_action(self):
        """Diagnostic label of the most recent decision, if the policy has one."""
        return None


def run_episode(
    spec: NullSpec,
    strategy: Strategy,
    xs,
    rng: np.random.Generator | None = None,
    record: bool = True,
) -> EpisodeResult:
    """Run one test episode on an observation stream, stopping at the first
    crossing of b = log(1/alpha) or at the deadline N.

    `xs` is any iterable of observations in [0,1] yielding at least N values
    (fewer are needed when the test rejects early); `rng` is the strategy's
    auxiliary randomness, independent of the data by construction.
    """
    b = spec.threshold
    n = spec.horizon_n
    state = WealthState()
    strategy.reset()
    bets = [] if record else None
    ys = [] if record else None
    actions = [] if record else None

    it = iter(xs)
    hit: int | None = None
    for t in range(1, n + 1):
        lam = strategy.bet(state, spec, rng)
        try:
            x = next(it)
        except StopIteration:
            raise ValueError(f"observation stream exhausted at step {t} of {n}") from None
        state = wealth_update(state, lam, float(x), spec)
        if record:
            bets.append(spec.clip_bet(lam))
            ys.append(state.log_wealth)
            actions.append(strategy.last_action)
        if state.log_wealth >= b:
            hit = t
            break

    outcome = StopOutcome(
        rejected=hit is not None,
        hit_time=hit,
        final_log_wealth=state.log_wealth,
    )
    return EpisodeResult(
        outcome=outcome,
        bets=np.asarray(bets) if record else None,
        log_wealth=np.asarray(ys) if record else None,
        actions=actions if record else None,
    )
