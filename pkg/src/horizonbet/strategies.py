"""Predictable betting policies.

All policies read only the past (WealthState) plus their own auxiliary
randomness, never the observation they are about to bet on, and every emitted
bet lies in the clipped safe range of the null spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NullSpec, Strategy, WealthState, wealth_update
from .core import EpisodeResult, StopOutcome
from .ratefun import FiniteDist, kelly_solve

__all__ = [
    "Schedule",
    "HedgeBook",
    "ZeroBet",
    "ConstantBet",
    "EmpiricalKelly",
    "EndpointBet",
    "EpsGreedy",
    "SignAdapted",
    "empirical_kelly",
    "endpoint_bet",
    "eps_greedy_bet",
    "sign_adapted_bet",
    "population_kelly",
    "required_growth_magnitude",
    "default_schedule_grid",
    "run_hedge_episode",
    "parse_strategy",
]


def empirical_kelly(state: WealthState, spec: NullSpec) -> float:
    """Stabilized plug-in Kelly estimate clip(S/V); zero before any data."""
    if state.v_sum == 0.0:
        return 0.0
    return spec.clip_bet(state.s_sum / state.v_sum)


def endpoint_bet(state: WealthState, spec: NullSpec) -> float:
    """All-in at the safe-range endpoint on the side of the empirical mean.

    sign(mu_hat - m) = 0 (or no data yet) means no direction: bet zero.
    """
    mu = state.mu_hat
    if mu is None:
        return 0.0
    lo, hi = spec.bet_range()
    if mu > spec.m:
        return hi
    if mu < spec.m:
        return lo
    return 0.0


def sign_adapted_bet(magnitude: float, state: WealthState, spec: NullSpec) -> float:
    """Two-sided wrapper: direction from sign(mu_hat - m), clipped magnitude >= 0."""
    if magnitude < 0.0:
        raise ValueError("inner policy must return a nonnegative magnitude")
    mu = state.mu_hat
    if mu is None or mu == spec.m:
        return 0.0
    s = 1.0 if mu > spec.m else -1.0
    return spec.clip_bet(s * magnitude)


def population_kelly(dist: FiniteDist, spec: NullSpec) -> float:
    """Expected-log-growth maximizer over the spec's clipped bet range."""
    return kelly_solve(dist, spec.m, spec.bet_range())


def required_growth_magnitude(state: WealthState, spec: NullSpec) -> float:
    """Heuristic one-sided bet magnitude (not from any published rule).

    Picks the smallest nonnegative lambda whose second-order growth proxy
    lambda*|gap| - lambda^2*vbar/2 meets the per-step drift (b - Y)/(N - t)
    still needed, falling back to the proxy's maximizer |gap|/vbar when no
    lambda reaches it.  Serves as the default magnitude for the sign-adapted
    wrapper; swap in any nonnegative predictable rule via SignAdapted.
    """
    if state.t == 0 or state.v_sum == 0.0:
        return 0.0
    gap = abs(state.mu_hat - spec.m)
    vbar = state.v_sum / state.t
    if gap == 0.0 or vbar == 0.0:
        return 0.0
    remaining = spec.horizon_n - state.t
    if remaining <= 0:
        return gap / vbar
    r = max(spec.threshold - state.log_wealth, 0.0) / remaining
    disc = gap * gap - 2.0 * vbar * r
    if disc <= 0.0:
        return gap / vbar
    return (gap - math.sqrt(disc)) / vbar


@dataclass(frozen=True)
class Schedule:
    """Aggressiveness schedule: eps_t = 0 before the onset eta*N, then rises
    as ((t - eta*N) / ((1-eta)*N))^q to exactly 1 at t = N."""

    onset_eta: float
    trend_q: int
    horizon_n: int

    def __post_init__(self):
        if not 0.0 <= self.onset_eta < 1.0:
            raise ValueError("onset fraction must be in [0,1)")
        if self.trend_q not in (1, 2):
            raise ValueError("trend exponent must be 1 (linear) or 2 (quadratic)")

    def epsilon(self, t: int) -> float:
        """Mixing probability at bet index t (1-based, t <= N)."""
        n = self.horizon_n
        onset = self.onset_eta * n
        if t < onset:
            return 0.0
        return min((t - onset) / ((1.0 - self.onset_eta) * n), 1.0) ** self.trend_q


def default_schedule_grid(horizon_n: int) -> list[Schedule]:
    """The six-schedule grid: onsets {0.25, 0.5, 0.75} x trends {linear, quadratic}."""
    return [Schedule(eta, q, horizon_n)
            for eta in (0.25, 0.50, 0.75) for q in (1, 2)]


def eps_greedy_bet(
    state: WealthState,
    spec: NullSpec,
    schedule: Schedule,
    coin: float,
) -> tuple[float, str]:
    """Mixed-strike rule: endpoint bet with probability eps_t, else empirical
    Kelly.  The coin must come from a stream independent of the data."""
    eps = schedule.epsilon(state.t + 1)
    if coin < eps:
        return endpoint_bet(state, spec), "endpoint"
    return empirical_kelly(state, spec), "kelly"


class ZeroBet(Strategy):
    def bet(self, state, spec, rng):
        return 0.0


class ConstantBet(Strategy):
    def __init__(self, lam: float):
        self.lam = float(lam)

    def bet(self, state, spec, rng):
        return self.lam


class EmpiricalKelly(Strategy):
    """clip(S/V) scaled by a fraction (1.0 = full Kelly, 0.5 = half Kelly)."""

    def __init__(self, fraction: float = 1.0):
        self.fraction = float(fraction)

    def bet(self, state, spec, rng):
        return self.fraction * empirical_kelly(state, spec)


class EndpointBet(Strategy):
    def bet(self, state, spec, rng):
        return endpoint_bet(state, spec)


class EpsGreedy(Strategy):
    def __init__(self, schedule: Schedule):
        self.schedule = schedule
        self._last = None

    def bet(self, state, spec, rng):
        lam, action = eps_greedy_bet(state, spec, self.schedule, rng.random())
        self._last = action
        return lam

    @property
    def last_action(self):
        return self._last


class SignAdapted(Strategy):
    """Direction from the sign rule, magnitude from a pluggable policy."""

    def __init__(self, magnitude=required_growth_magnitude):
        self.magnitude = magnitude

    def bet(self, state, spec, rng):
        return sign_adapted_bet(self.magnitude(state, spec), state, spec)


class HedgeBook:
    """Capital split uniformly over K mixed-strike schedules.

    Each schedule runs its own wealth track with its own coin stream; the
    mixture log wealth log((1/K) sum_k exp(Y_k)) is what the stopping rule
    watches, and it trails the best track by at most log K.
    """

    def __init__(self, spec: NullSpec, schedules: list[Schedule] | None = None,
                 rng: np.random.Generator | None = None):
        self.spec = spec
        self.schedules = schedules if schedules is not None else default_schedule_grid(spec.horizon_n)
        if not self.schedules:
            raise ValueError("need at least one schedule")
        k = len(self.schedules)
        if rng is None:
            rng = np.random.default_rng()
        self.coin_streams = rng.spawn(k)
        self.track_log_wealth = np.zeros(k)
        self.state = WealthState()
        self.track_bets = np.zeros(k)

    @property
    def k(self) -> int:
        return len(self.schedules)

    def mixture_log_wealth(self) -> float:
        y = self.track_log_wealth
        ymax = float(np.max(y))
        return ymax + math.log(np.mean(np.exp(y - ymax)))

    def step(self, x: float) -> float:
        """Advance every track with the observation x; return the mixture log wealth."""
        spec = self.spec
        lam_k = empirical_kelly(self.state, spec)
        lam_end = endpoint_bet(self.state, spec)
        t_bet = self.state.t + 1
        for i, sched in enumerate(self.schedules):
            take_end = self.coin_streams[i].random() < sched.epsilon(t_bet)
            lam = lam_end if take_end else lam_k
            self.track_bets[i] = lam
            self.track_log_wealth[i] += math.log1p(lam * (x - spec.m))
        self.state = wealth_update(self.state, 0.0, x, spec)
        return self.mixture_log_wealth()


def run_hedge_episode(
    spec: NullSpec,
    xs,
    schedules: list[Schedule] | None = None,
    rng: np.random.Generator | None = None,
    record: bool = True,
) -> EpisodeResult:
    """Episode driven by the hedged mixture wealth (its own runner because the
    mixture is not a per-step product of single bets)."""
    book = HedgeBook(spec, schedules, rng)
    b = spec.threshold
    ys = [] if record else None
    it = iter(xs)
    hit = None
    y = 0.0
    for t in range(1, spec.horizon_n + 1):
        try:
            x = next(it)
        except StopIteration:
            raise ValueError(f"observation stream exhausted at step {t}") from None
        y = book.step(float(x))
        if record:
            ys.append(y)
        if y >= b:
            hit = t
            break
    outcome = StopOutcome(rejected=hit is not None, hit_time=hit, final_log_wealth=y)
    return EpisodeResult(outcome=outcome, bets=None,
                         log_wealth=np.asarray(ys) if record else None, actions=None)


def parse_strategy(desc: str, horizon_n: int | None = None):
    """Build a strategy from a descriptor string.

    Supported: "zero", "const:<lam>", "kelly", "halfkelly",
    "fractional:<f>", "endpoint", "epsgreedy:eta=<e>,q=<1|2>", "signstar",
    "hedge:default6" (handled by callers via its own runner), "dqn:<path>".
    Returns ("hedge", schedules) / ("dqn", path) markers for the two kinds
    that need special runners, else a Strategy instance.
    """
    name, _, rest = desc.partition(":")
    name = name.strip().lower()
    try:
        if name == "zero":
            return ZeroBet()
        if name in ("const", "constant"):
            return ConstantBet(float(rest))
        if name == "kelly":
            return EmpiricalKelly(1.0)
        if name == "halfkelly":
            return EmpiricalKelly(0.5)
        if name == "fractional":
            return EmpiricalKelly(float(rest))
        if name == "endpoint":
            return EndpointBet()
        if name == "signstar":
            return SignAdapted()
        if name == "epsgreedy":
            kv = {}
            for part in rest.split(","):
                k, _, v = part.partition("=")
                kv[k.strip()] = float(v)
            if horizon_n is None:
                raise ValueError("epsgreedy needs a horizon")
            return EpsGreedy(Schedule(kv["eta"], int(kv.get("q", 1)), horizon_n))
        if name == "hedge":
            if rest not in ("", "default6"):
                raise ValueError(f"unknown hedge variant {rest!r}")
            return ("hedge", None if horizon_n is None else default_schedule_grid(horizon_n))
        if name == "dqn":
            if not rest:
                raise ValueError("dqn descriptor needs a checkpoint path")
            return ("dqn", rest)
    except (ValueError, KeyError) as exc:
        raise ValueError(f"bad strategy descriptor {desc!r}: {exc}") from exc
    raise ValueError(f"unknown strategy {name!r} in descriptor {desc!r}")
