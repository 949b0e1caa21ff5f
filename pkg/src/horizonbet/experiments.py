"""Vectorized Monte-Carlo harness.

Episodes advance in lockstep across a numpy batch: one array slot per episode
(or per null value, for confidence sequences), shared time axis.  Running past
the first crossing does not change any reported statistic -- the rejection
indicator, hit time, and alive masks all depend on the running maximum -- so
the batch never needs ragged termination.

The vector bettors mirror the scalar strategies in `strategies`; for the
deterministic kinds the two paths produce identical trajectories on the same
data, which the test suite checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import SeedSpec, World, sample
from .strategies import Schedule, default_schedule_grid

__all__ = [
    "VecSpec",
    "BatchStats",
    "VecBettor",
    "VecZero",
    "VecConst",
    "VecKelly",
    "VecEndpoint",
    "VecEpsGreedy",
    "VecSignStar",
    "VecHedge",
    "make_vec_bettor",
    "run_lockstep",
    "SimResult",
    "simulate_hits",
    "rejection_curve",
]


@dataclass(frozen=True)
class VecSpec:
    """Null spec with a scalar or per-slot array of null means."""

    m: float | np.ndarray
    alpha: float
    horizon_n: int
    clip_eps: float = 1e-3

    @property
    def threshold(self) -> float:
        return -math.log(self.alpha)

    @property
    def lam_lo(self):
        return -(1.0 - self.clip_eps) / (1.0 - self.m)

    @property
    def lam_hi(self):
        return (1.0 - self.clip_eps) / self.m

    def clip(self, lam):
        return np.clip(lam, self.lam_lo, self.lam_hi)


class BatchStats:
    """Lockstep running statistics shared by all bettors.

    y is the decision wealth (the mixture wealth for hedging); t counts
    observations consumed, so stats at bet time t+1 exclude the upcoming x.
    """

    def __init__(self, shape, vspec: VecSpec):
        self.vspec = vspec
        self.t = 0
        self.y = np.zeros(shape)
        self.s = np.zeros(shape)
        self.v = np.zeros(shape)
        self.x1 = np.zeros(shape)
        self.x2 = np.zeros(shape)
        self.x3 = np.zeros(shape)
        self.x4 = np.zeros(shape)

    def mu_hat(self):
        """Empirical mean, zero where no data yet."""
        if self.t == 0:
            return np.zeros_like(self.x1)
        return self.x1 / self.t

    def update(self, x, y) -> None:
        d = x - self.vspec.m
        self.t += 1
        self.y = y
        self.s = self.s + d
        self.v = self.v + d * d
        x = np.broadcast_to(x, self.x1.shape)
        self.x1 = self.x1 + x
        self.x2 = self.x2 + x * x
        self.x3 = self.x3 + x**3
        self.x4 = self.x4 + x**4


class VecBettor:
    """One wealth track per slot, bets from the shared stats."""

    def reset(self, shape, vspec: VecSpec, rng: np.random.Generator) -> None:
        self.vspec = vspec
        self.rng = rng
        self.y = np.zeros(shape)

    def bets(self, bs: BatchStats) -> np.ndarray:
        raise NotImplementedError

    def step(self, bs: BatchStats, x) -> np.ndarray:
        lam = self.vspec.clip(self.bets(bs))
        self.y = self.y + np.log1p(lam * (x - self.vspec.m))
        return self.y


class VecZero(VecBettor):
    def bets(self, bs):
        return np.zeros_like(bs.y)


class VecConst(VecBettor):
    def __init__(self, lam: float):
        self.lam = float(lam)

    def bets(self, bs):
        return np.full_like(bs.y, self.lam)


class VecKelly(VecBettor):
    def __init__(self, fraction: float = 1.0):
        self.fraction = float(fraction)

    def bets(self, bs):
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.where(bs.v > 0.0, bs.s / np.where(bs.v > 0.0, bs.v, 1.0), 0.0)
        return self.fraction * self.vspec.clip(raw)


def _endpoint(bs: BatchStats, vspec: VecSpec) -> np.ndarray:
    if bs.t == 0:
        return np.zeros_like(bs.y)
    mu = bs.mu_hat()
    hi = np.broadcast_to(vspec.lam_hi, bs.y.shape)
    lo = np.broadcast_to(vspec.lam_lo, bs.y.shape)
    return np.where(mu > vspec.m, hi, np.where(mu < vspec.m, lo, 0.0))


def _kelly(bs: BatchStats, vspec: VecSpec) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(bs.v > 0.0, bs.s / np.where(bs.v > 0.0, bs.v, 1.0), 0.0)
    return vspec.clip(raw)


class VecEndpoint(VecBettor):
    def bets(self, bs):
        return _endpoint(bs, self.vspec)


class VecEpsGreedy(VecBettor):
    def __init__(self, eta: float, q: int):
        self.eta = eta
        self.q = q

    def reset(self, shape, vspec, rng):
        super().reset(shape, vspec, rng)
        self.schedule = Schedule(self.eta, self.q, vspec.horizon_n)

    def bets(self, bs):
        eps = self.schedule.epsilon(bs.t + 1)
        take_end = self.rng.random(bs.y.shape) < eps
        return np.where(take_end, _endpoint(bs, self.vspec), _kelly(bs, self.vspec))


class VecSignStar(VecBettor):
    """Vector twin of the sign-adapted required-growth heuristic."""

    def bets(self, bs):
        vspec = self.vspec
        if bs.t == 0:
            return np.zeros_like(bs.y)
        mu = bs.mu_hat()
        gap = np.abs(mu - vspec.m)
        vbar = bs.v / bs.t
        remaining = vspec.horizon_n - bs.t
        r = np.maximum(vspec.threshold - bs.y, 0.0) / max(remaining, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = gap * gap - 2.0 * vbar * r
            root = (gap - np.sqrt(np.maximum(disc, 0.0))) / np.where(vbar > 0, vbar, 1.0)
            peak = gap / np.where(vbar > 0, vbar, 1.0)
        mag = np.where(disc > 0.0, root, peak)
        mag = np.where((vbar > 0.0) & (gap > 0.0), mag, 0.0)
        sign = np.sign(mu - vspec.m)
        return vspec.clip(sign * mag)


class VecHedge(VecBettor):
    """K mixed-strike tracks per slot; the decision wealth is the mixture."""

    def __init__(self, schedules: list[Schedule] | None = None):
        self.schedules = schedules

    def reset(self, shape, vspec, rng):
        super().reset(shape, vspec, rng)
        scheds = self.schedules if self.schedules is not None \
            else default_schedule_grid(vspec.horizon_n)
        self.scheds = scheds
        self.coin_streams = rng.spawn(len(scheds))
        self.track_y = np.zeros((len(scheds),) + tuple(np.shape(self.y)))

    def step(self, bs, x):
        vspec = self.vspec
        lam_k = _kelly(bs, vspec)
        lam_e = _endpoint(bs, vspec)
        t_bet = bs.t + 1
        for i, sched in enumerate(self.scheds):
            eps = sched.epsilon(t_bet)
            take_end = self.coin_streams[i].random(np.shape(bs.y)) < eps
            lam = np.where(take_end, lam_e, lam_k)
            self.track_y[i] += np.log1p(lam * (x - vspec.m))
        ymax = self.track_y.max(axis=0)
        self.y = ymax + np.log(np.mean(np.exp(self.track_y - ymax), axis=0))
        return self.y

    def bets(self, bs):  # pragma: no cover - hedging overrides step()
        raise NotImplementedError("hedge has no single bet; use step()")


def make_vec_bettor(desc: str, horizon_n: int | None = None,
                    dqn_loader=None) -> VecBettor:
    """Vector bettor from the same descriptor grammar as parse_strategy."""
    name, _, rest = desc.partition(":")
    name = name.strip().lower()
    if name == "zero":
        return VecZero()
    if name in ("const", "constant"):
        return VecConst(float(rest))
    if name == "kelly":
        return VecKelly(1.0)
    if name == "halfkelly":
        return VecKelly(0.5)
    if name == "fractional":
        return VecKelly(float(rest))
    if name == "endpoint":
        return VecEndpoint()
    if name == "signstar":
        return VecSignStar()
    if name == "epsgreedy":
        kv = {}
        for part in rest.split(","):
            k, _, v = part.partition("=")
            kv[k.strip()] = float(v)
        return VecEpsGreedy(kv["eta"], int(kv.get("q", 1)))
    if name == "hedge":
        if rest not in ("", "default6"):
            raise ValueError(f"unknown hedge variant {rest!r}")
        return VecHedge()
    if name == "dqn":
        if dqn_loader is None:
            from .dqn.policy import VecDqn  # local import to avoid a cycle
            return VecDqn.from_checkpoint(rest)
        return dqn_loader(rest)
    raise ValueError(f"unknown strategy {name!r} in descriptor {desc!r}")


@dataclass
class SimResult:
    hit_time: np.ndarray  # 0 where never crossed
    final_y: np.ndarray
    horizon_n: int

    @property
    def hit(self) -> np.ndarray:
        return self.hit_time > 0

    def hit_rate(self) -> float:
        return float(np.mean(self.hit))

    def rejected_by(self, t: int) -> np.ndarray:
        return (self.hit_time > 0) & (self.hit_time <= t)


def run_lockstep(vspec: VecSpec, bettor: VecBettor, x_of, shape,
                 aux_rng: np.random.Generator, on_step=None) -> SimResult:
    """Advance a batch through all N steps, recording first crossings.

    x_of(t) must return the step-t observations, broadcastable against the
    state shape.  on_step(t, bs, y), when given, runs after each update.
    """
    b = vspec.threshold
    bs = BatchStats(shape, vspec)
    bettor.reset(shape, vspec, aux_rng)
    hit_time = np.zeros(shape, dtype=np.int64)
    for t in range(1, vspec.horizon_n + 1):
        x = x_of(t)
        y = bettor.step(bs, x)
        bs.update(x, y)
        newly = (hit_time == 0) & (y >= b)
        hit_time[newly] = t
        if on_step is not None:
            on_step(t, bs, y)
    return SimResult(hit_time=hit_time, final_y=np.array(bs.y, copy=True),
                     horizon_n=vspec.horizon_n)


def simulate_hits(world: World, vspec: VecSpec, strategy: str | VecBettor,
                  runs: int, seed: int | SeedSpec) -> SimResult:
    """Monte-Carlo hit times of a strategy on i.i.d. draws from a world."""
    root = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    data_rng = root.child(0).generator()
    aux_rng = root.child(1).generator()
    n = vspec.horizon_n
    xs = sample(world, data_rng, (runs, n))
    bettor = strategy if isinstance(strategy, VecBettor) else \
        make_vec_bettor(strategy, horizon_n=n)
    return run_lockstep(vspec, bettor, lambda t: xs[:, t - 1], (runs,), aux_rng)


def rejection_curve(world: World, vspec: VecSpec, strategy: str | VecBettor,
                    runs: int, seed: int | SeedSpec) -> np.ndarray:
    """Rows (t, cumulative rejection fraction, standard error) for t = 1..N."""
    res = simulate_hits(world, vspec, strategy, runs, seed)
    rows = np.zeros((vspec.horizon_n, 3))
    for t in range(1, vspec.horizon_n + 1):
        f = float(np.mean(res.rejected_by(t)))
        rows[t - 1] = (t, f, math.sqrt(f * (1.0 - f) / runs))
    return rows
