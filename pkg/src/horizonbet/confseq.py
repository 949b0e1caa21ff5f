"""Confidence sequences by inverting a grid of betting tests.

One wealth process per candidate null m runs on the shared data; a grid point
is eliminated permanently the first time its running-max wealth clears 1/alpha,
and the reported interval is the hull of the surviving points, rounded outward
by half a grid step.  Elimination is permanent, so the alive sets -- and hence
the intervals -- are nested over time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NullSpec, run_episode
from .distributions import SeedSpec
from .experiments import VecBettor, VecSpec, make_vec_bettor, run_lockstep

__all__ = ["CsResult", "default_grid", "cs_run", "cs_run_factory", "lcb_curve"]


def default_grid(points: int = 999) -> np.ndarray:
    """Equally spaced candidate nulls in (0,1), endpoints excluded."""
    return np.arange(1, points + 1) / (points + 1.0)


@dataclass
class CsResult:
    """Per-time alive masks and hull intervals for one data sequence.

    Row n describes C_n; row 0 is the trivial full interval.  `disconnected`
    marks times where the alive set had gaps (the hull is still reported).
    """

    grid_m: np.ndarray
    alive: np.ndarray        # (N+1, G) bool
    lower: np.ndarray        # (N+1,)
    upper: np.ndarray
    empty: np.ndarray        # (N+1,) bool
    disconnected: np.ndarray

    @property
    def width(self) -> np.ndarray:
        w = self.upper - self.lower
        return np.where(self.empty, 0.0, w)

    @property
    def lcb(self) -> np.ndarray:
        return self.lower


def _intervals_from_alive(grid: np.ndarray, alive: np.ndarray):
    """Hull of alive grid points with outward half-step rounding.

    A surviving extreme grid point extends the interval to the domain
    boundary: nulls beyond the grid were never tested, so they cannot be
    excluded.
    """
    g = len(grid)
    half = 0.5 * (grid[1] - grid[0]) if g > 1 else 0.5
    any_alive = alive.any(axis=-1)
    first = np.argmax(alive, axis=-1)
    last = g - 1 - np.argmax(alive[..., ::-1], axis=-1)
    lower = np.where(first == 0, 0.0, np.clip(grid[first] - half, 0.0, 1.0))
    upper = np.where(last == g - 1, 1.0, np.clip(grid[last] + half, 0.0, 1.0))
    lower = np.where(any_alive, lower, np.nan)
    upper = np.where(any_alive, upper, np.nan)
    count = alive.sum(axis=-1)
    disconnected = any_alive & (count < (last - first + 1))
    return lower, upper, ~any_alive, disconnected


def _result_from_hits(grid: np.ndarray, hit_time: np.ndarray, n: int) -> CsResult:
    steps = np.arange(n + 1)[:, None]
    alive = (hit_time[None, :] == 0) | (hit_time[None, :] > steps)
    lower, upper, empty, disconnected = _intervals_from_alive(grid, alive)
    lower[0], upper[0] = 0.0, 1.0
    return CsResult(grid_m=grid, alive=alive, lower=lower, upper=upper,
                    empty=empty, disconnected=disconnected)


def cs_run(
    xs,
    alpha: float = 0.05,
    strategy: str | VecBettor = "kelly",
    grid: int | np.ndarray = 999,
    seed: int | SeedSpec = 0,
    clip_eps: float = 1e-3,
) -> CsResult:
    """Confidence sequence for one observation sequence.

    The same strategy kind runs independently for every grid null, each with
    its own auxiliary stream; the data are shared.
    """
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    grid_m = default_grid(grid) if isinstance(grid, int) else np.asarray(grid, dtype=float)
    if len(grid_m) < 3:
        raise ValueError("grid must have at least 3 points")
    root = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    vspec = VecSpec(m=grid_m, alpha=alpha, horizon_n=n, clip_eps=clip_eps)
    bettor = strategy if isinstance(strategy, VecBettor) else \
        make_vec_bettor(strategy, horizon_n=n)
    res = run_lockstep(vspec, bettor, lambda t: xs[t - 1], grid_m.shape,
                       root.child(1).generator())
    return _result_from_hits(grid_m, res.hit_time, n)


def cs_run_factory(xs, alpha, factory, grid, seed: int | SeedSpec = 0,
                   clip_eps: float = 1e-3) -> CsResult:
    """Generic (scalar) path: factory(m, rng) -> Strategy, one per grid null."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    grid_m = default_grid(grid) if isinstance(grid, int) else np.asarray(grid, dtype=float)
    if len(grid_m) < 3:
        raise ValueError("grid must have at least 3 points")
    root = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    hit_time = np.zeros(len(grid_m), dtype=np.int64)
    for j, m in enumerate(grid_m):
        spec = NullSpec(m=float(m), alpha=alpha, horizon_n=n, clip_eps=clip_eps)
        strat = factory(float(m), root.child(2, j).generator())
        out = run_episode(spec, strat, xs, root.child(3, j).generator(), record=False)
        hit_time[j] = out.outcome.hit_time or 0
    return _result_from_hits(grid_m, hit_time, n)


def lcb_curve(lcbs, x_grid) -> np.ndarray:
    """Empirical CDF rows (x, fraction of runs whose lower bound is <= x)."""
    lcbs = np.asarray(lcbs, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    rows = np.zeros((len(x_grid), 2))
    for i, x in enumerate(x_grid):
        rows[i] = (x, float(np.mean(lcbs <= x)))
    return rows
