"""Exact finite-horizon computations for finite-support worlds.

Two tools: first-passage probabilities of constant-bet wealth walks, and the
backward-induction value function V_t(y) = best achievable probability of
crossing b = log(1/alpha) by the deadline from state (t, y), together with
the optimal-action table that phase diagrams are drawn from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import NullSpec
from .ratefun import FiniteDist, kelly_solve

__all__ = [
    "HitProb",
    "DpGrid",
    "PhaseDiagram",
    "hit_prob_exact",
    "bellman_solve",
    "phase_export",
    "resolve_actions",
    "HOPELESS_THRESHOLD",
]

HOPELESS_THRESHOLD = 1e-4

# DP action names in increasing aggressiveness; ties break toward the least
# aggressive so diagrams are deterministic
ACTION_RULES = ("half_kelly", "kelly", "all_in")


class HitProb(NamedTuple):
    prob: float
    lattice_step: float | None


def _payoffs(dist: FiniteDist, lam: float, m: float) -> np.ndarray:
    args = lam * (dist.atoms_array() - m)
    if np.any(1.0 + args <= 0.0):
        raise ValueError(f"bet {lam} infeasible for some atom")
    return np.log1p(args)


def hit_prob_exact(
    dist: FiniteDist,
    lam: float,
    m: float,
    y0: float,
    b: float,
    t_steps: int,
    lattice_step: float | None = None,
) -> HitProb:
    """P(the constant-bet log-wealth walk started at y0 reaches b within T steps).

    Exact for one or two atoms (DP over the success count with absorption at
    the first crossing).  For k > 2 atoms the walk is tracked on a rounded
    log-wealth lattice (default step 1e-4 of the one-step payoff span) and the
    step used is returned so callers can tighten it.
    """
    if t_steps < 0:
        raise ValueError("T must be >= 0")
    if y0 >= b:
        return HitProb(1.0, None)
    if t_steps == 0:
        return HitProb(0.0, None)
    hs = _payoffs(dist, lam, m)
    ps = dist.probs_array()

    if dist.k == 1:
        step = hs[0]
        if step <= 0.0:
            return HitProb(0.0, None)
        return HitProb(1.0 if y0 + t_steps * step >= b else 0.0, None)

    if dist.k == 2:
        h0, h1 = float(hs[0]), float(hs[1])
        p0, p1 = float(ps[0]), float(ps[1])
        crossed = 0.0
        alive = np.array([1.0])  # alive[w] after j steps, w = count of atom 1
        for j in range(1, t_steps + 1):
            new = np.zeros(j + 1)
            new[: j] += p0 * alive
            new[1:] += p1 * alive
            w = np.arange(j + 1)
            sums = y0 + w * h1 + (j - w) * h0
            hit = sums >= b
            crossed += float(new[hit].sum())
            new[hit] = 0.0
            alive = new
        return HitProb(min(crossed, 1.0), None)

    # k > 2: lattice DP
    span = float(np.max(hs) - np.min(hs))
    if span == 0.0:
        step = float(hs[0])
        if step <= 0.0:
            return HitProb(0.0, None)
        return HitProb(1.0 if y0 + t_steps * step >= b else 0.0, None)
    dy = lattice_step if lattice_step is not None else 1e-4 * span
    incs = np.rint(hs / dy).astype(np.int64)
    s_cross = math.ceil((b - y0) / dy - 1e-12)
    lo = int(t_steps * incs.min())
    size = s_cross - lo  # alive (uncrossed) states: lattice position in [lo, s_cross)
    if size <= 0:
        return HitProb(1.0, dy)
    alive = np.zeros(size)
    alive[-lo] = 1.0  # walk starts at lattice position 0
    crossed = 0.0
    for _ in range(t_steps):
        new = np.zeros(size)
        for inc, p in zip(incs, ps):
            inc = int(inc)
            if inc > 0:
                cut = max(size - inc, 0)
                crossed += p * float(alive[cut:].sum())  # absorbed at the boundary
                new[inc:] += p * alive[:cut]
            elif inc == 0:
                new += p * alive
            else:
                # positions below the window are unreachable, so no mass is lost
                new[: size + inc] += p * alive[-inc:]
        alive = new
    return HitProb(min(crossed, 1.0), dy)


@dataclass
class DpGrid:
    """Backward-induction output on a uniform log-wealth grid.

    values[t, j] = V_t(y_j); actions[t, j] indexes action_bets (int8, -1 for
    the terminal slice).  interp_error_est is a curvature-based bound on the
    linear-interpolation error committed per lookup.
    """

    ys: np.ndarray
    y_step: float
    horizon_n: int
    b: float
    action_bets: tuple[float, ...]
    action_names: tuple[str, ...]
    values: np.ndarray
    actions: np.ndarray
    interp_error_est: float
    coarse_flagged: bool

    def value_at(self, t: int, y: float) -> float:
        return float(np.interp(y, self.ys, self.values[t]))

    def action_at(self, t: int, y: float) -> int:
        j = int(np.clip(np.searchsorted(self.ys, y), 0, len(self.ys) - 1))
        return int(self.actions[t, j])


def resolve_actions(
    action_set: Sequence[float | str],
    dist: FiniteDist,
    spec: NullSpec,
) -> tuple[tuple[float, ...], tuple[str, ...]]:
    """Map action rules to bets using the population Kelly bet of the world.

    "all_in" is the safe-range endpoint on the Kelly side; explicit floats
    pass through with their value as the name.
    """
    lo, hi = spec.bet_range()
    lam_kelly = kelly_solve(dist, spec.m, (lo, hi))
    bets, names = [], []
    for a in action_set:
        if isinstance(a, str):
            if a == "kelly":
                bets.append(lam_kelly)
            elif a == "half_kelly":
                bets.append(0.5 * lam_kelly)
            elif a == "all_in":
                bets.append(hi if lam_kelly >= 0.0 else lo)
            else:
                raise ValueError(f"unknown action rule {a!r}")
            names.append(a)
        else:
            bets.append(spec.clip_bet(float(a)))
            names.append(f"{float(a):g}")
    return tuple(bets), tuple(names)


def bellman_solve(
    dist: FiniteDist,
    spec: NullSpec,
    action_set: Sequence[float | str] = ACTION_RULES,
    y_step: float = 0.01,
    y_margin: float = 1.0,
    y_lo: float | None = None,
    coarse_tol: float = 1e-3,
) -> DpGrid:
    """Solve V_t(y) by backward induction over a uniform y grid.

    V_N(y) = 1{y >= b}; earlier slices take the best action expectation with
    crossings absorbed at value 1 and non-crossings linearly interpolated on
    the next slice.  The grid spans [b - N*max|h|, b + y_margin] by default,
    below which the value is exactly zero.  Ties in the argmax (within 1e-12)
    go to the least aggressive action.
    """
    n, b = spec.horizon_n, spec.threshold
    bets, names = resolve_actions(action_set, dist, spec)
    payoff = [_payoffs(dist, lam, spec.m) for lam in bets]
    ps = dist.probs_array()

    max_ah = max(float(np.max(np.abs(hh))) for hh in payoff)
    if max_ah == 0.0:
        max_ah = 1.0
    if y_lo is None:
        y_lo = b - n * max_ah
    g = int(math.ceil((b + y_margin - y_lo) / y_step)) + 1
    ys = y_lo + y_step * np.arange(g)

    # precompute integer shift + fraction and crossing index per (action, atom)
    order = np.argsort([abs(l) for l in bets], kind="stable")  # aggressiveness rank
    shifts = []
    for a in range(len(bets)):
        per_atom = []
        for i in range(dist.k):
            o = payoff[a][i] / y_step
            k0 = math.floor(o)
            frac = o - k0
            jc = max(math.ceil((b - payoff[a][i] - y_lo) / y_step - 1e-9), 0)
            per_atom.append((int(k0), float(frac), int(jc)))
        shifts.append(per_atom)

    values = np.empty((n + 1, g))
    actions = np.full((n + 1, g), -1, dtype=np.int8)
    values[n] = (ys >= b - 1e-12).astype(float)

    buf = np.empty(g)
    err_est = 0.0
    for t in range(n - 1, -1, -1):
        vnext = values[t + 1]
        best = np.full(g, -1.0)
        best_a = np.zeros(g, dtype=np.int8)
        for rank_idx in order:  # ascending aggressiveness: later wins need strict gain
            acc = np.zeros(g)
            for i in range(dist.k):
                k0, frac, jc = shifts[rank_idx][i]
                # interpolated next value at y + h, zero below the grid
                buf.fill(0.0)
                j0 = max(-k0, 0)
                j1 = min(g - k0, g)
                if j1 > j0:
                    seg = vnext[j0 + k0: j1 + k0]
                    buf[j0:j1] = (1.0 - frac) * seg
                j1b = min(g - k0 - 1, g)
                if j1b > j0 and frac > 0.0:
                    buf[j0:j1b] += frac * vnext[j0 + k0 + 1: j1b + k0 + 1]
                if jc < g:
                    buf[jc:] = 1.0
                acc += ps[i] * buf
            better = acc > best + 1e-12
            best[better] = acc[better]
            best_a[better] = rank_idx
        won = ys >= b - 1e-12
        best[won] = 1.0
        best_a[won] = order[0]
        values[t] = best
        actions[t] = best_a
        if t == 0 or t == n // 2:
            err_est = max(err_est, float(np.max(np.abs(np.diff(best, 2)))) / 8.0)

    return DpGrid(
        ys=ys, y_step=y_step, horizon_n=n, b=b,
        action_bets=bets, action_names=names,
        values=values, actions=actions,
        interp_error_est=err_est,
        coarse_flagged=err_est > coarse_tol,
    )


@dataclass
class PhaseDiagram:
    """Modal-action map over evenly spaced (t, y) diagram cells.

    Each cell aggregates the DP grid points it covers: the action is the mode
    over points strictly below the threshold (there is no decision once the
    test has rejected; all-won cells get -1), the value is the mean, and a
    cell is hopeless when its mean value falls below HOPELESS_THRESHOLD.
    Aggregation irons out isolated sub-grid-accuracy argmax flips at band
    boundaries, which is also the resolution phase diagrams are read at.
    """

    y_centers: np.ndarray
    y_cell: float
    modal_action: np.ndarray  # (N, C) int8, -1 where no decision cells
    mean_value: np.ndarray    # (N, C)
    hopeless: np.ndarray      # (N, C) bool
    action_names: tuple[str, ...]
    b: float
    horizon_n: int

    @classmethod
    def from_grid(cls, grid: DpGrid, y_cell: float = 0.1,
                  threshold: float = HOPELESS_THRESHOLD) -> "PhaseDiagram":
        edges = np.arange(grid.ys[0], grid.ys[-1] + y_cell, y_cell)
        n_cells = len(edges)
        bins = np.minimum(((grid.ys - grid.ys[0]) / y_cell).astype(int), n_cells - 1)
        n_actions = len(grid.action_bets)
        n = grid.horizon_n
        modal = np.full((n, n_cells), -1, dtype=np.int8)
        mean_v = np.zeros((n, n_cells))
        decide = grid.ys < grid.b  # no decision at or above the threshold
        counts_cell = np.bincount(bins, minlength=n_cells)
        for t in range(n):
            mean_v[t] = np.bincount(bins, weights=grid.values[t],
                                    minlength=n_cells) / np.maximum(counts_cell, 1)
            votes = np.zeros((n_actions, n_cells))
            for a in range(n_actions):
                sel = decide & (grid.actions[t] == a)
                votes[a] = np.bincount(bins[sel], minlength=n_cells)
            has = votes.sum(axis=0) > 0
            modal[t, has] = np.argmax(votes[:, has], axis=0)
        return cls(y_centers=edges + 0.5 * y_cell, y_cell=y_cell,
                   modal_action=modal, mean_value=mean_v,
                   hopeless=mean_v < threshold, action_names=grid.action_names,
                   b=grid.b, horizon_n=n)


def phase_export(
    grid: DpGrid,
    y_cell: float = 0.1,
    t_stride: int = 1,
    header: str | None = None,
) -> str:
    """CSV rows `t,y,value,action,hopeless` of the modal-action diagram;
    byte-stable for identical inputs.  y_cell=None exports the raw DP cells."""
    lines = []
    if header:
        lines.append(header)
    lines.append("t,y,value,action,hopeless")
    names = grid.action_names

    def emit(t, y, v, a, hopeless):
        name = names[a] if a >= 0 else "none"
        lines.append(f"{t},{y:.6f},{v:.10e},{name},{int(hopeless)}")

    if y_cell is None:
        for t in range(0, grid.horizon_n, t_stride):
            for j in range(len(grid.ys)):
                emit(t, grid.ys[j], grid.values[t, j], int(grid.actions[t, j]),
                     grid.values[t, j] < HOPELESS_THRESHOLD)
    else:
        d = PhaseDiagram.from_grid(grid, y_cell=y_cell)
        for t in range(0, grid.horizon_n, t_stride):
            for c in range(len(d.y_centers)):
                emit(t, d.y_centers[c], d.mean_value[t, c],
                     int(d.modal_action[t, c]), d.hopeless[t, c])
    return "\n".join(lines) + "\n"
