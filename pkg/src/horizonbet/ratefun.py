"""Growth rates, KL rate functions, and schedule-region classification.

Everything here is about the one-step log payoff of a bet lambda against a
null mean m,

    h(lambda, x) = log(1 + lambda * (x - m)),

its expectation L(lambda) under a finite-support distribution, and the
large-deviation cost of pushing the empirical average of h above or below a
required drift r.  The KL projections are computed by exponential tilting,
which is exact for the linear constraint E_Q[h] >= r (resp. <= r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "FiniteDist",
    "RegionReport",
    "h",
    "growth",
    "growth_deriv",
    "kelly_solve",
    "log_mgf",
    "rate_plus",
    "rate_minus",
    "rate_plus_types",
    "rate_minus_types",
    "c_t_plus",
    "c_t_minus",
    "quantization_bound",
    "classify_region",
]

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class FiniteDist:
    """Finite-support distribution on [0,1]: strictly increasing atoms, positive probs."""

    atoms: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        if len(atoms) == 0 or len(atoms) != len(probs):
            raise ValueError("atoms and probs must be nonempty and of equal length")
        if any(a < 0.0 or a > 1.0 for a in atoms):
            raise ValueError("atoms must lie in [0,1]")
        if any(a2 <= a1 for a1, a2 in zip(atoms, atoms[1:])):
            raise ValueError("atoms must be strictly increasing")
        if any(p <= 0.0 for p in probs):
            raise ValueError("probs must be strictly positive")
        if abs(sum(probs) - 1.0) > _PROB_TOL:
            raise ValueError(f"probs must sum to 1 within {_PROB_TOL}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def bernoulli(cls, p: float) -> "FiniteDist":
        """Bernoulli(p) as a finite distribution; degenerate p in {0,1} collapses to one atom."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0,1]")
        if p == 0.0:
            return cls((0.0,), (1.0,))
        if p == 1.0:
            return cls((1.0,), (1.0,))
        return cls((0.0, 1.0), (1.0 - p, p))

    @property
    def k(self) -> int:
        return len(self.atoms)

    @property
    def p_min(self) -> float:
        return min(self.probs)

    @property
    def mean(self) -> float:
        return float(sum(p * a for p, a in zip(self.probs, self.atoms)))

    def atoms_array(self) -> np.ndarray:
        return np.asarray(self.atoms, dtype=float)

    def probs_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


def h(lam: float, x: float, m: float) -> float:
    """One-step log payoff log(1 + lam*(x-m)); raises on a nonpositive argument."""
    arg = lam * (x - m)
    if 1.0 + arg <= 0.0:
        raise ValueError(f"log payoff undefined: 1 + lam*(x-m) = {1.0 + arg} <= 0")
    return math.log1p(arg)


def _payoffs(dist: FiniteDist, lam: float, m: float) -> np.ndarray:
    args = lam * (dist.atoms_array() - m)
    if np.any(1.0 + args <= 0.0):
        raise ValueError(f"bet {lam} infeasible for some atom of the distribution")
    return np.log1p(args)


def growth(dist: FiniteDist, lam: float, m: float) -> float:
    """Expected log growth L(lam) = sum_i p_i * h(lam, x_i)."""
    return float(dist.probs_array() @ _payoffs(dist, lam, m))


def growth_deriv(dist: FiniteDist, lam: float, m: float) -> float:
    """L'(lam) = sum_i p_i (x_i - m) / (1 + lam (x_i - m))."""
    xs = dist.atoms_array() - m
    denom = 1.0 + lam * xs
    if np.any(denom <= 0.0):
        raise ValueError(f"bet {lam} infeasible for some atom of the distribution")
    return float(dist.probs_array() @ (xs / denom))


def kelly_solve(dist: FiniteDist, m: float, lam_range: tuple[float, float]) -> float:
    """Maximize the strictly concave L over a compact feasible interval.

    Uses the sign of L' at the endpoints and root bisection in between;
    the result is accurate to well below 1e-10 in lambda.
    """
    lo, hi = float(lam_range[0]), float(lam_range[1])
    if lo > hi:
        raise ValueError("empty bet interval")
    if all(a == m for a in dist.atoms):
        return 0.0  # L is identically zero
    d_lo = growth_deriv(dist, lo, m)
    if d_lo <= 0.0:
        return lo
    d_hi = growth_deriv(dist, hi, m)
    if d_hi >= 0.0:
        return hi
    return float(brentq(lambda lam: growth_deriv(dist, lam, m), lo, hi,
                        xtol=1e-12, rtol=8.9e-16))


def log_mgf(dist: FiniteDist, lam: float, m: float, theta: float) -> float:
    """log E[exp(theta * h(lam, X))], computed with a max-shift for stability."""
    hs = _payoffs(dist, lam, m)
    z = theta * hs
    zmax = float(np.max(z))
    return zmax + math.log(float(dist.probs_array() @ np.exp(z - zmax)))


def _tilted_mean(probs: np.ndarray, hs: np.ndarray, theta: float) -> float:
    z = theta * hs
    w = probs * np.exp(z - np.max(z))
    return float((w @ hs) / np.sum(w))


def _tilt_solve(dist: FiniteDist, lam: float, m: float, r: float, upper: bool) -> float:
    """KL projection onto {E_Q[h] >= r} (upper) or {E_Q[h] <= r} (lower) by tilting.

    Returns the divergence D(Q_theta || P) at the theta solving E_{Q_theta}[h] = r,
    math.inf when the constraint set is empty, and 0.0 when P itself is feasible.
    """
    probs = dist.probs_array()
    hs = _payoffs(dist, lam, m)
    mean_h = float(probs @ hs)
    if upper:
        if mean_h >= r:
            return 0.0
        h_star = float(np.max(hs))
        if r > h_star:
            return math.inf
        top = probs[hs >= h_star - 1e-15]
    else:
        if mean_h <= r:
            return 0.0
        h_star = float(np.min(hs))
        if r < h_star:
            return math.inf
        top = probs[hs <= h_star + 1e-15]

    sign = 1.0 if upper else -1.0
    theta_hi = 1.0
    # geometric growth until the tilted mean brackets r
    while sign * (_tilted_mean(probs, hs, sign * theta_hi) - r) < 0.0:
        theta_hi *= 2.0
        if theta_hi > 1e15:
            # constraint active only in the point-mass limit
            return -math.log(float(np.sum(top)))
    theta = sign * brentq(
        lambda t: _tilted_mean(probs, hs, sign * t) - r,
        0.0, theta_hi, xtol=1e-14, rtol=8.9e-16,
    )
    return theta * r - log_mgf(dist, lam, m, theta)


def rate_plus(dist: FiniteDist, lam: float, m: float, r: float) -> float:
    """I+(lam, r) = min D(Q||P) over Q with E_Q[h(lam,X)] >= r (inf if unattainable)."""
    return _tilt_solve(dist, lam, m, r, upper=True)


def rate_minus(dist: FiniteDist, lam: float, m: float, r: float) -> float:
    """I-(lam, r) = min D(Q||P) over Q with E_Q[h(lam,X)] <= r (inf if unattainable)."""
    return _tilt_solve(dist, lam, m, r, upper=False)


def _kl(q: np.ndarray, p: np.ndarray) -> float:
    mask = q > 0.0
    return float(np.sum(q[mask] * np.log(q[mask] / p[mask])))


def _rate_types(dist: FiniteDist, lam: float, m: float, r: float, n: int,
                upper: bool) -> float:
    """Type-restricted rate: min over empirical distributions with denominator n.

    Direct enumeration; intended for two-atom distributions and small n, where
    it doubles as an independent oracle for the tilting solver and as the
    lower-bound rate in the finite-alphabet Sanov sandwich.
    """
    if dist.k > 2:
        raise NotImplementedError("type enumeration implemented for k <= 2")
    probs = dist.probs_array()
    hs = _payoffs(dist, lam, m)
    best = math.inf
    for j in range(n + 1):
        if dist.k == 1:
            q = np.array([1.0])
            j_mean = hs[0]
            if j > 0:
                break
        else:
            q = np.array([(n - j) / n, j / n])
            j_mean = float(q @ hs)
        ok = j_mean >= r if upper else j_mean <= r
        if ok:
            best = min(best, _kl(q, probs))
    return best


def rate_plus_types(dist: FiniteDist, lam: float, m: float, r: float, n: int) -> float:
    return _rate_types(dist, lam, m, r, n, upper=True)


def rate_minus_types(dist: FiniteDist, lam: float, m: float, r: float, n: int) -> float:
    return _rate_types(dist, lam, m, r, n, upper=False)


def c_t_plus(t_steps: int, k: int, p_min: float) -> float:
    """Finite-T correction log((T/2)(T+1)^{2k})/T + (k/T)(2 + log(T/p_min))."""
    if t_steps < 2:
        raise ValueError("correction defined for T >= 2")
    if not 0.0 < p_min <= 1.0:
        raise ValueError("p_min must be in (0,1]")
    t = float(t_steps)
    lead = (math.log(t / 2.0) + 2.0 * k * math.log(t + 1.0)) / t
    return lead + (k / t) * (2.0 + math.log(t / p_min))


def c_t_minus(t_steps: int, k: int, p_min: float) -> float:
    """Mirror correction with log(T / (2 p_min)) in the trailing term."""
    if t_steps < 2:
        raise ValueError("correction defined for T >= 2")
    if not 0.0 < p_min <= 1.0:
        raise ValueError("p_min must be in (0,1]")
    t = float(t_steps)
    lead = (math.log(t / 2.0) + 2.0 * k * math.log(t + 1.0)) / t
    return lead + (k / t) * (2.0 + math.log(t / (2.0 * p_min)))


def quantization_bound(n: int, k: int, p_min: float) -> float:
    """Extra KL cost of rounding the optimal tilt to an n-denominator type."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < p_min <= 1.0:
        raise ValueError("p_min must be in (0,1]")
    return (2.0 + math.log(n / p_min)) * k / n


@dataclass(frozen=True)
class RegionReport:
    """Where a state (t, y) sits relative to the Kelly schedule.

    delta_big is T * L_max - (b - y) exactly; `fired` lists every predicate
    that held and `classification` is the highest-priority one (already_won,
    hopeless, kelly_zone, behind_schedule, ahead_of_schedule) or indeterminate.
    """

    t: int
    y: float
    horizon_n: int
    b: float
    remaining: int
    r: float
    lam_kelly: float
    l_max: float
    b_kelly: float
    b_sup: float
    delta_big: float
    eps_delta: float | None
    delta: float
    rho: float
    kelly_zone_threshold: float
    deviation_threshold: float | None
    r_minus: float | None
    lam_window: tuple[float, float]
    fired: tuple[str, ...]
    classification: str

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["lam_window"] = list(self.lam_window)
        d["fired"] = list(self.fired)
        return d


def classify_region(
    dist: FiniteDist,
    spec,
    t: int,
    y: float,
    delta: float = 0.1,
    rho: float = 0.5,
    lam_window: tuple[float, float] | None = None,
) -> RegionReport:
    """Evaluate the schedule-position predicates at state (t, y).

    Predicates, with T = N - t, r = (b - y)/T, Delta = T*L_max - (b - y):
      kelly_zone        Delta >= B * sqrt(8 T log T)
      behind_schedule   r > max(L_max, B_K / 2)
      ahead_of_schedule B_K / 2 < r < L_max   (also reports r_minus)
    plus already_won (y >= b) and hopeless (r exceeds the largest achievable
    one-step increment over the bet window).  eps_delta is the drop in L at
    the nearer of lam_kelly +- delta that stays inside the window; by
    concavity this bounds L over all window bets delta-far from Kelly.
    """
    n, b, m = spec.horizon_n, spec.threshold, spec.m
    if t >= n:
        raise ValueError("classification requires t < N")
    remaining = n - t
    r = (b - y) / remaining

    if lam_window is None:
        lo, hi = spec.bet_range()
        full_kelly = kelly_solve(dist, m, (lo, hi))
        lam_window = (0.0, hi) if full_kelly >= 0.0 else (lo, 0.0)
    lo, hi = float(lam_window[0]), float(lam_window[1])

    lam_kelly = kelly_solve(dist, m, (lo, hi))
    l_max = growth(dist, lam_kelly, m)
    b_kelly = float(np.max(_payoffs(dist, lam_kelly, m)))
    # sup and sup-of-absolute of h over the window x [0,1]; h is monotone in
    # both arguments so the corners suffice
    corners = [h(lam, x, m) for lam in (lo, hi) for x in (0.0, 1.0)]
    b_abs = max(abs(c) for c in corners)
    b_sup = max(corners)
    delta_big = remaining * l_max - (b - y)

    cands = []
    if lam_kelly - delta >= lo:
        cands.append(growth(dist, lam_kelly - delta, m))
    if lam_kelly + delta <= hi:
        cands.append(growth(dist, lam_kelly + delta, m))
    eps_delta = (l_max - max(cands)) if cands else None

    kz_threshold = b_abs * math.sqrt(8.0 * remaining * math.log(remaining)) if remaining >= 1 else 0.0
    dev_threshold = None
    if eps_delta is not None:
        dev_threshold = rho * eps_delta * remaining - b_abs * math.sqrt(
            8.0 * remaining * math.log(2.0))

    fired: list[str] = []
    if y >= b:
        fired.append("already_won")
    if r > b_sup:
        fired.append("hopeless")
    if remaining >= 2 and delta_big >= kz_threshold:
        fired.append("kelly_zone")
    if r > max(l_max, 0.5 * b_kelly):
        fired.append("behind_schedule")
    r_minus = None
    if 0.5 * b_kelly < r < l_max:
        fired.append("ahead_of_schedule")
        r_minus = 2.0 * (r - 0.5 * b_kelly)

    classification = "indeterminate"
    for name in ("already_won", "hopeless", "kelly_zone", "behind_schedule",
                 "ahead_of_schedule"):
        if name in fired:
            classification = name
            break

    return RegionReport(
        t=t, y=y, horizon_n=n, b=b, remaining=remaining, r=r,
        lam_kelly=lam_kelly, l_max=l_max, b_kelly=b_kelly, b_sup=b_sup,
        delta_big=delta_big, eps_delta=eps_delta, delta=delta, rho=rho,
        kelly_zone_threshold=kz_threshold, deviation_threshold=dev_threshold,
        r_minus=r_minus, lam_window=(lo, hi), fired=tuple(fired),
        classification=classification,
    )
