"""Shared test utilities."""

import math

import numpy as np

from horizonbet import NullSpec
from horizonbet.oracle import hit_prob_exact
from horizonbet.ratefun import FiniteDist


def draw_stable_bernoulli_config(rng, y_step, tol=1e-3, max_tries=200):
    """Random (dist, spec, lam) whose first-passage probability is stable to
    threshold perturbations at the grid DP's drift slack T*y_step.

    Bernoulli walks are lattice-valued, so the crossing probability jumps at
    a finite set of thresholds; a grid-based DP cannot resolve configurations
    whose threshold sits within its rounding slack of a jump.  Such knife-edge
    draws (rare) are resampled; the caller asserts agreement on the rest.
    """
    for _ in range(max_tries):
        p = rng.uniform(0.25, 0.85)
        m = rng.uniform(0.3, 0.7)
        n = int(rng.integers(5, 25))
        spec = NullSpec(m=m, alpha=0.05, horizon_n=n)
        lo, hi = spec.bet_range()
        lam = rng.uniform(0.3 * lo, 0.7 * hi)
        d = FiniteDist.bernoulli(p)
        b = spec.threshold
        slack = n * y_step
        p_mid = hit_prob_exact(d, lam, m, 0.0, b, n).prob
        p_lo = hit_prob_exact(d, lam, m, 0.0, b - slack, n).prob
        p_hi = hit_prob_exact(d, lam, m, 0.0, b + slack, n).prob
        if p_lo - p_hi <= 0.5 * tol:
            return d, spec, lam, p_mid
    raise RuntimeError("could not draw a threshold-stable configuration")
