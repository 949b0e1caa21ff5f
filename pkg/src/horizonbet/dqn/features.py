"""Predictable 22-feature state for the betting agent.

Every feature is computable from the observations strictly before the current
step plus the current log wealth, so feeding them to a policy preserves
anytime-validity by construction.  The layout is frozen; its hash travels in
checkpoints so stale policies cannot be silently applied to a different
feature map.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..core import NullSpec, WealthState

__all__ = ["FEATURE_NAMES", "FEATURE_DIM", "CLAMP", "KAPPA0",
           "feature_matrix", "features", "feature_schema_hash"]

FEATURE_NAMES = (
    "mean_gap",             # mu_hat - m
    "abs_mean_gap",
    "dist_to_threshold",    # (b - Y) / b
    "required_growth",      # (b - Y) / (N - t)
    "time_left_frac",       # (N - 1 - t) / (N - 1)
    "var_around_null",      # V / t
    "central_var",
    "snr_gap",              # (mu_hat - m) / sqrt(central_var + kappa0)
    "kelly_bet",
    "endpoint_bet",
    "endpoint_minus_kelly",
    "growth_proxy_kelly",   # lam*gap - lam^2*var_around_null/2
    "growth_proxy_endpoint",
    "growth_proxy_gap",     # endpoint proxy minus kelly proxy
    "skewness",
    "excess_kurtosis",
    "log_conc_proxy",       # log of the Beta concentration matching (mu, var)
    "log_wealth",
    "log_horizon",
    "null_mean",
    "time_frac",
    "no_variance_flag",
)
FEATURE_DIM = len(FEATURE_NAMES)
CLAMP = 10.0
KAPPA0 = 1e-6
_VAR_TOL = 1e-12


def feature_schema_hash() -> str:
    return hashlib.sha256("|".join(FEATURE_NAMES).encode()).hexdigest()[:16]


def feature_matrix(t, n, b, m, lam_lo, lam_hi, y, s, v, x1, x2, x3, x4) -> np.ndarray:
    """Batched feature computation; state arrays broadcast against m.

    t and n are scalars (lockstep batches share the clock); undefined
    statistics before any data default to 0 with the no-variance flag set.
    Output shape = broadcast shape + (22,), clamped to [-CLAMP, CLAMP].
    """
    y, s, v, x1, x2, x3, x4, m, lam_lo, lam_hi = np.broadcast_arrays(
        np.asarray(y, dtype=float), s, v, x1, x2, x3, x4, m, lam_lo, lam_hi)
    shape = y.shape
    z = np.zeros(shape)
    out = np.empty(shape + (FEATURE_DIM,))

    if t > 0:
        mu = x1 / t
        gap = mu - m
        vbar = v / t
        m2 = np.maximum(x2 / t - mu * mu, 0.0)
        sd = np.sqrt(m2)
        m3 = x3 / t - 3.0 * mu * x2 / t + 2.0 * mu**3
        m4 = x4 / t - 4.0 * mu * x3 / t + 6.0 * mu**2 * x2 / t - 3.0 * mu**4
        ok = sd > _VAR_TOL**0.5
        sd_safe = np.where(ok, sd, 1.0)
        skew = np.where(ok, m3 / sd_safe**3, 0.0)
        kurt = np.where(ok, m4 / sd_safe**4 - 3.0, 0.0)
        interior = ok & (mu > 0.0) & (mu < 1.0)
        kappa = np.where(interior, mu * (1.0 - mu) / np.where(ok, m2, 1.0) - 1.0, 1.0)
        log_kappa = np.where(interior, np.log(np.maximum(kappa, KAPPA0)), 0.0)
        lam_k = np.where(v > 0.0, np.clip(s / np.where(v > 0.0, v, 1.0), lam_lo, lam_hi), 0.0)
        lam_e = np.where(gap > 0.0, lam_hi, np.where(gap < 0.0, lam_lo, 0.0))
    else:
        mu = gap = vbar = m2 = skew = kurt = log_kappa = lam_k = lam_e = z

    req = (b - y) / max(n - t, 1)
    time_left = (n - 1 - t) / (n - 1) if n > 1 else 0.0
    gp_k = lam_k * gap - 0.5 * lam_k * lam_k * vbar
    gp_e = lam_e * gap - 0.5 * lam_e * lam_e * vbar

    cols = (
        gap, np.abs(gap), (b - y) / b, req, np.full(shape, time_left),
        vbar, m2, gap / np.sqrt(m2 + KAPPA0),
        lam_k, lam_e, lam_e - lam_k,
        gp_k, gp_e, gp_e - gp_k,
        skew, kurt, log_kappa,
        y, np.full(shape, np.log(n)), m, np.full(shape, t / n),
        (v == 0.0).astype(float),
    )
    for i, col in enumerate(cols):
        out[..., i] = col
    return np.clip(out, -CLAMP, CLAMP)


def features(state: WealthState, spec: NullSpec) -> np.ndarray:
    """Feature vector for a single wealth state."""
    lo, hi = spec.bet_range()
    return feature_matrix(
        state.t, spec.horizon_n, spec.threshold, spec.m, lo, hi,
        state.log_wealth, state.s_sum, state.v_sum,
        state.x_sum, state.x2_sum, state.x3_sum, state.x4_sum,
    )
