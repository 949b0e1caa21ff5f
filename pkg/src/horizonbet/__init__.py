"""horizonbet: anytime-valid betting tests and confidence sequences for
bounded means under a hard deadline.

Core pieces: the test-martingale wealth process and stopping rule (`core`),
predictable betting strategies (`strategies`), growth-rate / large-deviation
tools (`ratefun`), exact finite-horizon dynamic programming (`oracle`),
confidence sequences (`confseq`), data-generating worlds (`distributions`),
a vectorized Monte-Carlo harness (`experiments`), and a from-scratch
Double-DQN betting agent (`dqn`).
"""

__version__ = "0.1.0"

from .core import NullSpec, StopOutcome, Strategy, WealthState, bet_range, run_episode, wealth_update
from .ratefun import (
    FiniteDist,
    RegionReport,
    c_t_minus,
    c_t_plus,
    classify_region,
    growth,
    h,
    kelly_solve,
    quantization_bound,
    rate_minus,
    rate_plus,
)
from .strategies import (
    EmpiricalKelly,
    EndpointBet,
    EpsGreedy,
    HedgeBook,
    Schedule,
    default_schedule_grid,
    empirical_kelly,
    endpoint_bet,
    parse_strategy,
    population_kelly,
    run_hedge_episode,
)
from .oracle import DpGrid, PhaseDiagram, bellman_solve, hit_prob_exact, phase_export
from .confseq import CsResult, cs_run, lcb_curve
from .distributions import SamplerRanges, SeedSpec, World, quantize, sample, sample_episode_config, stream
from .experiments import VecSpec, make_vec_bettor, rejection_curve, simulate_hits

__all__ = [
    "NullSpec", "StopOutcome", "Strategy", "WealthState", "bet_range",
    "run_episode", "wealth_update",
    "FiniteDist", "RegionReport", "c_t_minus", "c_t_plus", "classify_region",
    "growth", "h", "kelly_solve", "quantization_bound", "rate_minus", "rate_plus",
    "EmpiricalKelly", "EndpointBet", "EpsGreedy", "HedgeBook", "Schedule",
    "default_schedule_grid", "empirical_kelly", "endpoint_bet", "parse_strategy",
    "population_kelly", "run_hedge_episode",
    "DpGrid", "PhaseDiagram", "bellman_solve", "hit_prob_exact", "phase_export",
    "CsResult", "cs_run", "lcb_curve",
    "SamplerRanges", "SeedSpec", "World", "quantize", "sample",
    "sample_episode_config", "stream",
    "VecSpec", "make_vec_bettor", "rejection_curve", "simulate_hits",
    "__version__",
]
