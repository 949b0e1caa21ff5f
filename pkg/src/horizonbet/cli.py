"""Command-line surface: test | phase | rates | cs | train-dqn | eval-dqn.

Every output file starts with a provenance header carrying the full
experiment spec (command, parameters, seed, artifact version); re-running
that spec reproduces the file byte for byte.  Exit codes: 0 success,
2 usage error, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .confseq import cs_run, default_grid, lcb_curve
from .distributions import SamplerRanges, SeedSpec, World, parse_world, quantize, sample
from .experiments import VecSpec, make_vec_bettor, rejection_curve, run_lockstep, simulate_hits
from .oracle import bellman_solve, phase_export
from .ratefun import c_t_minus, c_t_plus, classify_region, rate_minus, rate_plus
from .dqn import TrainConfig, desk_scale_ranges, evaluate_policy, load_checkpoint, \
    save_checkpoint, train, write_metrics_csv, VecDqn

__all__ = ["main"]

OUTPUT_DIR_ENV = "HORIZONBET_OUT"


class UsageError(Exception):
    pass


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce a command's output."""

    command: str
    params: dict
    seed: int

    def provenance(self) -> dict:
        return {
            "artifact": "horizonbet",
            "version": __version__,
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
        }

    def header_line(self) -> str:
        return "# provenance: " + json.dumps(self.provenance(), sort_keys=True)


def parse_provenance_header(line: str) -> dict:
    """Inverse of header_line(); raises ValueError on malformed headers."""
    prefix = "# provenance: "
    if not line.startswith(prefix):
        raise ValueError("not a provenance header")
    return json.loads(line[len(prefix):])


def _resolve_out(path: str | None, default_name: str) -> Path:
    if path:
        return Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV, ".")
    return Path(base) / default_name


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_or_usage(parser_fn, token: str, what: str):
    try:
        return parser_fn(token)
    except ValueError as exc:
        raise UsageError(f"invalid {what} {token!r}: {exc}") from exc


def _spec_params(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def cmd_test(args) -> int:
    world = _parse_or_usage(parse_world, args.world, "world descriptor")
    bettor = _parse_or_usage(
        lambda s: make_vec_bettor(s, horizon_n=args.n), args.strategy, "strategy descriptor")
    spec = ExperimentSpec("test", _spec_params(
        args, ["world", "strategy", "m", "alpha", "n", "runs", "format", "threads"]), args.seed)
    vspec = VecSpec(m=args.m, alpha=args.alpha, horizon_n=args.n, clip_eps=args.clip_eps)
    lines = [spec.header_line(), "t,rejection_frac,se"]
    if args.runs > 0:
        rows = rejection_curve(world, vspec, bettor, args.runs, SeedSpec(args.seed))
        for t, frac, se in rows:
            lines.append(f"{int(t)},{frac:.8f},{se:.8f}")
    out = _resolve_out(args.out, "rejection_curve.csv")
    _write_atomic(out, "\n".join(lines) + "\n")
    print(out)
    return 0


def cmd_phase(args) -> int:
    world = _parse_or_usage(parse_world, args.world, "world descriptor")
    from .core import NullSpec

    spec = ExperimentSpec("phase", _spec_params(
        args, ["world", "m", "alpha", "n", "atoms", "ystep", "tstride", "ycell"]), args.seed)
    dist = quantize(world, args.atoms)
    nspec = NullSpec(m=args.m, alpha=args.alpha, horizon_n=args.n, clip_eps=args.clip_eps)
    grid = bellman_solve(dist, nspec, y_step=args.ystep)
    y_cell = args.ycell if args.ycell > 0 else None
    text = phase_export(grid, y_cell=y_cell, t_stride=args.tstride,
                        header=spec.header_line())
    out = _resolve_out(args.out, "phase.csv")
    _write_atomic(out, text)
    print(out)
    return 0


def cmd_rates(args) -> int:
    from .core import NullSpec

    world = _parse_or_usage(parse_world, args.world, "world descriptor")
    dist = quantize(world, args.atoms)
    nspec = NullSpec(m=args.m, alpha=args.alpha, horizon_n=args.n, clip_eps=args.clip_eps)
    spec = ExperimentSpec("rates", _spec_params(
        args, ["world", "m", "alpha", "n", "t", "y", "lam", "delta", "rho", "atoms"]), args.seed)
    report = classify_region(dist, nspec, args.t, args.y, delta=args.delta, rho=args.rho)
    rates = {}
    for lam in args.lam or []:
        rates[f"{lam:g}"] = {
            "rate_plus": rate_plus(dist, lam, args.m, report.r),
            "rate_minus": rate_minus(dist, lam, args.m, report.r),
        }
    remaining = max(report.remaining, 2)
    payload = {
        "provenance": spec.provenance(),
        "region": report.to_dict(),
        "rates_at_r": rates,
        "corrections": {
            "c_t_plus": c_t_plus(remaining, dist.k, dist.p_min),
            "c_t_minus": c_t_minus(remaining, dist.k, dist.p_min),
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"
    out = _resolve_out(args.out, "rates.json")
    _write_atomic(out, text)
    print(out)
    return 0


def cmd_cs(args) -> int:
    world = _parse_or_usage(parse_world, args.world, "world descriptor")
    _parse_or_usage(lambda s: make_vec_bettor(s, horizon_n=args.n),
                    args.strategy, "strategy descriptor")
    spec = ExperimentSpec("cs", _spec_params(
        args, ["world", "strategy", "n", "alpha", "runs", "grid"]), args.seed)
    root = SeedSpec(args.seed)
    grid = default_grid(args.grid)
    lows = np.zeros((args.runs, args.n + 1))
    ups = np.zeros((args.runs, args.n + 1))
    for i in range(args.runs):
        xs = sample(world, root.child(10, i).generator(), args.n)
        res = cs_run(xs, alpha=args.alpha, strategy=args.strategy, grid=grid,
                     seed=root.child(11, i), clip_eps=args.clip_eps)
        lows[i] = np.where(res.empty, np.nan, res.lower)
        ups[i] = np.where(res.empty, np.nan, res.upper)

    lines = [spec.header_line(), "n,lower,upper,width"]
    with np.errstate(invalid="ignore"):
        mlo = np.nanmean(lows, axis=0)
        mup = np.nanmean(ups, axis=0)
    for n in range(args.n + 1):
        lines.append(f"{n},{mlo[n]:.8f},{mup[n]:.8f},{mup[n] - mlo[n]:.8f}")
    out = _resolve_out(args.out, "cs_width.csv")
    _write_atomic(out, "\n".join(lines) + "\n")

    xs_grid = np.linspace(0.0, 1.0, args.lcb_points)
    curve = lcb_curve(lows[:, -1], xs_grid)
    lcb_lines = [spec.header_line(), "x,fraction"]
    for x, frac in curve:
        lcb_lines.append(f"{x:.8f},{frac:.8f}")
    lcb_out = _resolve_out(args.lcb_out, "cs_lcb_ecdf.csv")
    _write_atomic(lcb_out, "\n".join(lcb_lines) + "\n")
    print(out)
    print(lcb_out)
    return 0


def _ranges_from_args(args) -> SamplerRanges:
    if args.family == "desk":
        return desk_scale_ranges()
    return SamplerRanges()


def cmd_train_dqn(args) -> int:
    cfg = TrainConfig(
        episodes=args.episodes, lr=args.lr, batch_size=args.batch_size,
        min_buffer=args.min_buffer, target_update=args.target_update,
        eps0=args.eps0, eps_min=args.eps_min, eps_decay=args.eps_decay,
        buffer_capacity=args.buffer_capacity, envs_per_batch=args.envs_per_batch,
        train_every=args.train_every, eval_every=args.eval_every,
        eval_episodes=args.eval_episodes, alpha=args.alpha, clip_eps=args.clip_eps,
    )
    if args.desk_scale:
        cfg = cfg.desk_scale()
    ranges = _ranges_from_args(args)
    spec = ExperimentSpec("train-dqn", {"episodes": args.episodes,
                                        "family": args.family}, args.seed)
    progress = (lambda row: print(json.dumps(row))) if args.verbose else None
    result = train(cfg, ranges, SeedSpec(args.seed), metrics_path=None,
                   progress=progress)
    out = _resolve_out(args.out, "dqn_checkpoint")
    manifest = save_checkpoint(result.best_net, out, extra={
        "provenance": spec.provenance(),
        "best_eval_hit_rate": result.best_eval,
        "best_episode": result.best_episode,
        "episodes": result.episodes_done,
    })
    if args.metrics:
        write_metrics_csv(result.metrics, args.metrics)
    print(manifest)
    return 0


def cmd_eval_dqn(args) -> int:
    world = _parse_or_usage(parse_world, args.world, "world descriptor")
    net, _manifest = load_checkpoint(args.checkpoint)
    spec = ExperimentSpec("eval-dqn", _spec_params(
        args, ["checkpoint", "world", "m", "alpha", "n", "runs"]), args.seed)
    vspec = VecSpec(m=args.m, alpha=args.alpha, horizon_n=args.n, clip_eps=args.clip_eps)
    res = simulate_hits(world, vspec, VecDqn(net), args.runs, SeedSpec(args.seed))
    rate = res.hit_rate()
    payload = {
        "provenance": spec.provenance(),
        "hit_rate": rate,
        "se": math.sqrt(rate * (1.0 - rate) / args.runs) if args.runs else 0.0,
        "runs": args.runs,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    out = _resolve_out(args.out, "dqn_eval.json")
    _write_atomic(out, text)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="horizonbet",
        description="Horizon-aware anytime-valid betting tests and confidence sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runs_default=1000):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="recorded for provenance; execution is single-process")
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--clip-eps", dest="clip_eps", type=float, default=1e-3)
        return p

    p = common(sub.add_parser("test", help="rejection-by-time curve"))
    p.add_argument("--world", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_test)

    p = common(sub.add_parser("phase", help="optimal-action phase diagram CSV"))
    p.add_argument("--world", required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--atoms", type=int, default=101)
    p.add_argument("--ystep", type=float, default=0.01)
    p.add_argument("--tstride", type=int, default=1)
    p.add_argument("--ycell", type=float, default=0.1,
                   help="diagram cell height in nats; <= 0 exports raw DP cells")
    p.set_defaults(func=cmd_phase)

    p = common(sub.add_parser("rates", help="region report and rate functions as JSON"))
    p.add_argument("--world", required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--lam", type=float, action="append")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--atoms", type=int, default=101)
    p.set_defaults(func=cmd_rates)

    p = common(sub.add_parser("cs", help="confidence-sequence widths and LCB ECDF"))
    p.add_argument("--world", required=True)
    p.add_argument("--strategy", default="kelly")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--grid", type=int, default=999)
    p.add_argument("--lcb-points", dest="lcb_points", type=int, default=201)
    p.add_argument("--lcb-out", dest="lcb_out", type=str, default=None)
    p.set_defaults(func=cmd_cs)

    p = common(sub.add_parser("train-dqn", help="train the betting agent"))
    p.add_argument("--episodes", type=int, default=20_000)
    p.add_argument("--family", choices=["desk", "table1"], default="desk")
    p.add_argument("--desk-scale", dest="desk_scale", action="store_true",
                   help="rescale the exploration decay to the episode budget")
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=512)
    p.add_argument("--min-buffer", dest="min_buffer", type=int, default=40_000)
    p.add_argument("--target-update", dest="target_update", type=int, default=1000)
    p.add_argument("--eps0", type=float, default=1.0)
    p.add_argument("--eps-min", dest="eps_min", type=float, default=0.02)
    p.add_argument("--eps-decay", dest="eps_decay", type=float, default=0.99998)
    p.add_argument("--buffer-capacity", dest="buffer_capacity", type=int, default=3_200_000)
    p.add_argument("--envs-per-batch", dest="envs_per_batch", type=int, default=64)
    p.add_argument("--train-every", dest="train_every", type=int, default=64)
    p.add_argument("--eval-every", dest="eval_every", type=int, default=1000)
    p.add_argument("--eval-episodes", dest="eval_episodes", type=int, default=4000)
    p.add_argument("--metrics", type=str, default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train_dqn)

    p = common(sub.add_parser("eval-dqn", help="greedy hit rate of a checkpoint"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--world", required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--runs", type=int, default=5000)
    p.set_defaults(func=cmd_eval_dqn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
