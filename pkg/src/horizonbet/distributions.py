"""Data-generating worlds and reproducible random streams.

Worlds are Bernoulli, Beta (parameterized by mean and concentration, or raw
shapes), a 50/50 two-component Beta mixture whose components share the mean,
and explicit finite-support distributions.  Streams are derived from a master
seed and an integer key path via numpy's SeedSequence, which gives
deterministic, statistically independent generators per consumer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from .ratefun import FiniteDist

__all__ = [
    "SeedSpec",
    "World",
    "SamplerRanges",
    "EpisodeConfig",
    "stream",
    "sample",
    "quantize",
    "sample_episode_config",
    "parse_world",
]


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus an integer key path identifying one consumer's stream."""

    master: int
    key: tuple[int, ...] = ()

    def child(self, *key: int) -> "SeedSpec":
        return SeedSpec(self.master, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))


def stream(master: int, *key: int) -> np.random.Generator:
    """Independent generator for (master, *key); same arguments, same stream."""
    return SeedSpec(int(master), tuple(int(k) for k in key)).generator()


@dataclass(frozen=True)
class World:
    """A distribution on [0,1] to draw observations from.

    kind is one of "bernoulli", "beta", "beta_mixture", "finite".  Beta worlds
    store the resolved base shapes (a, b); the mixture's second component is
    Beta(2a, 2b), which shares the mean a/(a+b).
    """

    kind: str
    mean: float
    conc: float | None = None
    a: float | None = None
    b: float | None = None
    dist: FiniteDist | None = None

    @classmethod
    def bernoulli(cls, p: float) -> "World":
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0,1]")
        return cls(kind="bernoulli", mean=float(p))

    @classmethod
    def beta(cls, mu: float, conc: float) -> "World":
        if not (0.0 < mu < 1.0) or conc <= 0.0:
            raise ValueError("need 0 < mu < 1 and conc > 0")
        return cls(kind="beta", mean=float(mu), conc=float(conc),
                   a=conc * mu, b=conc * (1.0 - mu))

    @classmethod
    def beta_ab(cls, a: float, b: float) -> "World":
        if a <= 0.0 or b <= 0.0:
            raise ValueError("shapes must be positive")
        return cls(kind="beta", mean=a / (a + b), conc=a + b, a=float(a), b=float(b))

    @classmethod
    def beta_mixture(cls, mu: float, conc: float) -> "World":
        if not (0.0 < mu < 1.0) or conc <= 0.0:
            raise ValueError("need 0 < mu < 1 and conc > 0")
        return cls(kind="beta_mixture", mean=float(mu), conc=float(conc),
                   a=conc * mu, b=conc * (1.0 - mu))

    @classmethod
    def finite(cls, dist: FiniteDist) -> "World":
        return cls(kind="finite", mean=dist.mean, dist=dist)

    def variance(self) -> float:
        """Analytic variance (mixture: law of total variance with equal means)."""
        if self.kind == "bernoulli":
            return self.mean * (1.0 - self.mean)
        if self.kind == "beta":
            return self.mean * (1.0 - self.mean) / (1.0 + self.conc)
        if self.kind == "beta_mixture":
            v = self.mean * (1.0 - self.mean)
            return 0.5 * v / (1.0 + self.conc) + 0.5 * v / (1.0 + 2.0 * self.conc)
        if self.kind == "finite":
            xs = self.dist.atoms_array()
            ps = self.dist.probs_array()
            return float(ps @ (xs - self.mean) ** 2)
        raise ValueError(f"unknown world kind {self.kind!r}")

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "beta":
            return stats.beta.cdf(x, self.a, self.b)
        if self.kind == "beta_mixture":
            return 0.5 * stats.beta.cdf(x, self.a, self.b) + \
                0.5 * stats.beta.cdf(x, 2.0 * self.a, 2.0 * self.b)
        raise ValueError(f"cdf not available for kind {self.kind!r}")


def sample(world: World, rng: np.random.Generator, size: int | tuple | None = None) -> np.ndarray:
    """Draw observations in [0,1] from a world."""
    if world.kind == "bernoulli":
        return (rng.random(size) < world.mean).astype(float)
    if world.kind == "beta":
        return rng.beta(world.a, world.b, size)
    if world.kind == "beta_mixture":
        pick = rng.random(size) < 0.5
        x1 = rng.beta(world.a, world.b, size)
        x2 = rng.beta(2.0 * world.a, 2.0 * world.b, size)
        return np.where(pick, x1, x2)
    if world.kind == "finite":
        return rng.choice(world.dist.atoms_array(), size=size, p=world.dist.probs_array())
    raise ValueError(f"unknown world kind {world.kind!r}")


def quantize(world: World, n_atoms: int = 101) -> FiniteDist:
    """Finite-support stand-in: atoms at the (i - 1/2)/n quantiles, probs 1/n.

    Finite worlds pass through unchanged.  Preserves the mean to O(1/n).
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    if world.kind == "finite":
        return world.dist
    if world.kind == "bernoulli":
        return FiniteDist.bernoulli(world.mean)
    qs = (np.arange(n_atoms) + 0.5) / n_atoms
    if world.kind == "beta":
        atoms = stats.beta.ppf(qs, world.a, world.b)
    else:
        atoms = np.array([brentq(lambda x, q=q: world.cdf(x) - q, 0.0, 1.0,
                                 xtol=1e-14) for q in qs])
    atoms = np.clip(atoms, 0.0, 1.0)
    # strictly increasing atoms required; merge numerically coincident ones
    uniq, counts = np.unique(atoms, return_counts=True)
    probs = counts / n_atoms
    return FiniteDist(tuple(uniq), tuple(probs))


@dataclass(frozen=True)
class SamplerRanges:
    """Ranges for the randomized problem sampler.

    In the default mode m is drawn first and the alternative mean is placed a
    difficulty-coupled distance away; with mu_range set, mu is drawn first and
    the null m is offset instead (used for the narrowed training family).
    sigma2_proxy is evaluated at the anchor mean: m(1-m)/(1+conc) for the Beta
    world and the average of the two component variances for the mixture.
    """

    n_range: tuple[float, float] = (100.0, 350.0)
    m_range: tuple[float, float] = (0.01, 0.99)
    c_range: tuple[float, float] = (0.70, 1.30)
    conc_range: tuple[float, float] = (0.1, 11.0)
    mu_clip: tuple[float, float] = (0.01, 0.99)
    alpha: float = 0.05
    mixture_prob: float = 0.5
    mu_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class EpisodeConfig:
    world: World
    n: int
    m: float
    mu: float
    conc: float
    kind: str


def _sigma2_proxy(anchor: float, conc: float, mixture: bool) -> float:
    v = anchor * (1.0 - anchor)
    if mixture:
        return 0.5 * v / (1.0 + conc) + 0.5 * v / (1.0 + 2.0 * conc)
    return v / (1.0 + conc)


def sample_episode_config(rng: np.random.Generator, ranges: SamplerRanges = SamplerRanges()) -> EpisodeConfig:
    """Draw (world, N, m) with the gap |mu - m| scaled so that problems at
    different horizons have comparable difficulty:

        |mu - m| = sqrt(2 * sigma2_proxy * c * log(1/alpha) / N).
    """
    lo, hi = ranges.n_range
    n = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
    mixture = rng.random() < ranges.mixture_prob
    conc = rng.uniform(*ranges.conc_range)
    c = rng.uniform(*ranges.c_range)
    sign = 1.0 if rng.random() < 0.5 else -1.0

    if ranges.mu_range is None:
        m = rng.uniform(*ranges.m_range)
        gap = math.sqrt(2.0 * _sigma2_proxy(m, conc, mixture) * c
                        * math.log(1.0 / ranges.alpha) / n)
        mu = min(max(m + sign * gap, ranges.mu_clip[0]), ranges.mu_clip[1])
    else:
        mu = rng.uniform(*ranges.mu_range)
        gap = math.sqrt(2.0 * _sigma2_proxy(mu, conc, mixture) * c
                        * math.log(1.0 / ranges.alpha) / n)
        m = min(max(mu + sign * gap, ranges.m_range[0]), ranges.m_range[1])

    world = World.beta_mixture(mu, conc) if mixture else World.beta(mu, conc)
    return EpisodeConfig(world=world, n=n, m=m, mu=mu, conc=conc, kind=world.kind)


def parse_world(desc: str) -> World:
    """Parse a world descriptor: "bern:0.6", "beta:mu=0.4,conc=6",
    "beta:a=2,b=6", "mix:mu=0.4,conc=1"."""
    name, _, rest = desc.partition(":")
    name = name.strip().lower()
    try:
        if name in ("bern", "bernoulli"):
            return World.bernoulli(float(rest))
        if name in ("beta", "mix", "mixture", "beta_mixture"):
            kv = {}
            for part in rest.split(","):
                k, _, v = part.partition("=")
                kv[k.strip()] = float(v)
            if name == "beta" and "a" in kv:
                return World.beta_ab(kv["a"], kv["b"])
            if name == "beta":
                return World.beta(kv["mu"], kv["conc"])
            return World.beta_mixture(kv["mu"], kv["conc"])
    except (ValueError, KeyError) as exc:
        raise ValueError(f"bad world descriptor {desc!r}: {exc}") from exc
    raise ValueError(f"unknown world kind in descriptor {desc!r}")
