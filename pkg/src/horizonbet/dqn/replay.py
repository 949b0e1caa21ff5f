"""Ring-buffer experience store with uniform no-replacement batch sampling."""

from __future__ import annotations

import numpy as np

__all__ = ["ReplayBuffer", "sample_without_replacement"]


def sample_without_replacement(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """k distinct uniform indices from range(n) via Floyd's algorithm, O(k)."""
    if k > n:
        raise ValueError(f"cannot draw {k} distinct indices from {n}")
    chosen: set[int] = set()
    out = np.empty(k, dtype=np.int64)
    pos = 0
    for j in range(n - k, n):
        t = int(rng.integers(0, j + 1))
        if t in chosen:
            t = j
        chosen.add(t)
        out[pos] = t
        pos += 1
    return out


class ReplayBuffer:
    """FIFO transition store (features, action, reward, next features, done).

    Features are held as float32 to keep the default 3.2M-capacity buffer in
    memory; samples are returned as float64 batches for the optimizer.
    """

    def __init__(self, capacity: int, feat_dim: int):
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, feat_dim), dtype=np.float32)
        self.s2 = np.zeros((capacity, feat_dim), dtype=np.float32)
        self.a = np.zeros(capacity, dtype=np.int8)
        self.r = np.zeros(capacity, dtype=np.float32)
        self.done = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.pos = 0

    def add_batch(self, s, a, r, s2, done) -> None:
        k = len(a)
        idx = (self.pos + np.arange(k)) % self.capacity
        self.s[idx] = s
        self.a[idx] = a
        self.r[idx] = r
        self.s2[idx] = s2
        self.done[idx] = done
        self.pos = int((self.pos + k) % self.capacity)
        self.size = min(self.size + k, self.capacity)

    def sample(self, rng: np.random.Generator, batch: int):
        idx = sample_without_replacement(rng, self.size, batch)
        return (
            self.s[idx].astype(np.float64),
            self.a[idx].astype(np.int64),
            self.r[idx].astype(np.float64),
            self.s2[idx].astype(np.float64),
            self.done[idx].astype(np.float64),
        )
