"""Quickselect comparison counts and weighted depths in random recursive trees.

Find-minimum Quickselect on a uniform random permutation: pick the first
element of the current group as pivot, compare it to every other element,
recurse on the group left of the pivot.  The comparison count has the exact
representation C_n = n - 1 + sum_{k=2..n} (k-2) A_k with independent record
indicators A_k ~ Ber(1/k); the two generators here implement both routes so
each serves as the other's distributional oracle.

The weighted depth of node n in a random recursive tree (node i+1 attaches
uniformly among 1..i) is the label sum along the root path; its re-scaled
law matches n + sum_{k<n} k B'_k with B'_k ~ Ber((1+beta)/(k+beta)) at
beta = 0, the uniform-attachment member of the simple-increasing-tree
family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .samplers import SeededRng


@dataclass
class QuickselectRun:
    n: int
    comparisons: int
    normalized: float = 0.0

    def __post_init__(self):
        if not (self.n - 1 <= self.comparisons <= self.n * (self.n - 1) // 2):
            raise DomainError(
                f"comparison count {self.comparisons} outside [n-1, n(n-1)/2]")
        self.normalized = self.comparisons / self.n - 1.0


@dataclass
class DepthRun:
    n: int
    beta: float
    weighted_depth: int
    normalized: float = 0.0

    def __post_init__(self):
        if self.weighted_depth < self.n:
            raise DomainError("weighted depth includes node n's own label")
        self.normalized = (self.weighted_depth - self.n) / self.n


def count_comparisons(values: np.ndarray) -> int:
    """Comparisons used by find-minimum Quickselect on this arrival order."""
    group = np.asarray(values)
    total = 0
    while len(group) >= 2:
        pivot = group[0]
        total += len(group) - 1
        group = group[1:][group[1:] < pivot]
    return total


def quickselect_direct(n: int, rng: SeededRng) -> QuickselectRun:
    """Simulate the algorithm on a fresh uniform permutation of {1..n}."""
    if n < 2:
        raise DomainError("quickselect needs n >= 2")
    gen = rng.generator()
    perm = gen.permutation(n) + 1
    return QuickselectRun(n=n, comparisons=count_comparisons(perm))


def quickselect_direct_many(n: int, runs: int, rng: SeededRng) -> np.ndarray:
    if n < 2:
        raise DomainError("quickselect needs n >= 2")
    gen = rng.generator()
    out = np.empty(runs, dtype=np.int64)
    for i in range(runs):
        out[i] = count_comparisons(gen.permutation(n) + 1)
    return out


def quickselect_records(n: int, rng: SeededRng) -> QuickselectRun:
    """Draw C_n from the record representation n-1 + sum (k-2) Ber(1/k)."""
    if n < 2:
        raise DomainError("quickselect needs n >= 2")
    gen = rng.generator()
    ks = np.arange(2, n + 1)
    hits = gen.random(n - 1) < 1.0 / ks
    return QuickselectRun(n=n, comparisons=int(n - 1 + np.dot(ks - 2, hits)))


def quickselect_records_many(n: int, runs: int, rng: SeededRng,
                             chunk: int = 256) -> np.ndarray:
    if n < 2:
        raise DomainError("quickselect needs n >= 2")
    gen = rng.generator()
    ks = np.arange(2, n + 1)
    inv = 1.0 / ks
    weights = (ks - 2).astype(float)
    out = np.empty(runs, dtype=np.int64)
    done = 0
    while done < runs:
        m = min(chunk, runs - done)
        hits = gen.random((m, n - 1)) < inv
        out[done:done + m] = n - 1 + (hits @ weights).astype(np.int64)
        done += m
    return out


def recursive_tree_depth(n: int, rng: SeededRng) -> DepthRun:
    """Grow a random recursive tree and sum the labels on node n's root path."""
    if n < 1:
        raise DomainError("tree needs n >= 1")
    gen = rng.generator()
    return DepthRun(n=n, beta=0.0,
                    weighted_depth=_tree_depth_one(n, gen))


def _tree_depth_one(n: int, gen) -> int:
    if n == 1:
        return 1
    # parents[i] = parent of node i+2, uniform on {1..i+1}
    parents = 1 + np.floor(gen.random(n - 1) * np.arange(1, n)).astype(np.int64)
    total = n
    node = n
    while node > 1:
        node = int(parents[node - 2])
        total += node
    return total


def recursive_tree_depth_many(n: int, runs: int, rng: SeededRng) -> np.ndarray:
    gen = rng.generator()
    return np.array([_tree_depth_one(n, gen) for _ in range(runs)], dtype=np.int64)


def weighted_depth_bernoulli(n: int, beta: float, rng: SeededRng) -> DepthRun:
    """Draw the weighted depth via n + sum_{k=1..n-1} k Ber((1+beta)/(k+beta))."""
    if n < 1:
        raise DomainError("tree needs n >= 1")
    if beta <= -1.0:
        raise DomainError("tree family needs beta > -1")
    gen = rng.generator()
    ks = np.arange(1, n)
    hits = gen.random(n - 1) < (1.0 + beta) / (ks + beta)
    return DepthRun(n=n, beta=beta, weighted_depth=int(n + np.dot(ks, hits)))


def weighted_depth_bernoulli_many(n: int, beta: float, runs: int,
                                  rng: SeededRng, chunk: int = 256) -> np.ndarray:
    if beta <= -1.0:
        raise DomainError("tree family needs beta > -1")
    gen = rng.generator()
    ks = np.arange(1, n)
    rates = (1.0 + beta) / (ks + beta)
    weights = ks.astype(float)
    out = np.empty(runs, dtype=np.int64)
    done = 0
    while done < runs:
        m = min(chunk, runs - done)
        hits = gen.random((m, n - 1)) < rates
        out[done:done + m] = n + (hits @ weights).astype(np.int64)
        done += m
    return out


def expected_comparisons(n: int) -> float:
    """E[C_n] = n - 1 + sum_{k=2..n} (k-2)/k (linearity oracle)."""
    ks = np.arange(2, n + 1, dtype=float)
    return n - 1 + float(np.sum((ks - 2) / ks))


def expected_weighted_depth(n: int, beta: float) -> float:
    """E[depth] = n + sum_{k<n} k (1+beta)/(k+beta)."""
    ks = np.arange(1, n, dtype=float)
    return n + float(np.sum(ks * (1.0 + beta) / (ks + beta)))
