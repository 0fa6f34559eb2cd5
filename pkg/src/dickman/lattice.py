"""Exact finite-support laws of weighted Bernoulli/Poisson sums.

A weighted sum (1/n) * sum_{k=l..n} k X_k lives on the lattice {j/n}; its
law is built by sequential convolution of the per-summand shift mixtures.
Bernoulli laws are exact (no mass discarded).  Poisson summands are
truncated: each P_k keeps counts up to m_k chosen by a Chernoff bound with
an equal split of the tail budget, and a thousandth share of the budget is
spent trimming trailing atoms whose combined mass is negligible, which keeps
the support linear in n instead of quadratic.  All discarded mass is
measured and recorded in ``truncation_eps``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError
from .samplers import SumSpec

_MAX_ATOMS = 80_000_000
_BINARY_MAGIC = b"DKLT"


@dataclass
class LatticeDist:
    """PMF on {j/scale_n : j = 0..j_max} plus the discarded-mass budget."""

    scale_n: int
    pmf: np.ndarray
    truncation_eps: float = 0.0

    def __post_init__(self):
        self.pmf = np.asarray(self.pmf, dtype=float)
        if self.scale_n < 1:
            raise DomainError("scale_n must be a positive integer")
        if self.pmf.ndim != 1 or len(self.pmf) == 0:
            raise DomainError("pmf must be a non-empty 1-d array")
        if np.any(self.pmf < 0.0):
            raise DomainError("pmf entries must be non-negative")
        if self.truncation_eps < 0.0:
            raise DomainError("truncation_eps must be non-negative")
        total = float(np.sum(self.pmf)) + self.truncation_eps
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"pmf mass + truncation_eps = {total!r}, expected 1")

    @property
    def support(self) -> np.ndarray:
        """Atom locations j / scale_n."""
        return np.arange(len(self.pmf)) / self.scale_n

    @property
    def support_max(self) -> float:
        return (len(self.pmf) - 1) / self.scale_n

    def mean(self) -> float:
        """Mean of the (possibly sub-probability) retained mass."""
        return float(np.dot(self.support, self.pmf))


def convolve_shift_mixture(dist: LatticeDist, step: int, probs) -> LatticeDist:
    """Law of X + step * M where P{M = i} = probs[i], X ~ dist.

    out[j] = sum_i probs[i] * in[j - i*step], accumulated with Kahan
    compensation so per-atom error stays below 1e-15 * (number of steps).
    """
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0.0):
        raise DomainError("mixture probabilities must be non-negative")
    total_p = float(np.sum(probs))
    if total_p > 1.0 + 1e-12:
        raise DomainError("mixture probabilities must sum to at most 1")
    if step < 1:
        raise DomainError("step must be a positive integer")
    n_in = len(dist.pmf)
    out_len = n_in + step * (len(probs) - 1)
    if out_len > _MAX_ATOMS:
        raise ResourceError(f"convolution support {out_len} atoms exceeds cap")

    if len(probs) == 2:
        # two-term mixture: one rounding per atom, no compensation needed
        out = dist.pmf * probs[0]
        out = np.concatenate((out, np.zeros(step)))
        out[step:] += dist.pmf * probs[1]
    else:
        out = np.zeros(out_len)
        comp = np.zeros(out_len)
        for i, p in enumerate(probs):
            if p == 0.0:
                continue
            sl = slice(i * step, i * step + n_in)
            term = dist.pmf * p - comp[sl]
            fresh = out[sl] + term
            comp[sl] = (fresh - out[sl]) - term
            out[sl] = fresh

    eps = dist.truncation_eps + (1.0 - total_p) * (1.0 - dist.truncation_eps)
    return LatticeDist(dist.scale_n, out, truncation_eps=max(eps, 0.0))


def exact_bernoulli(spec: SumSpec) -> LatticeDist:
    """Exact law of the scaled sum n*W_n = sum_{k=l..n} k B_k, B_k ~ Ber(theta/(k+beta)).

    Performs the same per-atom arithmetic as chained two-term
    convolve_shift_mixture calls, but in two preallocated buffers (the
    support reaches n(n+1)/2 atoms, so per-step reallocation dominates
    otherwise).
    """
    if spec.family != "bernoulli":
        raise DomainError(f"exact_bernoulli needs a bernoulli spec, got {spec.family}")
    total = sum(range(spec.l, spec.n + 1)) + 1
    if total > _MAX_ATOMS:
        raise ResourceError(f"support of {total} atoms exceeds cap")
    buf = np.zeros(total)
    tmp = np.empty(total)
    buf[0] = 1.0
    length = 1
    for k in range(spec.l, spec.n + 1):
        p = spec.theta / (k + spec.beta)
        if not (0.0 <= p <= 1.0):
            raise DomainError(f"success probability {p} outside [0,1] at k={k}")
        np.copyto(tmp[:length], buf[:length])
        buf[:length] *= 1.0 - p
        tmp[:length] *= p
        buf[k:length + k] += tmp[:length]
        length += k
    return LatticeDist(spec.n, buf[:length], truncation_eps=0.0)


def _poisson_count_cap(lam: float, budget: float) -> int:
    """Smallest m with Chernoff bound exp(-lam)*(e*lam/(m+1))^(m+1) <= budget."""
    m = max(int(lam), 0)
    while True:
        t = m + 1
        log_tail = -lam + t * (1.0 + math.log(lam) - math.log(t)) if lam > 0 else -math.inf
        if log_tail <= math.log(budget):
            return m
        m += 1
        if m > 4000:
            raise ResourceError("Poisson truncation did not reach the budget")


def exact_poisson(spec: SumSpec, tail_budget: float = 1e-10) -> LatticeDist:
    """Law of n*W_n = sum_{k=l..n} k P_k, P_k ~ Poi(theta/(k+beta)), truncated.

    Each summand keeps counts 0..m_k (Chernoff cap at budget
    tail_budget/(2*steps)); after each convolution the trailing atoms worth
    at most tail_budget/(1000*steps) are dropped.  truncation_eps is the
    measured total discarded mass, <= tail_budget by construction.
    """
    if spec.family != "poisson":
        raise DomainError(f"exact_poisson needs a poisson spec, got {spec.family}")
    if tail_budget < 1e-12:
        raise DomainError("tail_budget below the supported floor 1e-12")
    steps = spec.n - spec.l + 1
    count_budget = tail_budget / (2.0 * steps)
    trim_budget = tail_budget / (1000.0 * steps)

    dist = LatticeDist(spec.n, np.array([1.0]))
    for k in range(spec.l, spec.n + 1):
        lam = spec.theta / (k + spec.beta)
        if lam <= 0.0:
            raise DomainError(f"Poisson mean {lam} not positive at k={k}")
        m_k = _poisson_count_cap(lam, count_budget)
        counts = np.arange(m_k + 1)
        with np.errstate(divide="ignore"):
            log_p = -lam + counts * math.log(lam) - np.cumsum(
                np.log(np.maximum(counts, 1)))
        probs = np.exp(log_p)
        dist = convolve_shift_mixture(dist, k, probs)
        # trim trailing atoms whose combined mass is below the trim budget
        rev_tail = np.cumsum(dist.pmf[::-1])[::-1]
        keep = np.nonzero(rev_tail > trim_budget)[0]
        cut = int(keep[-1]) + 1 if len(keep) else 1
        if cut < len(dist.pmf):
            dist = LatticeDist(spec.n, dist.pmf[:cut],
                               truncation_eps=dist.truncation_eps
                               + float(np.sum(dist.pmf[cut:])))
    # recompute the discarded mass from the retained total (single source of truth)
    eps = max(0.0, 1.0 - float(np.sum(dist.pmf)))
    dist.truncation_eps = eps
    if eps > tail_budget:
        raise ResourceError(f"discarded mass {eps:.3e} exceeded budget {tail_budget:.3e}")
    return dist


def expected_scaled_mean(spec: SumSpec) -> float:
    """Linearity oracle: E[n W_n] = sum_k k * theta/(k+beta) for both families."""
    ks = np.arange(spec.l, spec.n + 1, dtype=float)
    return float(np.sum(ks * spec.theta / (ks + spec.beta)))


# ---------------------------------------------------------------------------
# export formats: CSV (j, j/n, pmf) and compact little-endian binary
# ---------------------------------------------------------------------------

def to_csv(dist: LatticeDist, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# scale_n={dist.scale_n} truncation_eps={dist.truncation_eps!r}\n")
        fh.write("j,x,pmf\n")
        for j, p in enumerate(dist.pmf):
            fh.write(f"{j},{j / dist.scale_n!r},{float(p)!r}\n")


def from_csv(path) -> LatticeDist:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise DomainError("missing lattice CSV header")
        meta = dict(kv.split("=") for kv in header[1:].split())
        fh.readline()  # column names
        pmf = [float(line.rstrip("\n").split(",")[2]) for line in fh if line.strip()]
    return LatticeDist(int(meta["scale_n"]), np.array(pmf),
                       truncation_eps=float(meta["truncation_eps"]))


def to_binary(dist: LatticeDist, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<IQd", 1, dist.scale_n, dist.truncation_eps))
        fh.write(struct.pack("<Q", len(dist.pmf)))
        fh.write(dist.pmf.astype("<f8").tobytes())


def from_binary(path) -> LatticeDist:
    with open(path, "rb") as fh:
        if fh.read(4) != _BINARY_MAGIC:
            raise DomainError("not a lattice binary file")
        version, scale_n, eps = struct.unpack("<IQd", fh.read(20))
        if version != 1:
            raise DomainError(f"unsupported lattice binary version {version}")
        (count,) = struct.unpack("<Q", fh.read(8))
        pmf = np.frombuffer(fh.read(8 * count), dtype="<f8").copy()
    return LatticeDist(scale_n, pmf, truncation_eps=eps)
