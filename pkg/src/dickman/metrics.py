"""Kolmogorov distances: exact lattice-vs-model, empirical KS, interval probes.

For a lattice law W (right-continuous step CDF) against the continuous
increasing Dickman CDF F, the supremum of |F_W - F| over all thresholds is
attained either at an atom x_j (value F_W(x_j) - F(x_j)) or as a left limit
there (value F(x_j) - F_W(x_{j-1})), so scanning the atoms is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distribution import DickmanModel, cdf
from .errors import DomainError
from .lattice import LatticeDist


@dataclass
class DistanceReport:
    """Exact Kolmogorov distance with its numerical error budget.

    ``d_k`` is exact within +-``error_budget`` (CDF evaluation error twice,
    plus any truncated lattice mass).  ``side`` records whether the supremum
    is the right value ("right") or left limit ("left") at ``argmax_point``.
    """

    d_k: float
    error_budget: float
    argmax_point: float
    side: str

    def __post_init__(self):
        if not (0.0 <= self.d_k <= 1.0):
            raise DomainError("d_k must lie in [0, 1]")
        if self.error_budget < 0.0:
            raise DomainError("error_budget must be non-negative")
        if self.side not in ("left", "right"):
            raise DomainError("side must be 'left' or 'right'")

    def to_json(self) -> str:
        return json.dumps({"d_k": self.d_k, "error_budget": self.error_budget,
                           "argmax_point": self.argmax_point, "side": self.side})


def _support_and_cdf(dist: LatticeDist):
    xs = dist.support
    fw = np.cumsum(dist.pmf)
    return xs, fw


def kolmogorov_exact(dist: LatticeDist, model: DickmanModel,
                     offset: float = 0.0) -> DistanceReport:
    """Exact d_K between the lattice law (shifted by ``offset``) and the model.

    Requires the model domain to cover the support plus one unit.
    """
    xs, fw = _support_and_cdf(dist)
    if offset:
        xs = xs + offset
    if model.x_max < xs[-1] + 1.0:
        raise DomainError(
            f"model domain x_max={model.x_max} too short for support max {xs[-1]}")
    f_model = np.asarray(cdf(model, xs))
    right = fw - f_model                      # F_W(x_j) - F(x_j)
    left = f_model - np.concatenate(([0.0], fw[:-1]))  # F(x_j) - F_W(x_j^-)
    i_r = int(np.argmax(right))
    i_l = int(np.argmax(left))
    if right[i_r] >= left[i_l]:
        d_k, arg, side = float(right[i_r]), float(xs[i_r]), "right"
    else:
        d_k, arg, side = float(left[i_l]), float(xs[i_l]), "left"
    budget = 2.0 * model.cdf_error + dist.truncation_eps
    return DistanceReport(d_k=max(d_k, 0.0), error_budget=budget,
                          argmax_point=arg, side=side)


def ks_two_sample(a, b) -> float:
    """Classical two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise DomainError("ks_two_sample requires non-empty samples")
    everything = np.concatenate((a, b))
    ca = np.searchsorted(a, everything, side="right") / len(a)
    cb = np.searchsorted(b, everything, side="right") / len(b)
    return float(np.max(np.abs(ca - cb)))


def interval_probe(dist: LatticeDist, model: DickmanModel,
                   intervals=None) -> float:
    """Certified lower bound on d_K from open-interval probability gaps.

    max over intervals of |P{W in (lo,hi)} - P{D in (lo,hi)}| / 2; the
    default candidates are the support gap (0, j_min/n) and the lattice-free
    window (1 - 1/(2n), 1).
    """
    if intervals is None:
        n = dist.scale_n
        positive = np.nonzero(dist.pmf[1:] > 0.0)[0]
        j_min = int(positive[0]) + 1 if len(positive) else 1
        intervals = [(0.0, j_min / n), (1.0 - 0.5 / n, 1.0)]
    xs, _ = _support_and_cdf(dist)
    best = 0.0
    for lo, hi in intervals:
        if not (lo < hi):
            raise DomainError(f"interval ({lo}, {hi}) must satisfy lo < hi")
        inside = (xs > lo) & (xs < hi)
        p_w = float(np.sum(dist.pmf[inside]))
        p_d = float(cdf(model, hi)) - float(cdf(model, lo))
        best = max(best, abs(p_w - p_d) / 2.0)
    return best


def shifted_to_lattice(dist: LatticeDist, delta: float) -> LatticeDist:
    """Re-express W + delta on a finer common lattice (for shift inequalities).

    Requires delta to be a multiple of some 1/m with the combined lattice
    size staying exact in integers.
    """
    frac = delta * dist.scale_n
    # find a refinement r with r*frac integral (r up to 10^6)
    for refine in range(1, 1_000_001):
        if abs(frac * refine - round(frac * refine)) < 1e-9:
            break
    else:
        raise DomainError("delta is not commensurate with the lattice")
    shift = int(round(frac * refine))
    scale = dist.scale_n * refine
    pmf = np.zeros(refine * (len(dist.pmf) - 1) + 1 + shift)
    pmf[shift::refine][: len(dist.pmf)] = dist.pmf
    return LatticeDist(scale, pmf, truncation_eps=dist.truncation_eps)
