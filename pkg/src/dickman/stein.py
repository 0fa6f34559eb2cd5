"""Averaging operator, fixed-point series and derivative diagnostics.

The averaging operator is A_{theta,x} g = E[g(U^(1/theta) x)], i.e.
(theta/x^theta) int_0^x g(u) u^(theta-1) du for x > 0 and g(0) at x = 0.

For the indicator test function h(x) = 1(x <= a) with centered version
htilde = h - F(a), the transported solution

    g = htilde + sum_{k>=0} T^k psi0,     T g (x) = A_{theta,x+1} g,

is built by iterating T on the closed Lipschitz form
psi0(x) = A_{theta,x+1} htilde = min{1, (a/(x+1))^theta} - F(a), never on the
discontinuous htilde itself, so every quadrature sees piecewise-smooth data.
Then f(x) = A_x g solves (x/theta) f'(x) + f(x) - f(x+1) = htilde(x) away
from a, and splits as f = f1 + f2 with the closed form
f1(x) = min{1, a^theta/x^theta} - F(a) and a C^1 remainder f2.

All weighted integrals int u^(theta-1) * (piecewise polynomial) use
Gauss-Jacobi (weight exact) or Gauss-Legendre panels (polynomial exact), so
per-term error is the Chebyshev fit truncation only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .distribution import DickmanModel, cdf
from .errors import AccuracyError, DomainError
from .numerics import (
    MonotoneTable,
    cheb_fit_matrix,
    cheb_nodes_unit,
    gauss_jacobi_01,
    integrate_adaptive,
)
from .samplers import SeededRng

_DEG = 24
_GRID_STEP = 1.0 / 512.0
_MAX_TERMS = 200


# ---------------------------------------------------------------------------
# weighted piecewise machinery
# ---------------------------------------------------------------------------

class _WeightedMesh:
    """Piecewise-Chebyshev workspace with u^(theta-1)-weighted integrals.

    Node positions, quadrature weights and fit matrices are precomputed once;
    iterations only exchange coefficient arrays.
    """

    def __init__(self, theta: float, breaks: np.ndarray, deg: int = _DEG):
        self.theta = theta
        self.deg = deg
        self.breaks = breaks
        self.n_pieces = len(breaks) - 1
        nodes01 = cheb_nodes_unit(deg)
        widths = np.diff(breaks)
        # Chebyshev nodes of every piece (fit points)
        self.fit_nodes = breaks[:-1, None] + widths[:, None] * nodes01[None, :]
        self.fit_matrix = cheb_fit_matrix(deg)
        # quadrature nodes/weights per piece, weight u^(theta-1) folded in
        glx, glw = np.polynomial.legendre.leggauss(48)
        glx = (glx + 1.0) / 2.0
        glw = glw / 2.0
        ju, jw = gauss_jacobi_01(theta)
        qn = np.empty((self.n_pieces, 48))
        qw = np.empty((self.n_pieces, 48))
        for p in range(self.n_pieces):
            a, b = breaks[p], breaks[p + 1]
            if a == 0.0:
                qn[p] = b * ju
                qw[p] = b**theta * jw
            else:
                u = a + (b - a) * glx
                qn[p] = u
                qw[p] = (b - a) * glw * u ** (theta - 1.0)
        self.quad_nodes = qn
        self.quad_weights = qw
        self._glx, self._glw = glx, glw
        self._ju, self._jw = ju, jw

    def coefs_from_values(self, values: np.ndarray) -> np.ndarray:
        """(n_pieces, deg+1) values at fit nodes -> Chebyshev coefficients."""
        return values @ self.fit_matrix.T

    def eval_pieces(self, coefs: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1,
                      0, self.n_pieces - 1)
        out = np.empty_like(x)
        for p in np.unique(idx):
            sel = idx == p
            a, b = self.breaks[p], self.breaks[p + 1]
            t = (2.0 * x[sel] - (a + b)) / (b - a)
            out[sel] = _cheb.chebval(t, coefs[p])
        return out

    def piece_integrals(self, coefs: np.ndarray) -> np.ndarray:
        """int over each piece of u^(theta-1) * psi(u) du (quadrature-exact)."""
        vals = np.empty_like(self.quad_nodes)
        for p in range(self.n_pieces):
            a, b = self.breaks[p], self.breaks[p + 1]
            t = (2.0 * self.quad_nodes[p] - (a + b)) / (b - a)
            vals[p] = _cheb.chebval(t, coefs[p])
        return np.sum(self.quad_weights * vals, axis=1)

    def weighted_cumulative(self, coefs: np.ndarray):
        """Prefix integrals at breaks; returns a callable I(y) for y in domain."""
        prefix = np.concatenate(([0.0], np.cumsum(self.piece_integrals(coefs))))

        def integral(y: np.ndarray) -> np.ndarray:
            y = np.atleast_1d(np.asarray(y, dtype=float))
            idx = np.clip(np.searchsorted(self.breaks, y, side="right") - 1,
                          0, self.n_pieces - 1)
            out = np.empty_like(y)
            for p in np.unique(idx):
                sel = idx == p
                ys = y[sel]
                a, b = self.breaks[p], self.breaks[p + 1]
                if a == 0.0:
                    pts = ys[:, None] * self._ju[None, :]
                    t = (2.0 * pts - (a + b)) / (b - a)
                    vals = _cheb.chebval(t, coefs[p])
                    part = ys**self.theta * (vals @ self._jw)
                else:
                    pts = a + (ys[:, None] - a) * self._glx[None, :]
                    t = (2.0 * pts - (a + b)) / (b - a)
                    vals = _cheb.chebval(t, coefs[p]) * pts ** (self.theta - 1.0)
                    part = (ys - a) * (vals @ self._glw)
                out[sel] = prefix[p] + part
            return out

        return integral


def _series_mesh(theta: float, a: float | None, length: float) -> np.ndarray:
    pts = list(np.arange(0.0, math.ceil(length) + 1.0))
    if a is not None:
        kink = a - 1.0
        while kink > 1e-9:
            if kink < length:
                pts.append(kink)
            kink -= 1.0
    pts = np.unique(np.round(np.asarray(pts), 12))
    return pts[pts <= math.ceil(length) + 0.5]


# ---------------------------------------------------------------------------
# solution object
# ---------------------------------------------------------------------------

@dataclass
class SteinSolution:
    """Series solution for one test function, with certified tail bound."""

    theta: float
    a: float | None
    grid: MonotoneTable
    f_table: MonotoneTable
    series_terms_used: int
    term_tail_bound: float
    mode: str = "indicator"
    term_sups: list = field(default_factory=list, repr=False)
    _mesh: _WeightedMesh = field(default=None, repr=False)
    _sum_coefs: np.ndarray = field(default=None, repr=False)
    _sum_integral: object = field(default=None, repr=False)
    _model: DickmanModel = field(default=None, repr=False)
    _x_upper: float = 0.0

    # -- centered test function and closed forms ---------------------------

    def h_tilde(self, x):
        x = np.asarray(x, dtype=float)
        if self.mode == "indicator":
            return (x <= self.a).astype(float) - float(cdf(self._model, self.a))
        if self.mode == "identity":
            return x - self.theta
        return np.zeros_like(x)

    def f1(self, x):
        """Closed-form part A_x h_tilde; for diagnostics modes this is A_x h_tilde too."""
        x = np.asarray(x, dtype=float)
        th = self.theta
        if self.mode == "indicator":
            fa = float(cdf(self._model, self.a))
            # min{1, (a/x)^theta}: the unit branch covers all x <= a
            out = np.full_like(x, 1.0 - fa)
            past = x > self.a
            out[past] = (self.a / x[past]) ** th - fa
            return out
        if self.mode == "identity":
            return np.where(x > 0.0, th * x / (th + 1.0) - th, -th)
        return np.zeros_like(x)

    def f1_prime(self, x):
        x = np.asarray(x, dtype=float)
        th = self.theta
        if self.mode == "indicator":
            return np.where(x > self.a, -th * self.a**th / x ** (th + 1.0), 0.0)
        if self.mode == "identity":
            return np.full_like(x, th / (th + 1.0))
        return np.zeros_like(x)

    # -- series pieces ------------------------------------------------------

    def series_sum(self, x):
        """sum_k psi_k(x) = g(x) - h_tilde(x)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._mesh.eval_pieces(self._sum_coefs, x)

    def g(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.h_tilde(x_arr) + self.series_sum(x_arr)
        return out if np.ndim(x) else float(out[0])

    def f2(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x_arr)
        zero = x_arr == 0.0
        out[zero] = self.series_sum(np.array([0.0]))[0]
        pos = ~zero
        if np.any(pos):
            xp = x_arr[pos]
            out[pos] = self.theta * xp ** (-self.theta) * self._sum_integral(xp)
        return out if np.ndim(x) else float(out[0])

    def f(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x_arr)
        zero = x_arr == 0.0
        if np.any(zero):
            out[zero] = self.g(0.0)  # A_0 g = g(0)
        pos = ~zero
        if np.any(pos):
            out[pos] = self.f1(x_arr[pos]) + self.f2(x_arr[pos])
        return out if np.ndim(x) else float(out[0])

    def f_prime(self, x):
        """f'(x) = (theta/x) (g(x) - A_x g); avoids differencing across the kink."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x_arr <= 0.0):
            raise DomainError("f_prime requires x > 0")
        out = (self.theta / x_arr) * (self.g(x_arr) - self.f(x_arr))
        return out if np.ndim(x) else float(out[0])


def _solve_series(model: DickmanModel, mode: str, a: float | None,
                  tol: float, x_upper: float, max_terms: int) -> SteinSolution:
    theta = model.theta
    r = theta / (theta + 1.0)
    lip = {"indicator": theta, "identity": r, "constant": 0.0}[mode]

    # a-priori term count from the Lipschitz tail bound lip * r^k (x + theta)
    if lip > 0.0:
        k_plan = max(1, math.ceil(
            (math.log(tol * (1.0 - r)) - math.log(lip * (x_upper + theta + 1.0)))
            / math.log(r)))
    else:
        k_plan = 1
    if k_plan > max_terms:
        raise AccuracyError(
            f"series needs ~{k_plan} terms, above the cap {max_terms}",
            achieved=lip * (x_upper + theta) * r ** (max_terms + 1) / (1.0 - r))

    length = x_upper + k_plan + 2.0
    mesh = _WeightedMesh(theta, _series_mesh(theta, a, length))

    fa = float(cdf(model, a)) if mode == "indicator" else None

    def psi0(x):
        if mode == "indicator":
            return np.minimum(1.0, (a / (x + 1.0)) ** theta) - fa
        if mode == "identity":
            return r * (x + 1.0) - theta
        return np.zeros_like(x)

    coefs = mesh.coefs_from_values(psi0(mesh.fit_nodes))
    total = coefs.copy()
    keep = mesh.breaks[1:] <= x_upper + 1.0 + 1e-9  # pieces needed for f(x+1)
    term_sups = [float(np.max(np.abs(psi0(mesh.fit_nodes[keep]))))]

    domain_end = mesh.breaks[-1]
    terms = 1
    tail = lip * (x_upper + theta) * r / (1.0 - r)
    for k in range(1, max_terms + 1):
        domain_end -= 1.0
        if domain_end < x_upper + 1.0:
            raise AccuracyError("series domain exhausted before tolerance",
                                achieved=tail)
        integral = mesh.weighted_cumulative(coefs)
        valid = mesh.breaks[1:] <= domain_end + 1e-9
        vals = np.zeros_like(mesh.fit_nodes)
        nodes = mesh.fit_nodes[valid]
        y = nodes + 1.0
        vals[valid] = (theta * y ** (-theta)
                       * integral(y.ravel()).reshape(y.shape))
        coefs = mesh.coefs_from_values(vals)
        total += coefs
        terms += 1
        term_sups.append(float(np.max(np.abs(vals[keep & valid]))))
        tail = lip * (x_upper + theta) * r ** (k + 1) / (1.0 - r)
        if tail <= tol and term_sups[-1] <= tol:
            break
    else:
        raise AccuracyError("series did not converge within the term cap",
                            achieved=tail)

    sol = SteinSolution(
        theta=theta, a=a, grid=None, f_table=None,
        series_terms_used=terms, term_tail_bound=tail, mode=mode,
        term_sups=term_sups,
        _mesh=mesh, _sum_coefs=total,
        _sum_integral=mesh.weighted_cumulative(total),
        _model=model, _x_upper=x_upper)

    # export tables on the uniform grid; the g table straddles the jump at a
    xs = np.arange(0.0, x_upper + 0.5 * _GRID_STEP, _GRID_STEP)
    if mode == "indicator" and a is not None and 0.0 < a < x_upper:
        xs = np.unique(np.concatenate((xs, [a - 1e-9, a + 1e-9])))
    g_vals = sol.g(xs)
    f_vals = sol.f(xs)
    sol.grid = MonotoneTable(xs, g_vals)
    sol.f_table = MonotoneTable(xs, f_vals)
    mids = 0.5 * (xs[:-1] + xs[1:])
    away = np.abs(mids - (a if a is not None else -1.0)) > 2.0 * _GRID_STEP
    sol.grid.interp_error = float(np.max(np.abs(sol.grid(mids[away]) - sol.g(mids[away]))))
    sol.f_table.interp_error = float(np.max(np.abs(sol.f_table(mids[away]) - sol.f(mids[away]))))
    return sol


def solve_indicator(model: DickmanModel, a: float, tol: float = 1e-8,
                    x_upper: float | None = None,
                    max_terms: int = _MAX_TERMS) -> SteinSolution:
    """Series solution for the threshold test function 1(x <= a).

    Iterates until the analytic tail bound and the latest term supremum both
    fall below ``tol``.
    """
    if a < 0.0:
        raise DomainError("threshold a must be non-negative")
    if tol < 1e-9:
        raise DomainError("tol below the supported floor 1e-9")
    if x_upper is None:
        x_upper = a + 8.0
    if x_upper < a + 2.0:
        raise DomainError("x_upper must be at least a + 2")
    if a == 0.0:
        # A_{x+1} htilde = min{1, 0} - 0 = 0: the series ends at htilde itself
        mesh = _WeightedMesh(model.theta, _series_mesh(model.theta, None, x_upper + 2.0))
        zero = np.zeros((mesh.n_pieces, _DEG + 1))
        sol = SteinSolution(theta=model.theta, a=0.0, grid=None, f_table=None,
                            series_terms_used=1, term_tail_bound=0.0,
                            mode="indicator", term_sups=[0.0],
                            _mesh=mesh, _sum_coefs=zero,
                            _sum_integral=mesh.weighted_cumulative(zero),
                            _model=model, _x_upper=x_upper)
        xs = np.arange(0.0, x_upper + 0.5 * _GRID_STEP, _GRID_STEP)
        sol.grid = MonotoneTable(xs, sol.g(xs))
        sol.f_table = MonotoneTable(xs, sol.f(xs))
        return sol
    return _solve_series(model, "indicator", a, tol, x_upper, max_terms)


def solve_diagnostic(model: DickmanModel, kind: str, tol: float = 1e-8,
                     x_upper: float = 8.0,
                     max_terms: int = _MAX_TERMS) -> SteinSolution:
    """Series solution for the smooth diagnostics h(x) = x or h constant."""
    if kind not in ("identity", "constant"):
        raise DomainError(f"unknown diagnostic {kind!r}")
    if tol < 1e-9:
        raise DomainError("tol below the supported floor 1e-9")
    return _solve_series(model, kind, None, tol, x_upper, max_terms)


# ---------------------------------------------------------------------------
# operators and checks
# ---------------------------------------------------------------------------

def averaging(model: DickmanModel, g, x: float, tol: float = 1e-10) -> float:
    """A_{theta,x} g = E[g(U^(1/theta) x)] for a table or callable g.

    Uses the substituted integral int_0^1 g(x u^(1/theta)) du, which has no
    endpoint singularity, with adaptive panel refinement.
    """
    if x < 0.0:
        raise DomainError("averaging requires x >= 0")
    if isinstance(g, MonotoneTable) and x > g.breakpoints[-1] + 1e-12:
        raise DomainError("table does not cover [0, x]")
    if x == 0.0:
        return float(g(0.0))
    inv = 1.0 / model.theta
    return integrate_adaptive(lambda u: np.asarray(g(x * u**inv), dtype=float),
                              0.0, 1.0, tol=tol)


def stein_residual(sol: SteinSolution, model: DickmanModel, x: float) -> float:
    """Signed residual of (x/theta) f'(x) + f(x) - f(x+1) - htilde(x).

    Defined away from the threshold; f' comes from the identity
    f'(x) = (theta/x)(g(x) - A_x g) rather than finite differences.
    """
    if x <= 0.0:
        raise DomainError("residual requires x > 0")
    if sol.a is not None and abs(x - sol.a) < 1e-9:
        raise DomainError("residual undefined at the threshold a")
    if x + 1.0 > sol._x_upper + 1e-9:
        raise DomainError("x + 1 outside the solution domain")
    fp = sol.f_prime(x)
    return float((x / sol.theta) * fp + sol.f(x) - sol.f(x + 1.0)
                 - sol.h_tilde(np.asarray(x)))


def _integrate_against_density(model: DickmanModel, fn) -> float:
    """int fn(w) p(w) dw over [0, x_max] with the density's own pieces."""
    ju, jw = gauss_jacobi_01(model.theta)
    total = float(np.dot(jw, fn(ju)))  # int_0^1 fn(u) u^(theta-1) du
    glx, glw = np.polynomial.legendre.leggauss(48)
    glx = (glx + 1.0) / 2.0
    glw = glw / 2.0
    pw = model.rho_pieces
    for p in range(len(pw.coefs)):
        lo, hi = pw.breaks[p], pw.breaks[p + 1]
        u = lo + (hi - lo) * glx
        t = (2.0 * u - (lo + hi)) / (hi - lo)
        total += (hi - lo) * float(np.dot(glw * _cheb.chebval(t, pw.coefs[p]), fn(u)))
    return model._norm * total


def characterization_gap(model: DickmanModel, h=None, f=None, f_prime=None,
                         tol: float = 1e-9) -> float:
    """Fixed-point characterization defect of the model's law.

    With ``h``: |E[h(D)] - E[A_{theta,D+1} h]|.  With ``f`` and ``f_prime``
    (Lipschitz mode): |E[(D/theta) f'(D) - f(D+1) + f(D)]|.  Both should
    vanish for the exact distribution.
    """
    if (h is None) == (f is None):
        raise DomainError("provide exactly one of h or (f, f_prime)")
    if h is not None:
        probe = np.asarray(h(np.linspace(0.0, model.x_max + 1.0, 211)), dtype=float)
        if not np.all(np.isfinite(probe)) or np.max(np.abs(probe)) > 1e12:
            raise DomainError("h must be bounded on [0, x_max + 1]")
        ju, jw = gauss_jacobi_01(model.theta)

        def averaged(w):
            w = np.asarray(w, dtype=float)
            pts = (w[:, None] + 1.0) * ju[None, :]
            return model.theta * (np.asarray(h(pts), dtype=float) @ jw)

        lhs = _integrate_against_density(model, lambda w: np.asarray(h(w), dtype=float))
        rhs = _integrate_against_density(model, averaged)
        return abs(lhs - rhs)
    if f_prime is None:
        raise DomainError("Lipschitz mode needs f_prime alongside f")

    def stein_op(w):
        w = np.asarray(w, dtype=float)
        return (w / model.theta) * np.asarray(f_prime(w), dtype=float) \
            - np.asarray(f(w + 1.0), dtype=float) + np.asarray(f(w), dtype=float)

    return abs(_integrate_against_density(model, stein_op))


# ---------------------------------------------------------------------------
# Monte Carlo bounds on the f2' decomposition
# ---------------------------------------------------------------------------

@dataclass
class UEstimate:
    """MC estimates of the monotone parts u+ and u- of f2'."""

    x: float
    u_plus: float
    u_minus: float
    std_err: float
    k_max: int
    mc_n: int
    term_plus: np.ndarray = field(default=None, repr=False)
    term_minus: np.ndarray = field(default=None, repr=False)
    term_se: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.u_plus < -3.0 * self.std_err or self.u_minus < -3.0 * self.std_err:
            raise DomainError("u estimates violate non-negativity beyond noise")


def estimate_u_bounds(model: DickmanModel, a: float, x: float, k_max: int,
                      mc_n: int, rng: SeededRng) -> UEstimate:
    """Estimate u+-(x) = sum_k s_k^+-(x) by the nested-uniform representation.

    With m_k(x) = a / (1 + V_2^(1/theta)(1 + ... V_k^(1/theta)(1 + U^(1/theta) x)))
    and P_k = (U V_2 ... V_k)^(1/theta),

        s_k^-(x) = E[(1(m_k < 1) m_k^theta + 1(m_k >= 1)) theta P_k / D_k],
        s_k^+(x) = E[ 1(m_k >= 1) theta P_k / D_k],

    where D_k is the nested denominator.  The truncated tail adds
    theta r^(k_max+1)/(1-r), r = theta/(theta+1), to the reported error.
    """
    if k_max < 1:
        raise DomainError("k_max must be at least 1")
    if mc_n < 10_000:
        raise DomainError("mc_n must be at least 10^4")
    theta = model.theta
    inv = 1.0 / theta
    gen = rng.generator()
    u = gen.random(mc_n) ** inv
    denom = 1.0 + u * x
    prod = u.copy()
    path_plus = np.zeros(mc_n)
    path_minus = np.zeros(mc_n)
    term_plus = np.empty(k_max)
    term_minus = np.empty(k_max)
    term_se = np.empty(k_max)
    for k in range(1, k_max + 1):
        if k > 1:
            v = gen.random(mc_n) ** inv
            denom = 1.0 + v * denom
            prod = prod * v
        m = a / denom
        base = theta * prod / denom
        hit = m >= 1.0
        integ_minus = np.where(hit, base, m**theta * base)
        integ_plus = np.where(hit, base, 0.0)
        path_minus += integ_minus
        path_plus += integ_plus
        term_minus[k - 1] = integ_minus.mean()
        term_plus[k - 1] = integ_plus.mean()
        term_se[k - 1] = max(integ_minus.std(), integ_plus.std()) / math.sqrt(mc_n)
    r = theta / (theta + 1.0)
    tail = theta * r ** (k_max + 1) / (1.0 - r)
    std_err = max(path_plus.std(), path_minus.std()) / math.sqrt(mc_n) + tail
    return UEstimate(x=x, u_plus=float(path_plus.mean()),
                     u_minus=float(path_minus.mean()), std_err=float(std_err),
                     k_max=k_max, mc_n=mc_n,
                     term_plus=term_plus, term_minus=term_minus, term_se=term_se)
