import numpy as np
import pytest

from dickman import distribution as dist
from dickman import stein
from dickman.errors import AccuracyError, DomainError
from dickman.numerics import EULER_GAMMA
from dickman.samplers import SeededRng

G = EULER_GAMMA


@pytest.fixture(scope="module")
def m1():
    return dist.get_model(1.0)


# ---------------------------------------------------------------------------
# averaging operator
# ---------------------------------------------------------------------------

def test_averaging_at_zero_returns_g0(m1):
    assert stein.averaging(m1, lambda u: np.asarray(u) + 7.0, 0.0) == 7.0


def test_averaging_constant(m1):
    c = lambda u: np.full_like(np.asarray(u, dtype=float), 2.5)  # noqa: E731
    for x in (0.5, 1.0, 4.0):
        assert stein.averaging(m1, c, x) == pytest.approx(2.5, abs=1e-12)


def test_averaging_identity(m1):
    # theta=1: E[g(Ux)] = x/2 for g(u) = u
    assert stein.averaging(m1, lambda u: np.asarray(u), 2.0) == pytest.approx(
        1.0, abs=1e-10)


def test_averaging_domain(m1):
    with pytest.raises(DomainError):
        stein.averaging(m1, lambda u: u, -1.0)
    from dickman.numerics import MonotoneTable

    table = MonotoneTable(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        stein.averaging(m1, table, 2.0)


# ---------------------------------------------------------------------------
# series solutions
# ---------------------------------------------------------------------------

def test_zero_threshold_degenerates(m1):
    sol = stein.solve_indicator(m1, 0.0)
    assert sol.g(0.0) == 1.0
    for x in (0.5, 1.0, 3.0):
        assert sol.f(x) == 0.0
        assert sol.f2(x) == 0.0


def test_identity_mode_g0(m1):
    # geometric series: g(0) = -r/(1-r) - r^2/(1-r)^2 = -2 at theta = 1
    sol = stein.solve_diagnostic(m1, "identity", tol=1e-9)
    assert sol.g(0.0) == pytest.approx(-2.0, abs=1e-8)


def test_constant_mode_vanishes(m1):
    sol = stein.solve_diagnostic(m1, "constant")
    for x in (0.0, 0.7, 2.0):
        assert sol.g(x) == 0.0
        assert sol.f(x) == 0.0
    assert stein.stein_residual(sol, m1, 1.25) == 0.0


def test_solution_preconditions(m1):
    with pytest.raises(DomainError):
        stein.solve_indicator(m1, -1.0)
    with pytest.raises(DomainError):
        stein.solve_indicator(m1, 1.0, tol=1e-12)
    with pytest.raises(DomainError):
        stein.solve_indicator(m1, 1.0, x_upper=2.5)
    with pytest.raises(AccuracyError):
        stein.solve_indicator(m1, 1.0, max_terms=3)


def test_residual_preconditions(m1):
    sol = stein.solve_indicator(m1, 1.3)
    with pytest.raises(DomainError):
        stein.stein_residual(sol, m1, 1.3)
    with pytest.raises(DomainError):
        stein.stein_residual(sol, m1, 0.0)
    with pytest.raises(DomainError):
        stein.stein_residual(sol, m1, sol._x_upper)


def test_residual_zero_threshold(m1):
    sol = stein.solve_indicator(m1, 0.0)
    assert abs(stein.stein_residual(sol, m1, 1.0)) <= 1e-10


def test_residual_grid(m1):
    sol = stein.solve_indicator(m1, 1.3, tol=1e-8)
    xs = np.linspace(0.05, sol._x_upper - 1.05, 50)
    xs = xs[np.abs(xs - 1.3) > 2.0 / 512.0]
    worst = max(abs(stein.stein_residual(sol, m1, float(x))) for x in xs)
    assert worst <= 1e-6


def test_solution_tables_and_tail(m1):
    sol = stein.solve_indicator(m1, 1.3, tol=1e-8)
    assert sol.term_tail_bound <= 1e-8
    assert sol.series_terms_used >= 10
    # tables cover [0, X] at 1/512 spacing and straddle the jump
    assert sol.grid.breakpoints[0] == 0.0
    assert sol.grid.breakpoints[-1] >= sol._x_upper - 1e-9
    jump = sol.g(1.3 - 1e-9) - sol.g(1.3 + 1e-9)
    assert jump == pytest.approx(1.0, abs=1e-6)


def test_series_terms_decay_like_contraction(m1):
    # contraction bound: |psi_k| <= Lip(psi0) r^k (x + theta) on the kept range
    sol = stein.solve_indicator(m1, 1.3, tol=1e-8)
    r = 0.5
    span = sol._x_upper + 1.0 + sol.theta
    for k, sup in enumerate(sol.term_sups):
        assert sup <= sol.theta * r**k * span * 1.01


def test_f_matches_public_averaging(m1):
    # independent cross-check: f(x) must equal A_x g computed by the generic
    # adaptive quadrature on the substituted integrand
    sol = stein.solve_indicator(m1, 1.3, tol=1e-8)
    for x in (0.6, 1.7, 3.2):
        direct = stein.averaging(m1, lambda u: sol.g(u), x, tol=1e-9)
        assert sol.f(x) == pytest.approx(direct, abs=1e-7)


def test_f1_and_f2_split(m1):
    sol = stein.solve_indicator(m1, 1.3, tol=1e-8)
    fa = dist.cdf(m1, 1.3)
    xs = np.array([0.4, 1.0, 2.0, 5.0])
    expect_f1 = np.minimum(1.0, (1.3 / xs)) - fa  # theta = 1
    assert np.max(np.abs(sol.f1(xs) - expect_f1)) < 1e-12
    # f2 continuous across the threshold within 10x grid resolution error
    gap = abs(sol.f2(1.3 + 1e-9) - sol.f2(1.3 - 1e-9))
    assert gap <= 1e-8


def test_lipschitz_mode_modulus(m1):
    sol = stein.solve_diagnostic(m1, "identity", tol=1e-9)
    xs = np.linspace(0.0, sol._x_upper, 200)
    vals = sol.g(xs)
    slopes = np.abs(np.diff(vals) / np.diff(xs))
    assert np.max(slopes) <= (1.0 + 1.0 * (1.0 + 1.0)) + 1e-6


def test_characterization_gap_modes(m1):
    ones = lambda x: np.ones_like(np.asarray(x, dtype=float))  # noqa: E731
    ident = lambda x: np.asarray(x, dtype=float)  # noqa: E731
    assert stein.characterization_gap(m1, h=ones) <= 1e-10
    assert stein.characterization_gap(m1, h=ident) <= 1e-8
    assert stein.characterization_gap(m1, f=np.sin, f_prime=np.cos) <= 1e-6
    with pytest.raises(DomainError):
        stein.characterization_gap(m1)
    with pytest.raises(DomainError):
        stein.characterization_gap(m1, f=np.sin)
    with pytest.raises(DomainError):
        # pole at 0 lies on the probe grid, so unboundedness is detected
        stein.characterization_gap(m1, h=lambda x: np.where(
            np.asarray(x) == 0.0, np.inf, 1.0 / np.maximum(np.asarray(x), 1e-300)))


# ---------------------------------------------------------------------------
# u+- Monte Carlo estimates
# ---------------------------------------------------------------------------

def test_u_bounds_degenerate_threshold(m1):
    est = stein.estimate_u_bounds(m1, 0.0, 1.0, k_max=10, mc_n=10_000,
                                  rng=SeededRng(3))
    assert est.u_plus == 0.0
    assert est.u_minus == 0.0


def test_u_bounds_inside_theta_squared(m1):
    est = stein.estimate_u_bounds(m1, 1.0, 0.0, k_max=40, mc_n=100_000,
                                  rng=SeededRng(4))
    assert 0.0 <= est.u_plus <= 1.0 + 3.0 * est.std_err
    assert 0.0 <= est.u_minus <= 1.0 + 3.0 * est.std_err


def test_u_bounds_per_term(m1):
    est = stein.estimate_u_bounds(m1, 1.0, 0.0, k_max=12, mc_n=100_000,
                                  rng=SeededRng(5))
    for k in (1, 5, 10):
        bound = 1.0 * 0.5**k
        assert est.term_plus[k - 1] <= bound + 3.0 * est.term_se[k - 1]
        assert est.term_minus[k - 1] <= bound + 3.0 * est.term_se[k - 1]


def test_u_bounds_monotone_in_x(m1):
    ests = [stein.estimate_u_bounds(m1, 1.0, x, k_max=30, mc_n=50_000,
                                    rng=SeededRng(6))
            for x in (0.0, 1.0, 2.5, 4.0)]
    for a, b in zip(ests, ests[1:]):
        noise = 3.0 * (a.std_err + b.std_err)
        assert b.u_plus <= a.u_plus + noise
        assert b.u_minus <= a.u_minus + noise


def test_f2_prime_decomposition(m1):
    sol = stein.solve_indicator(m1, 1.0, tol=1e-8)
    for x in (0.5, 2.0):
        f2p = sol.f_prime(x) - float(sol.f1_prime(np.asarray(x)))
        est = stein.estimate_u_bounds(m1, 1.0, x, k_max=40, mc_n=200_000,
                                      rng=SeededRng(8))
        assert f2p == pytest.approx(est.u_plus - est.u_minus,
                                    abs=3.0 * est.std_err + 1e-6)


def test_u_bounds_preconditions(m1):
    with pytest.raises(DomainError):
        stein.estimate_u_bounds(m1, 1.0, 0.0, k_max=0, mc_n=10_000,
                                rng=SeededRng(1))
    with pytest.raises(DomainError):
        stein.estimate_u_bounds(m1, 1.0, 0.0, k_max=5, mc_n=100,
                                rng=SeededRng(1))
