import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickman.errors import DomainError
from dickman.numerics import (
    EULER_GAMMA,
    MonotoneTable,
    PiecewiseCheb,
    QuadratureRule,
    certify_table,
    euler_gamma,
    gamma_fn,
    gauss_jacobi_01,
    gauss_legendre,
    integrate_adaptive,
    zeta_fn,
)


def test_gamma_examples():
    assert gamma_fn(1.5) == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-13)
    assert gamma_fn(1.0) == 1.0
    assert gamma_fn(2.0) == 1.0


def test_gamma_recurrence_random():
    rng = np.random.default_rng(1234)
    for s in rng.uniform(0.1, 10.0, size=100):
        assert gamma_fn(s + 1.0) == pytest.approx(s * gamma_fn(s), rel=1e-12)


def test_gamma_domain():
    with pytest.raises(DomainError):
        gamma_fn(0.0)
    with pytest.raises(DomainError):
        gamma_fn(-1.5)


def test_zeta_known_values():
    assert zeta_fn(2.0) == pytest.approx(math.pi**2 / 6.0, abs=1e-12)
    assert zeta_fn(4.0) == pytest.approx(math.pi**4 / 90.0, abs=1e-12)


def test_zeta_15_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    assert zeta_fn(1.5) == pytest.approx(float(mpmath.zeta(1.5)), abs=1e-12)
    assert zeta_fn(1.5) == pytest.approx(2.612375349, abs=1e-9)


def test_zeta_domain():
    with pytest.raises(DomainError):
        zeta_fn(1.0)
    with pytest.raises(DomainError):
        zeta_fn(0.5)


def test_euler_gamma_limit_oracle():
    # H_n - ln n = gamma + 1/(2n) - 1/(12 n^2) + O(n^-4)
    n = 1_000_000
    harmonic = float(np.sum(1.0 / np.arange(1, n + 1, dtype=float)[::-1]))
    est = harmonic - math.log(n) - 1.0 / (2.0 * n) + 1.0 / (12.0 * n**2)
    assert euler_gamma() == pytest.approx(est, abs=1e-12)
    assert math.exp(-EULER_GAMMA) == pytest.approx(0.5614594836, abs=1e-9)
    assert math.exp(-EULER_GAMMA / 2.0) == pytest.approx(0.7493060013, abs=1e-9)


def test_gauss_legendre_rule_contract():
    rule = gauss_legendre(64)
    assert abs(float(np.sum(rule.weights)) - 1.0) <= 1e-14
    assert np.all(rule.weights > 0.0)
    assert np.all((rule.nodes >= 0.0) & (rule.nodes <= 1.0))
    for deg in (0, 1, 2, 7, 31, 100, 127):
        exact = 1.0 / (deg + 1.0)
        approx = float(np.dot(rule.weights, rule.nodes**deg))
        assert abs(approx - exact) <= 1e-12


def test_quadrature_rule_validation():
    with pytest.raises(DomainError):
        QuadratureRule(nodes=np.array([0.5]), weights=np.array([0.9]), order=1)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.5])
def test_jacobi_weight_normalization(theta):
    # int_0^1 theta * u^(theta-1) du = 1 with the singular factor absorbed
    u, w = gauss_jacobi_01(theta)
    assert abs(theta * float(np.sum(w)) - 1.0) <= 1e-10
    # polynomial payload: int_0^1 u^(theta-1) u^3 du = 1/(theta+3)
    assert float(np.dot(w, u**3)) == pytest.approx(1.0 / (theta + 3.0), rel=1e-13)


def test_integrate_adaptive_kink():
    val = integrate_adaptive(lambda x: np.abs(x - 0.3), 0.0, 1.0, tol=1e-12)
    exact = 0.3**2 / 2 + 0.7**2 / 2
    assert val == pytest.approx(exact, abs=1e-11)


def test_piecewise_cheb_antiderivative():
    breaks = np.array([0.0, 1.0, 2.5])
    # f(x) = x^2 on both pieces via coefficient fits
    from dickman.numerics import cheb_fit_matrix, cheb_nodes_unit

    coefs = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        nodes = lo + (hi - lo) * cheb_nodes_unit(8)
        coefs.append(cheb_fit_matrix(8) @ nodes**2)
    pw = PiecewiseCheb(breaks, coefs)
    anti = pw.antiderivative(offset=0.0)
    xs = np.linspace(0.0, 2.5, 41)
    assert np.max(np.abs(pw(xs) - xs**2)) < 1e-13
    assert np.max(np.abs(anti(xs) - xs**3 / 3.0)) < 1e-13
    assert np.max(np.abs(pw.derivative()(xs) - 2.0 * xs)) < 1e-12


def test_piecewise_cheb_validation():
    with pytest.raises(DomainError):
        PiecewiseCheb([0.0, 0.0, 1.0], [np.ones(3), np.ones(3)])


@given(st.lists(st.integers(min_value=-5000, max_value=5000), min_size=2,
                max_size=30, unique=True))
@settings(max_examples=50, deadline=None)
def test_monotone_table_hits_breakpoints(values):
    breakpoints = np.sort(np.asarray(values, dtype=float)) / 100.0
    table = MonotoneTable(breakpoints, np.sin(breakpoints))
    assert np.max(np.abs(table(breakpoints) - np.sin(breakpoints))) < 1e-12


def test_monotone_table_certification():
    xs = np.linspace(0.0, 3.0, 400)
    table = certify_table(MonotoneTable(xs, np.cos(xs)), np.cos)
    mids = 0.5 * (xs[:-1] + xs[1:])
    assert np.max(np.abs(table(mids) - np.cos(mids))) <= table.interp_error


def test_monotone_table_validation():
    with pytest.raises(DomainError):
        MonotoneTable(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    with pytest.raises(DomainError):
        MonotoneTable(np.array([0.0, 1.0]), np.array([1.0]))
