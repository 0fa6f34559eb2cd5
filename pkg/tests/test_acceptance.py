"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Shared Dickman models
are built once in fixtures; per-criterion timers cover the criterion's own
work and are asserted against the stated runtime budgets.
"""

import math
import time
from itertools import product

import numpy as np
import pytest
from scipy import stats

from dickman import apps, bounds
from dickman import distribution as dist
from dickman import lattice as lat
from dickman import metrics as met
from dickman import stein
from dickman.cli import rate_scan, sandwich_report
from dickman.metrics import ks_two_sample
from dickman.numerics import EULER_GAMMA
from dickman.samplers import SeededRng, SumSpec, perpetuity_sample

G = EULER_GAMMA
DYADIC = [128, 256, 512, 1024, 2048]
SCAN_CONFIGS = [(fam, th, be) for fam in ("bernoulli", "poisson")
                for th, be in ((1.0, 0.0), (0.5, 0.0), (1.0, 2.0))]

_elapsed = {}


def _report(k, budget, t0, detail):
    dt = time.time() - t0
    _elapsed[k] = dt
    print(f"\nACCEPTANCE {k}: PASS ({dt:.1f}s / budget {budget:.0f}s) {detail}")
    assert dt < budget


@pytest.fixture(scope="module")
def models():
    return {theta: dist.get_model(theta) for theta in (0.5, 1.0, 2.0, 2.5)}


@pytest.fixture(scope="module")
def scans():
    out = {}
    t0 = time.time()
    for fam, th, be in SCAN_CONFIGS:
        out[(fam, th, be)] = rate_scan(th, be, 1, fam, DYADIC,
                                       tail_budget=1e-10)
    out["elapsed"] = time.time() - t0
    return out


def test_criterion_1_closed_form_cdf(models):
    t0 = time.time()
    worst = 0.0
    for theta in (0.5, 1.0, 2.0):
        xs = np.linspace(0.0, 1.0, 1000)
        closed = math.exp(-theta * G) * xs**theta / math.gamma(theta + 1.0)
        worst = max(worst, float(np.max(np.abs(dist.cdf(models[theta], xs)
                                               - closed))))
    assert worst <= 1e-10
    _report(1, 5.0, t0, f"max closed-form CDF error {worst:.2e}")


def test_criterion_2_rho_oracle(models):
    t0 = time.time()
    err = abs(dist.rho(models[1.0], 2.0) - (1.0 - math.log(2.0)))
    assert err <= 1e-9
    _report(2, 1.0, t0, f"|rho(2) - (1 - ln 2)| = {err:.2e}")


def test_criterion_3_normalization_and_mean(models):
    t0 = time.time()
    worst_norm = worst_mean = 0.0
    for theta in (0.5, 1.0, 2.5):
        m = models[theta]
        worst_norm = max(worst_norm, m.norm_defect)
        worst_mean = max(worst_mean, abs(dist.mean(m) - theta))
    assert worst_norm <= 1e-8
    assert worst_mean <= 1e-6
    _report(3, 10.0, t0,
            f"norm defect {worst_norm:.2e}, mean error {worst_mean:.2e}")


def test_criterion_4_perpetuity_fixed_point():
    t0 = time.time()
    n = 10**6
    worst = 0.0
    for i, theta in enumerate((0.5, 1.0, 2.0)):
        w = perpetuity_sample(theta, 256, SeededRng(4_100 + i), size=n)
        w2 = perpetuity_sample(theta, 256, SeededRng(4_200 + i), size=n)
        u = SeededRng(4_300 + i).generator().random(n)
        ks = ks_two_sample(w, u ** (1.0 / theta) * (w2 + 1.0))
        worst = max(worst, ks)
    assert worst < 0.005
    _report(4, 60.0, t0, f"max two-sample KS {worst:.4f} at N=10^6")


def test_criterion_5_exact_law_oracle():
    t0 = time.time()
    worst = 0.0
    for (theta, beta), n in product(((1.0, 0.0), (1.0, 2.0), (0.5, 0.0)),
                                    range(1, 9)):
        law = lat.exact_bernoulli(SumSpec(theta, beta, 1, n, "bernoulli"))
        ks = list(range(1, n + 1))
        oracle = np.zeros(sum(ks) + 1)
        for bits in product((0, 1), repeat=n):
            prob, total = 1.0, 0
            for k, bit in zip(ks, bits):
                p = theta / (k + beta)
                prob *= p if bit else 1.0 - p
                total += k * bit
            oracle[total] += prob
        worst = max(worst, float(np.max(np.abs(law.pmf - oracle))))
    assert worst <= 1e-14
    _report(5, 1.0, t0, f"max per-atom deviation {worst:.2e}")


def test_criterion_6_rate_phase_transitions(scans):
    t0 = time.time()
    details = []
    for fam in ("bernoulli", "poisson"):
        s = scans[(fam, 1.0, 0.0)]
        assert -1.15 <= s.fitted_exponent <= -0.85
        details.append(f"{fam} slope(1,0)={s.fitted_exponent:+.3f}")
        s = scans[(fam, 0.5, 0.0)]
        assert -0.65 <= s.fitted_exponent <= -0.35
        details.append(f"slope(.5,0)={s.fitted_exponent:+.3f}")
        s = scans[(fam, 1.0, 2.0)]
        ratio = max(s.compensated) / min(s.compensated)
        assert ratio <= 3.0
        details.append(f"comp-ratio(1,2)={ratio:.2f}")
    _elapsed["scan_setup"] = scans["elapsed"]
    _report(6, 600.0 - scans["elapsed"], t0, "; ".join(details))


def test_criterion_7_sandwich(scans):
    t0 = time.time()
    checked = 0
    for fam, th, be in SCAN_CONFIGS:
        for n in DYADIC:
            record = sandwich_report(th, be, 1, n, fam, tail_budget=1e-10)
            budget = record["exact_budget"]
            assert record["lower"] - budget <= record["exact"]
            assert record["exact"] <= record["upper"] + budget
            if th == 0.5:
                floor = math.exp(-G / 2.0) / (2.0 * math.gamma(1.5) * n**0.5)
                assert record["exact"] + budget >= floor
            checked += 1
    total = (time.time() - t0) + _elapsed.get("scan_setup", 0.0) \
        + _elapsed.get(6, 0.0)
    assert total < 600.0
    print(f"\nACCEPTANCE 7: PASS ({time.time() - t0:.1f}s; criteria 6+7 total "
          f"{total:.1f}s / 600s) {checked} sandwiches ordered")


def test_criterion_8_stein_machinery(models):
    t0 = time.time()
    worst_res = 0.0
    for theta, a in product((0.5, 1.0, 2.0), (0.4, 1.3, 2.7)):
        m = models[theta]
        sol = stein.solve_indicator(m, a, tol=1e-8)
        xs = np.linspace(0.05, sol._x_upper - 1.05, 50)
        xs = xs[np.abs(xs - a) > 2.0 / 512.0]
        worst_res = max(worst_res, max(
            abs(stein.stein_residual(sol, m, float(x))) for x in xs))
    assert worst_res <= 1e-6

    ones = lambda x: np.ones_like(np.asarray(x, dtype=float))  # noqa: E731
    ident = lambda x: np.asarray(x, dtype=float)  # noqa: E731
    worst_gap = 0.0
    for theta in (0.5, 1.0, 2.0):
        m = models[theta]
        for h in (ones, ident, np.sin):
            worst_gap = max(worst_gap, stein.characterization_gap(m, h=h))
        worst_gap = max(worst_gap,
                        stein.characterization_gap(m, f=np.sin, f_prime=np.cos))
    assert worst_gap <= 1e-6

    seed = 8_000
    for theta, a in product((0.5, 1.0, 2.0), (0.4, 1.3, 2.7)):
        m = models[theta]
        for x in np.linspace(0.0, 4.0, 9):
            seed += 1
            est = stein.estimate_u_bounds(m, a, float(x), k_max=40,
                                          mc_n=100_000, rng=SeededRng(seed))
            assert est.u_plus <= theta**2 + 3.0 * est.std_err
            assert est.u_minus <= theta**2 + 3.0 * est.std_err
    _report(8, 300.0, t0,
            f"max residual {worst_res:.2e}, max gap {worst_gap:.2e}, "
            "81 u+- estimates inside theta^2")


def test_criterion_9_quickselect():
    t0 = time.time()
    runs = 100_000
    direct3 = apps.quickselect_direct_many(3, runs, SeededRng(9_001))
    observed = np.array([(direct3 == 2).sum(), (direct3 == 3).sum()])
    chi = stats.chisquare(observed, f_exp=np.array([2 / 3, 1 / 3]) * runs)
    assert chi.pvalue > 0.001

    n = 10_000
    direct = apps.quickselect_direct_many(n, runs, SeededRng(9_002))
    records = apps.quickselect_records_many(n, runs, SeededRng(9_003))
    ks_dr = ks_two_sample(direct, records)
    assert ks_dr < 0.01
    perp = perpetuity_sample(1.0, 256, SeededRng(9_004), size=runs)
    ks_dp = ks_two_sample(direct / n - 1.0, perp)
    assert ks_dp < 0.01
    _report(9, 120.0, t0,
            f"chi2 p={chi.pvalue:.3f}, KS(direct,records)={ks_dr:.4f}, "
            f"KS(normalized,perpetuity)={ks_dp:.4f}")


def test_criterion_10_tree_depth():
    t0 = time.time()
    n, runs = 10_000, 100_000
    direct = apps.recursive_tree_depth_many(n, runs, SeededRng(10_001))
    bern = apps.weighted_depth_bernoulli_many(n, 0.0, runs, SeededRng(10_002))
    ks = ks_two_sample((direct - n) / n, (bern - n) / n)
    assert ks < 0.01
    _report(10, 120.0, t0, f"KS(representation, direct tree) = {ks:.4f}")
