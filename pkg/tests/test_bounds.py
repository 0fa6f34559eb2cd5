import json
import math

import pytest

from dickman import bounds
from dickman import distribution as dist
from dickman import lattice as lat
from dickman import metrics as met
from dickman.errors import DomainError
from dickman.numerics import EULER_GAMMA, zeta_fn
from dickman.samplers import SumSpec

G = EULER_GAMMA


def test_tau_and_k0():
    assert bounds.tau_of(1.0, 2.0) == 2.0 * 3.0
    assert bounds.tau_of(1.0, -2.0) == 2.0 * 3.0
    assert bounds.k0_of(1.0, 0.0) == 2  # 1/k <= 1/2 from k = 2
    assert bounds.k0_of(0.5, 0.0) == 1
    assert bounds.k0_of(1.0, 6.0) > 2


def test_upper_certificate_constants_theta1():
    cert = bounds.upper_certificate(1.0, 0.0, 1, 100)
    c = cert.constants_used
    assert c["c_theta"] == pytest.approx(1.0 + math.pi**2 / 6.0, abs=1e-6)
    assert c["c_theta"] == pytest.approx(2.644934, abs=1e-6)
    assert c["C_1"] == 4.0
    assert c["tau"] == 0.0
    assert c["k_0"] == 2
    assert cert.regime == "theta_ge_1"
    assert cert.kind == "upper"
    # head correction active because l = 1 < k0 = 2
    assert c["head_correction"] > 0.0


def test_upper_certificate_dominates_exact():
    model = dist.get_model(1.0, x_max=64.0)
    law = lat.exact_bernoulli(SumSpec(1.0, 0.0, 1, 100, "bernoulli"))
    rep = met.kolmogorov_exact(law, model)
    cert = bounds.upper_certificate(1.0, 0.0, 1, 100)
    assert rep.d_k <= cert.value + rep.error_budget


def test_upper_certificate_small_theta_regime():
    cert = bounds.upper_certificate(0.5, 0.0, 1, 1000)
    assert cert.regime == "theta_lt_1"
    c = cert.constants_used
    assert "C_4" in c and "C_5" in c and "K_theta" not in c
    assert cert.value == pytest.approx(c["C_5"] * (1.0 / 1000.0) ** 0.5, rel=1e-12)


@pytest.mark.parametrize("theta,beta", [(1.0, 0.0), (1.0, 2.0), (0.5, 0.0),
                                        (2.0, 0.0)])
def test_upper_certificate_monotone_in_n(theta, beta):
    l = max(1, int(math.ceil(theta - beta)))
    vals = [bounds.upper_certificate(theta, beta, l, n).value
            for n in range(100, 2001, 100)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_upper_certificate_preconditions():
    with pytest.raises(DomainError):
        bounds.upper_certificate(2.0, 0.0, 1, 100)  # bernoulli needs l >= 2
    with pytest.raises(DomainError):
        bounds.upper_certificate(1.0, -2.0, 1, 100, family="poisson")
    with pytest.raises(DomainError):
        bounds.upper_certificate(1.0, 0.0, 5, 4)
    with pytest.raises(DomainError):
        bounds.upper_certificate(1.0, 0.0, 1, 100, family="geometric")


def test_constants_reproducible_bitwise():
    cert = bounds.upper_certificate(1.0, 2.0, 1, 500)
    again = bounds.upper_certificate(1.0, 2.0, 1, 500)
    assert cert.constants_used == again.constants_used
    assert cert.value == again.value
    tau = cert.constants_used["tau"]
    assert cert.constants_used["C_1"] == 4.0 * (1.0 + tau) ** 2 / 1.0
    assert cert.constants_used["c_theta"] == 1.0 * (1.0 + zeta_fn(2.0))


def test_lower_certificate_values():
    assert bounds.lower_certificate(0.5, 1, 100).value == pytest.approx(
        math.exp(-G / 2.0) / (2.0 * math.gamma(1.5) * 10.0), rel=1e-12)
    assert bounds.lower_certificate(0.5, 1, 100).value == pytest.approx(
        0.042276, abs=5e-6)
    assert bounds.lower_certificate(1.0, 1, 10).value == pytest.approx(
        math.exp(-G) / 20.0, rel=1e-12)
    assert bounds.lower_certificate(1.0, 2, 10).value == pytest.approx(
        2.0 * math.exp(-G) / 20.0, rel=1e-12)


def test_lower_certificate_is_valid_bound():
    model = dist.get_model(0.5, x_max=64.0)
    law = lat.exact_bernoulli(SumSpec(0.5, 0.0, 1, 100, "bernoulli"))
    rep = met.kolmogorov_exact(law, model)
    cert = bounds.lower_certificate(0.5, 1, 100)
    assert cert.value <= rep.d_k + rep.error_budget


def test_lower_certificate_domain():
    with pytest.raises(DomainError):
        bounds.lower_certificate(2.0, 1, 100)
    with pytest.raises(DomainError):
        bounds.lower_certificate(0.5, 5, 4)


def test_optimality_main_term():
    assert bounds.optimality_main_term(1.0, 0.0, 1, 100) == pytest.approx(
        math.exp(-G) / 100.0, rel=1e-12)
    assert bounds.optimality_main_term(1.0, 2.0, 1, 100) == pytest.approx(
        math.exp(-G) * (1.0 + 2.0 * math.log(100.0)) / 100.0, rel=1e-12)
    assert bounds.optimality_main_term(1.0, 2.0, 1, 100) == pytest.approx(
        0.0573, abs=2e-4)
    # theta = 2 with l = 1 satisfies only the poisson precondition
    assert bounds.optimality_main_term(2.0, 0.0, 1, 50, family="poisson") == \
        pytest.approx(2.0 * math.exp(-2.0 * G) / math.gamma(2.0) / 50.0, rel=1e-12)
    with pytest.raises(DomainError):
        bounds.optimality_main_term(0.5, 0.0, 1, 100)


def test_certificate_serialization():
    cert = bounds.upper_certificate(1.0, 0.0, 2, 64)
    doc = json.loads(cert.to_json())
    assert doc["kind"] == "upper"
    assert doc["constants_used"]["k_0"] == 2
    low = json.loads(bounds.lower_certificate(1.0, 1, 64).to_json())
    assert low["kind"] == "lower"


def test_certificate_validation():
    with pytest.raises(DomainError):
        bounds.BoundCertificate(kind="sideways", value=1.0, theta=1.0, beta=0.0,
                                l=1, n=10, family="bernoulli")
    with pytest.raises(DomainError):
        bounds.BoundCertificate(kind="upper", value=-1.0, theta=1.0, beta=0.0,
                                l=1, n=10, family="bernoulli")
