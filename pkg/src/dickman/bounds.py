"""Explicit numeric bound certificates for d_K(W_n, D_theta).

Upper certificates assemble the fully explicit constants of the
weighted-Bernoulli bound (which covers the Poisson family through a
binomial coupling with the same constants):

    tau  = |beta| (theta + |beta|)
    c    = theta (1 + zeta(theta+1))
    C1   = 4 (theta+tau)^2 / theta
    k0   = smallest k with theta/k + tau/k^2 <= 1/2

  theta >= 1:  C2*L/n + C3*tau*log(n/L)/n,
               C2 = 2 (2 C1 + 1 + 2 tau/theta)(5 c K + theta^2),
               C3 = (4/theta)(5 c K + theta^2),  K the density sup;
  theta < 1:   C5 * (L/n)^theta with
               C4 = (2C1+1) c^theta + (2C1+1) theta^2
                    + tau zeta(theta+1) zeta(2-theta)
                    + 2 tau theta (1 + 1/(e(1-theta))),
               C5 = 3 (C4 + c_{theta,tau}^theta),
               c_{theta,tau} = max{6(2C1+1)c, 36 tau^2 zeta(theta+1)^2 zeta(3/2)^2}.

L = max(l, k0); when l < k0 the head of the sum is split off and costs an
extra K*(theta+tau)*k0/n (theta >= 1) or ((theta+tau)*k0/n)^theta.

Lower certificates for theta <= 1 come from the support gap (0, l/n):
exp(-theta*g) l^theta / (2 Gamma(theta+1) n^theta) is a rigorous lower
bound because the lattice law puts no mass there.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .distribution import get_model, sup_density
from .errors import DomainError
from .numerics import EULER_GAMMA, gamma_fn, zeta_fn


@dataclass
class BoundCertificate:
    """A numeric bound on d_K with every constant it used recorded."""

    kind: str  # "upper" | "lower"
    value: float
    theta: float
    beta: float
    l: int
    n: int
    family: str
    constants_used: dict = field(default_factory=dict)
    regime: str = ""

    def __post_init__(self):
        if self.kind not in ("upper", "lower"):
            raise DomainError("certificate kind must be 'upper' or 'lower'")
        if self.value < 0.0:
            raise DomainError("certificate value must be non-negative")

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind, "value": self.value, "theta": self.theta,
            "beta": self.beta, "l": self.l, "n": self.n, "family": self.family,
            "regime": self.regime, "constants_used": self.constants_used,
        })


def tau_of(theta: float, beta: float) -> float:
    """Perturbation scale: |theta/(k+beta) - theta/k| <= tau/k^2."""
    return abs(beta) * (theta + abs(beta))


def k0_of(theta: float, tau: float) -> int:
    """Smallest k with theta/k + tau/k^2 <= 1/2 (monotone in k)."""
    k = 1
    while theta / k + tau / (k * k) > 0.5:
        k += 1
    return k


def _check_preconditions(theta, beta, l, n, family):
    if theta <= 0.0:
        raise DomainError("theta must be positive")
    if not (1 <= l <= n):
        raise DomainError("need n >= l >= 1")
    if family not in ("bernoulli", "poisson"):
        raise DomainError(f"certificates cover 'bernoulli'/'poisson', got {family!r}")
    if family == "bernoulli" and l < theta - beta:
        raise DomainError("bernoulli family needs l >= theta - beta")
    if family == "poisson":
        if l <= -beta:
            raise DomainError("poisson family needs l > -beta")
        if beta < 0.0 and l < theta - beta:
            # tau/k^2 control of the rate perturbation needs k >= theta - beta
            raise DomainError("poisson certificate with beta < 0 needs l >= theta - beta")


def upper_certificate(theta: float, beta: float, l: int, n: int,
                      family: str = "bernoulli") -> BoundCertificate:
    """Explicit, non-asymptotic upper bound on d_K(W_n, D_theta)."""
    _check_preconditions(theta, beta, l, n, family)
    tau = tau_of(theta, beta)
    c_theta = theta * (1.0 + zeta_fn(theta + 1.0))
    c1 = 4.0 * (theta + tau) ** 2 / theta
    k0 = k0_of(theta, tau)
    l_eff = max(l, k0)
    if l_eff > n:
        # the whole sum sits below k0: only the trivial unit bound is explicit
        return BoundCertificate(
            kind="upper", value=1.0, theta=theta, beta=beta, l=l, n=n,
            family=family,
            constants_used={"tau": tau, "c_theta": c_theta, "C_1": c1,
                            "k_0": k0, "trivial_unit_bound": True},
            regime="theta_ge_1" if theta >= 1.0 else "theta_lt_1")
    constants = {"tau": tau, "c_theta": c_theta, "C_1": c1, "k_0": k0,
                 "l_eff": l_eff}

    if theta >= 1.0:
        k_theta = sup_density(get_model(theta))
        core = 5.0 * c_theta * k_theta + theta**2
        c2 = 2.0 * (2.0 * c1 + 1.0 + 2.0 * tau / theta) * core
        c3 = (4.0 / theta) * core
        value = c2 * l_eff / n + c3 * tau * math.log(n / l_eff) / n
        m_n = 4.0 * c_theta * (2.0 * c1 + l_eff
                               + (tau / theta) * (1.0 + math.log(n / l_eff))) / n
        correction = k_theta * (theta + tau) * k0 / n if l < k0 else 0.0
        constants.update({"K_theta": k_theta, "C_2": c2, "C_3": c3, "M_n": m_n,
                          "head_correction": correction})
        regime = "theta_ge_1"
    else:
        z_next = zeta_fn(theta + 1.0)
        c4 = ((2.0 * c1 + 1.0) * c_theta**theta
              + (2.0 * c1 + 1.0) * theta**2
              + tau * z_next * zeta_fn(2.0 - theta)
              + 2.0 * tau * theta * (1.0 + 1.0 / (math.e * (1.0 - theta))))
        c_theta_tau = max(6.0 * (2.0 * c1 + 1.0) * c_theta,
                          36.0 * tau**2 * z_next**2 * zeta_fn(1.5) ** 2)
        c5 = 3.0 * (c4 + c_theta_tau**theta)
        value = c5 * (l_eff / n) ** theta
        m_n = max(6.0 * (2.0 * c1 + l_eff) * c_theta,
                  36.0 * tau**2 * z_next**2 * zeta_fn(1.5) ** 2) / n
        correction = ((theta + tau) * k0 / n) ** theta if l < k0 else 0.0
        constants.update({"C_4": c4, "C_5": c5, "c_theta_tau": c_theta_tau,
                          "M_n": m_n, "head_correction": correction})
        regime = "theta_lt_1"

    return BoundCertificate(kind="upper", value=value + correction, theta=theta,
                            beta=beta, l=l, n=n, family=family,
                            constants_used=constants, regime=regime)


def lower_certificate(theta: float, l: int, n: int,
                      family: str = "bernoulli") -> BoundCertificate:
    """Support-gap lower bound for theta in (0, 1].

    The sum has no mass in (0, l/n) while the Dickman law puts
    exp(-theta*g) (l/n)^theta / Gamma(theta+1) there; half of that gap is a
    rigorous lower bound on d_K.  For theta > 1 use interval_probe instead.
    """
    if not (0.0 < theta <= 1.0):
        raise DomainError("lower_certificate covers theta in (0, 1]; "
                          "use interval_probe for theta > 1")
    if not (1 <= l <= n):
        raise DomainError("need n >= l >= 1")
    value = math.exp(-theta * EULER_GAMMA) * l**theta / (
        2.0 * gamma_fn(theta + 1.0) * n**theta)
    constants = {"gap_probability": 2.0 * value,
                 "e_minus_theta_gamma": math.exp(-theta * EULER_GAMMA),
                 "gamma_theta_plus_1": gamma_fn(theta + 1.0)}
    return BoundCertificate(kind="lower", value=value, theta=theta, beta=0.0,
                            l=l, n=n, family=family, constants_used=constants,
                            regime="theta_le_1")


def optimality_main_term(theta: float, beta: float, l: int, n: int,
                         family: str = "bernoulli") -> float:
    """Asymptotic main term theta e^(-theta g)/Gamma(theta) |l/n + beta log(n/l)/n|.

    Reference value only: the matching lower bound subtracts correction
    terms with non-explicit constants, so this is never used as a
    certified bound.
    """
    if theta < 1.0:
        raise DomainError("optimality_main_term is defined for theta >= 1")
    _check_preconditions(theta, beta, l, n, family)
    lead = theta * math.exp(-theta * EULER_GAMMA) / gamma_fn(theta)
    return lead * abs(l / n + beta * math.log(n / l) / n)
