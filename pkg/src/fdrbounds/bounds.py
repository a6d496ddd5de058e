"""Closed-form consequences of the proxy bound for concrete models.

Rates are parameterised by the rare-weak exponents: ``m = n**(1 - s)``
signals, shift ``mu = sqrt(2 r log n)``, and FDR/FNR decaying as
``n**-kappa_alpha`` and ``n**-kappa_beta``. Feasibility checks return a
signed slack so callers can bisect on it.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

from ._validation import check_count, check_real
from .exceptions import ParameterError, PreconditionError
from .proxies import c0


@dataclass(frozen=True)
class RateExponents:
    s: float
    r: float
    kappa_alpha: float = 0.0
    kappa_beta: float = 0.0

    def __post_init__(self):
        s = check_real(self.s, "s", 0.0, 1.0, True, True)
        r = check_real(self.r, "r", 0.0, 1.0, True, True)
        if not s < r:
            raise ParameterError(f"need 0 < s < r < 1, got s={s}, r={r}")
        check_real(self.kappa_alpha, "kappa_alpha", 0.0)
        check_real(self.kappa_beta, "kappa_beta", 0.0)


class Feasibility(NamedTuple):
    feasible: bool
    slack: float


def kappa_star(s, r):
    """Largest exponent ``(r - s)**2 / (4 r)`` the smaller decay rate may reach."""
    s = check_real(s, "s", 0.0, 1.0, True, True)
    r = check_real(r, "r", 0.0, 1.0, True, True)
    if s > r:
        raise ParameterError(f"need s <= r, got s={s}, r={r}")
    return (r - s) ** 2 / (4.0 * r)


def _location_slack(e, null_coef=1.0, signal_coef=1.0):
    return (
        math.sqrt(e.r)
        - null_coef * math.sqrt(e.s + e.kappa_alpha)
        - signal_coef * math.sqrt(e.kappa_beta)
    )


def iid_location_feasible(e):
    """Necessary condition on decay exponents in the iid Gaussian location model."""
    slack = _location_slack(e)
    ok = slack >= 0 and min(e.kappa_alpha, e.kappa_beta) <= kappa_star(e.s, e.r)
    return Feasibility(ok, slack)


def spiked_feasible(e, rho0, rho1):
    """Spiked-covariance analogue; correlation shrinks each term by ``sqrt(1 - rho)``."""
    rho0 = check_real(rho0, "rho0", 0.0, 1.0, high_open=True)
    rho1 = check_real(rho1, "rho1", 0.0, 1.0, high_open=True)
    slack = _location_slack(e, math.sqrt(1.0 - rho0), math.sqrt(1.0 - rho1))
    return Feasibility(slack >= 0, slack)


def grouped_feasible(e, t):
    """Grouped-dependence analogue with group exponent ``t``; same slack as iid."""
    t = check_real(t, "t", 0.0, 1.0)
    if not t < e.s:
        raise ParameterError(f"need 0 <= t < s, got t={t}, s={e.s}")
    slack = _location_slack(e)
    return Feasibility(slack >= 0, slack)


def scale_sigma_lower(s_n, alpha, beta, m, epsilon, eta=0.0, strict=True):
    """Lower bound on the scale factor ``sigma`` in the iid Gaussian scale model.

    ``s_n = log(n/m) / log(n)``; ``n`` is recovered as ``m**(1/(1 - s_n))``.
    ``eta`` is the unspecified slack factor of the bound (``0`` gives the
    leading-constant form). With ``strict=False`` the hypothesis
    ``max(alpha, beta) <= 1/(3 c0)`` is not enforced.
    """
    s_n = check_real(s_n, "s_n", 0.0, 1.0, True, True)
    alpha = check_real(alpha, "alpha", 0.0, 1.0)
    beta = check_real(beta, "beta", 0.0, 1.0)
    m = check_count(m, "m", minimum=1)
    eta = check_real(eta, "eta", 0.0, 1.0, high_open=True)
    c = c0(epsilon)
    if strict and max(alpha, beta) > 1.0 / (3.0 * c):
        raise PreconditionError(
            f"need max(alpha, beta) <= 1/(3 c0) = {1.0 / (3.0 * c):.6g}, "
            f"got alpha={alpha}, beta={beta}"
        )
    log_n = math.log(m) / (1.0 - s_n)
    radicand = 2.0 * s_n * log_n + 2.0 * math.log(1.0 / (alpha + 1.0 / m))
    return (1.0 - eta) / (math.sqrt(2.0 * math.pi) * c) / (beta + 1.0 / m) * math.sqrt(
        max(radicand, 0.0)
    )


class LehmannBound(NamedTuple):
    t: float
    inv_gamma_lb: float


def lehmann_gamma_lower(alpha, beta, epsilon, m, n):
    """Lower bound on ``1/gamma`` in the Lehmann alternative model."""
    alpha = check_real(alpha, "alpha", 0.0, 1.0, low_open=True)
    beta = check_real(beta, "beta", 0.0, 1.0)
    m = check_count(m, "m", minimum=1)
    n = check_count(n, "n", minimum=m + 1)
    c = c0(epsilon)
    if alpha > epsilon / 3.0:
        raise PreconditionError(f"need alpha <= epsilon/3, got alpha={alpha}")
    t = 3.0 * beta / epsilon + 1.0 / m + math.sqrt(3.0 * c * beta / (m * epsilon))
    if not t < 1.0:
        raise PreconditionError(f"bound is vacuous: t={t:.6g} >= 1")
    pi1 = m / n
    arg = epsilon / (3.0 * pi1 * alpha) / (1.0 + 4.0 * math.log(3.0 / epsilon))
    return LehmannBound(t, (1.0 - t) / t * math.log(arg))
