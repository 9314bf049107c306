"""Feedback sum-rate capacity of the symmetric J-user GMAC.

The capacity is ``1/2 ln(1 + J P beta)`` where ``beta`` in ``[1, J]`` is the
unique root of

    ell(beta) = 1/2 ln(1 + J P beta) - J/(2(J-1)) ln(1 + P beta (J - beta)),

equivalently ``(1 + J P beta)^(J-1) = (1 + P beta (J - beta))^J``.  ``ell`` is
convex on ``[1, J]`` with ``ell(1) < 0 < ell(J)``, so plain bisection on that
bracket always converges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, SingularityError
from .gaussian_core import RateValue, Unit

MAX_BISECTION_STEPS = 200


def _check_channel(num_users: int, power: float) -> None:
    if int(num_users) != num_users or num_users < 2:
        raise DomainError(f"number of users must be an integer >= 2, got {num_users!r}")
    if not (power > 0 and math.isfinite(power)):
        raise DomainError(f"power must be positive, got {power!r}")


def ell(beta: float, num_users: int, power: float) -> float:
    """Dependence-balance slack ell(beta, J, P) in nats."""
    _check_channel(num_users, power)
    J, P = int(num_users), float(power)
    if not 0.0 <= beta <= J:
        raise DomainError(f"beta must lie in [0, {J}], got {beta!r}")
    return 0.5 * math.log1p(J * P * beta) - J / (2.0 * (J - 1)) * math.log1p(P * beta * (J - beta))


def root_residual(beta: float, num_users: int, power: float) -> float:
    """Relative mismatch of ``(1+JP beta)^(J-1)`` and ``(1+P beta(J-beta))^J``."""
    J, P = int(num_users), float(power)
    lhs = (1.0 + J * P * beta) ** (J - 1)
    rhs = (1.0 + P * beta * (J - beta)) ** J
    return abs(lhs - rhs) / lhs


@dataclass(frozen=True)
class CapacitySolution:
    num_users: int
    power: float
    beta_star: float
    capacity: RateValue
    lambda_star: float
    residual: float
    iterations: int

    @property
    def rho_star(self) -> float:
        """Equicorrelation coefficient with ``beta = 1 + (J-1) rho``."""
        return (self.beta_star - 1.0) / (self.num_users - 1)


def solve_beta(num_users: int, power: float, tol: float = 1e-12) -> CapacitySolution:
    """Bisect ell on [1, J] until both the bracket width and |ell| are <= tol.

    If the bracket collapses to adjacent floats first, the endpoint with the
    smaller residual is returned.
    """
    _check_channel(num_users, power)
    J, P = int(num_users), float(power)
    lo, hi = 1.0, float(J)
    f_lo, f_hi = ell(lo, J, P), ell(hi, J, P)
    assert f_lo < 0.0 < f_hi, "bracket [1, J] must change sign"
    beta, f_beta = lo, f_lo
    for iterations in range(1, MAX_BISECTION_STEPS + 1):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            beta, f_beta = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
            break
        f_mid = ell(mid, J, P)
        beta, f_beta = mid, f_mid
        if f_mid < 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo <= tol and abs(f_mid) <= tol:
            break
    else:
        raise AssertionError("bisection failed to converge")  # unreachable for float brackets
    return CapacitySolution(
        num_users=J,
        power=P,
        beta_star=beta,
        capacity=RateValue(0.5 * math.log1p(J * P * beta)),
        lambda_star=lambda_star(J, P, beta),
        residual=abs(f_beta),
        iterations=iterations,
    )


def sum_capacity(num_users: int, power: float, unit: Unit | str = Unit.NATS) -> RateValue:
    """Feedback sum-rate capacity of the symmetric GMAC."""
    return solve_beta(num_users, power).capacity.to(unit)


def lambda_star(num_users: int, power: float, beta: float) -> float:
    """Closed-form optimal multiplier of the scalar dual problem."""
    _check_channel(num_users, power)
    J, P = int(num_users), float(power)
    denom = 1.0 - (J - 2.0 * beta) * (1.0 + J * P * beta) / ((J - 1.0) * (1.0 + P * beta * (J - beta)))
    if abs(denom) < 1e-14:
        raise SingularityError(f"lambda* is singular at beta={beta!r}")
    return 1.0 / denom


def dual_objective(lam: float, beta: float, num_users: int, power: float) -> float:
    """Lagrangian -1/2 ln(1 + J P beta) + lam * ell(beta)."""
    J, P = int(num_users), float(power)
    return -0.5 * math.log1p(J * P * beta) + lam * ell(beta, J, P)
