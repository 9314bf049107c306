"""Cut-set upper bounds for symmetric equicorrelated GMACs with feedback.

For a cut S of size k the rate bound ``R_S <= I(X_S; Y | X_{S^C})`` averaged
over all size-k cuts gives

    R_sum <= J/(2k) ln(1 + Var(sum_{j in S} X_j | X_{S^C})).

With equicorrelated inputs this reproduces the two-user curves (f1 = cut of
size 2, f2 = size 1) and the three-user curves (g1, g2, g3 = sizes 3, 2, 1).
The cut-set sum-rate bound is the max over rho of the min over k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .gaussian_core import RateValue, Unit, build_covariance, conditional_output_variance

GRID_STEP = 1e-3
RHO_TOL = 1e-12
TIE_TOL = 1e-8
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _check(num_users: int, power: float) -> None:
    if int(num_users) != num_users or num_users < 2:
        raise DomainError(f"number of users must be an integer >= 2, got {num_users!r}")
    if not (power > 0 and math.isfinite(power)):
        raise DomainError(f"power must be positive, got {power!r}")


def rho_range(num_users: int) -> tuple[float, float]:
    """Equicorrelation values for which the input covariance is PSD."""
    return -1.0 / (num_users - 1), 1.0


def _check_rho(num_users: int, rho: float) -> None:
    lo, hi = rho_range(num_users)
    if not lo - 1e-15 <= rho <= hi + 1e-15:
        raise DomainError(f"rho={rho!r} outside the PSD range [{lo:.6g}, 1] for J={num_users}")


def two_user_cuts(power: float, rho: float) -> tuple[float, float]:
    """(f1, f2): the sum cut ``1/2 ln(1+2P(1+rho))`` and the individual cut ``ln(1+P(1-rho^2))``."""
    _check(2, power)
    _check_rho(2, rho)
    f1 = 0.5 * math.log1p(2.0 * power * (1.0 + rho))
    f2 = math.log1p(power * (1.0 - rho * rho))
    return f1, f2


def three_user_cuts(power: float, rho: float) -> tuple[float, float, float]:
    """(g1, g2, g3) for cuts of size 3, 2 and 1."""
    _check(3, power)
    _check_rho(3, rho)
    P = power
    g1 = 0.5 * math.log1p(3.0 * P * (1.0 + 2.0 * rho))
    g2 = 0.75 * math.log1p(2.0 * P * (1.0 - rho) * (1.0 + 2.0 * rho))
    g3 = 1.5 * math.log1p(P * (1.0 + 2.0 * rho) * (1.0 - rho) / (1.0 + rho))
    return g1, g2, g3


@dataclass(frozen=True)
class CutCurvePoint:
    """Per-cut-size bounds at one rho; ``values[k-1]`` belongs to cut size k."""

    rho: float
    values: tuple[float, ...]

    @property
    def envelope(self) -> float:
        return min(self.values)


def cut_curve(num_users: int, power: float, rho: float) -> CutCurvePoint:
    """All symmetry-averaged cut bounds (nats) at equicorrelation ``rho``."""
    _check(num_users, power)
    _check_rho(num_users, rho)
    J = int(num_users)
    k_mat = build_covariance(np.full(J, float(power)), min(max(rho, -1.0 / (J - 1)), 1.0))
    values = []
    for k in range(1, J + 1):
        # S = first k users, condition on the remaining J-k
        var_sum = conditional_output_variance(k_mat, range(k, J)) - 1.0
        values.append(J / (2.0 * k) * math.log1p(max(var_sum, 0.0)))
    return CutCurvePoint(float(rho), tuple(values))


def general_cut(num_users: int, power: float, rho: float, k: int, unit: Unit | str = Unit.NATS) -> RateValue:
    """Symmetry-averaged cut bound for cuts of size ``k``."""
    if not 1 <= k <= num_users:
        raise DomainError(f"cut size k must lie in [1, {num_users}], got {k!r}")
    return RateValue(cut_curve(num_users, power, rho).values[k - 1]).to(unit)


@dataclass(frozen=True)
class BoundReport:
    """An upper bound together with the optimizer that attains it."""

    bound: RateValue
    rho_star: float
    binding_cuts: tuple[int, ...]
    cut_values: tuple[float, ...]

    @property
    def beta_star(self) -> float:
        return 1.0 + (len(self.cut_values) - 1) * self.rho_star


def _golden_max(f, a: float, b: float, tol: float) -> float:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def cutset_sum_bound(
    num_users: int,
    power: float,
    unit: Unit | str = Unit.NATS,
    grid_step: float = GRID_STEP,
    tol: float = RHO_TOL,
) -> BoundReport:
    """max over rho of min over k of the size-k cut bound.

    A dense grid locates the best cell, then golden-section search refines
    the min-envelope on the neighbouring cells.  Cuts within 1e-8 nats of the
    envelope at the optimum are reported as binding.
    """
    _check(num_users, power)
    J, P = int(num_users), float(power)
    lo, hi = rho_range(J)
    n = int(math.ceil((hi - lo) / grid_step))
    grid = np.linspace(lo, hi, n + 1)
    env = np.array([cut_curve(J, P, r).envelope for r in grid])
    i = int(np.argmax(env))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n)]

    def envelope(r: float) -> float:
        return cut_curve(J, P, r).envelope

    rho_star = _golden_max(envelope, a, b, tol)
    # endpoints are candidates too when the maximum sits on the boundary
    candidates = [(envelope(r), r) for r in (a, rho_star, b)]
    _, rho_star = max(candidates)
    point = cut_curve(J, P, rho_star)
    binding = tuple(k + 1 for k, v in enumerate(point.values) if v - point.envelope <= TIE_TOL)
    return BoundReport(
        bound=RateValue(point.envelope).to(unit),
        rho_star=float(rho_star),
        binding_cuts=binding,
        cut_values=point.values,
    )


def two_user_feedback_sum_capacity(p1: float, p2: float, unit: Unit | str = Unit.NATS) -> RateValue:
    """Two-user feedback sum-rate capacity for arbitrary powers.

    Maximizes ``min{1/2 ln(1+P1+P2+2 rho sqrt(P1 P2)),
    1/2 ln(1+P1(1-rho^2)) + 1/2 ln(1+P2(1-rho^2))}`` over rho in [0, 1]; the
    first term increases and the second decreases in rho, so the optimum is
    their crossing.
    """
    if not (p1 > 0 and p2 > 0):
        raise DomainError("powers must be positive")
    s = math.sqrt(p1 * p2)

    def gap(rho: float) -> float:
        total = 0.5 * math.log1p(p1 + p2 + 2.0 * rho * s)
        indiv = 0.5 * (math.log1p(p1 * (1 - rho * rho)) + math.log1p(p2 * (1 - rho * rho)))
        return total - indiv

    rho = brentq(gap, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return RateValue(0.5 * math.log1p(p1 + p2 + 2.0 * rho * s)).to(unit)
