"""Dependence-balance constraint and its Lagrangian dual bound for Gaussian inputs.

For a partition ``{S_m}`` of the users into ``M >= 2`` blocks the sum rate is
bounded by ``I(X; Y)`` subject to

    I(X; Y) <= 1/(M-1) sum_m I(X_{S_m^C}; Y | X_{S_m}).

Dualizing with a multiplier ``lam >= 0`` gives the Lagrangian

    s_lam(K) = (lam - 1) I(X; Y) - lam/(M-1) sum_m I(X_{S_m^C}; Y | X_{S_m}),

and the upper bound ``-max_lam min_K s_lam(K)``, where the inner minimum runs
over covariances with diagonal pinned at the power limits.  The inner minimum
is computed by multi-start Nelder-Mead over the pairwise correlations with a
log-determinant PSD barrier; the outer maximum is a bounded 1-D search,
valid because the dual is concave in ``lam``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import DomainError, InfeasibilityError
from .gaussian_core import (
    ChannelConfig,
    CovarianceMatrix,
    Partition,
    RateValue,
    Unit,
    as_covariance,
    mutual_info_all,
    mutual_info_conditional,
)

BARRIER_WEIGHTS = (1e-6, 1e-7, 1e-8)
POLISH = True  # final round without barrier; non-PSD points stay rejected
NUM_STARTS = 8
LAMBDA_TOL = 1e-8
CONCAVITY_TOL = 1e-9


def _powers(powers) -> np.ndarray:
    if isinstance(powers, ChannelConfig):
        return powers.as_array()
    return ChannelConfig(tuple(np.asarray(powers, dtype=float))).as_array()


def _partition(partition: Partition | str | None, num_users: int) -> Partition:
    if partition is None:
        return Partition.singletons(num_users)
    if isinstance(partition, str):
        partition = Partition.parse(partition)
    if partition.num_users != num_users:
        raise DomainError(f"partition covers {partition.num_users} users, channel has {num_users}")
    return partition


def h_value(lam: float, k, powers) -> float:
    """Singleton-partition Lagrangian with the conditional terms divided by P_j.

    This is the closed form used for ``min_K h`` with ``Q_j <= P_j``; it equals
    :func:`s_lambda_gaussian` exactly when every ``Q_j = P_j``.
    """
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam!r}")
    k = as_covariance(k)
    p = _powers(powers)
    if p.size != k.dim:
        raise DomainError(f"expected {k.dim} power limits, got {p.size}")
    J = k.dim
    m = k.matrix
    total = 1.0 + m.sum()
    rows = m.sum(axis=1)
    args = total - rows**2 / p
    if np.any(args <= 0.0):
        raise InfeasibilityError("log argument <= 0: some input variance exceeds its power limit")
    return 0.5 * (lam - 1.0) * math.log(total) - lam / (2.0 * (J - 1)) * float(np.sum(np.log(args)))


def s_lambda_gaussian(lam: float, k, partition: Partition | str | None = None) -> float:
    """Exact Gaussian Lagrangian s_lam for covariance K and the given partition (nats)."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam!r}")
    k = as_covariance(k)
    part = _partition(partition, k.dim)
    m_blocks = part.num_blocks
    total = mutual_info_all(k).value
    cond = sum(mutual_info_conditional(k, b).value for b in part.blocks)
    return (lam - 1.0) * total - lam / (m_blocks - 1) * cond


class Feasibility(NamedTuple):
    feasible: bool
    slack: float


def depbal_feasible(k, partition: Partition | str | None = None, tol: float = 0.0) -> Feasibility:
    """Check ``I(X;Y) <= 1/(M-1) sum_m I(X_{S_m^C}; Y | X_{S_m})``.

    ``slack`` is the right side minus the left side, in nats.
    """
    k = as_covariance(k)
    part = _partition(partition, k.dim)
    produced = sum(mutual_info_conditional(k, b).value for b in part.blocks) / (part.num_blocks - 1)
    slack = produced - mutual_info_all(k).value
    return Feasibility(bool(slack >= -tol), float(slack))


class _InnerObjective:
    """s_lam over the pairwise-correlation vector, diagonal fixed at P, with PSD barrier."""

    def __init__(self, powers: np.ndarray, partition: Partition):
        self.p = powers
        self.J = powers.size
        self.iu = np.triu_indices(self.J, 1)
        self.il = (self.iu[1], self.iu[0])
        self.scale = np.sqrt(np.outer(powers, powers))
        self.corr = np.eye(self.J)
        self.singleton = partition.is_singleton
        self.blocks = partition.sorted_blocks()
        self.m_blocks = partition.num_blocks

    def covariance(self, r: np.ndarray) -> np.ndarray:
        c = self.corr
        c[self.iu] = r
        c[self.il] = r
        return self.scale * c

    def _log_cond_vars(self, k: np.ndarray, total: float) -> float:
        rows = k.sum(axis=1)
        if self.singleton:
            return float(np.sum(np.log(total - rows**2 / self.p)))
        out = 0.0
        for b in self.blocks:
            cb = rows[b]
            kbb = k[np.ix_(b, b)]
            out += math.log(total - float(cb @ np.linalg.solve(kbb, cb)))
        return out

    def value(self, r: np.ndarray, lam: float) -> float:
        k = self.covariance(r)
        total = 1.0 + k.sum()
        return 0.5 * (lam - 1.0) * math.log(total) - lam / (2.0 * (self.m_blocks - 1)) * self._log_cond_vars(k, total)

    def __call__(self, r: np.ndarray, lam: float, mu: float) -> float:
        k = self.covariance(r)
        w = np.linalg.eigvalsh(self.corr)
        if w[0] <= 0.0:
            return math.inf
        total = 1.0 + k.sum()
        try:
            logs = self._log_cond_vars(k, total)
        except (ValueError, np.linalg.LinAlgError):
            return math.inf
        return (0.5 * (lam - 1.0) * math.log(total) - lam / (2.0 * (self.m_blocks - 1)) * logs
                - mu * float(np.sum(np.log(w))))


def random_correlation(num_users: int, rng: np.random.Generator) -> np.ndarray:
    """corr(A A^T) for a standard normal J x J matrix A."""
    a = rng.standard_normal((num_users, num_users))
    s = a @ a.T
    d = np.sqrt(np.diag(s))
    return s / np.outer(d, d)


def _starts(num_users: int, count: int, seed: int) -> list[np.ndarray]:
    n = num_users * (num_users - 1) // 2
    starts = [np.zeros(n)] + [np.full(n, a) for a in (0.25, 0.5, 0.75)]
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(num_users, 1)
    while len(starts) < count:
        starts.append(random_correlation(num_users, rng)[iu])
    return starts[:count]


def _simplex(x: np.ndarray, step: float) -> np.ndarray:
    s = np.tile(x, (x.size + 1, 1))
    for i in range(x.size):
        s[i + 1, i] += step if x[i] + step < 1.0 else -step
    return s


@dataclass(frozen=True)
class InnerMinResult:
    covariance: CovarianceMatrix
    value: float
    evaluations: int

    @property
    def correlations(self) -> np.ndarray:
        return self.covariance.correlation_vector()


def inner_min(
    lam: float,
    powers,
    partition: Partition | str | None = None,
    *,
    num_starts: int = NUM_STARTS,
    seed: int = 0,
) -> InnerMinResult:
    """Minimize s_lam over PSD covariances with diagonal equal to the power limits.

    Starts: rho = 0, equicorrelation 0.25/0.5/0.75 and seeded random
    correlation matrices.  Each start runs Nelder-Mead under barrier weight
    1e-6; starts that land within 1e-3 of an earlier one are merged, and the
    survivors are refined at weights 1e-7 and 1e-8, then once more with the
    barrier off (the eigenvalue test still rejects non-PSD points).  The
    reported value is the barrier-free Lagrangian at the best point.
    """
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam!r}")
    p = _powers(powers)
    part = _partition(partition, p.size)
    obj = _InnerObjective(p, part)
    evaluations = 0
    basins: list[np.ndarray] = []
    first, *refine = BARRIER_WEIGHTS
    for x0 in _starts(p.size, num_starts, seed):
        res = minimize(obj, x0, args=(lam, first), method="Nelder-Mead",
                       options=dict(initial_simplex=_simplex(x0, 0.1), xatol=1e-5, fatol=1e-11, maxfev=20000))
        evaluations += res.nfev
        if math.isfinite(res.fun) and all(np.max(np.abs(res.x - b)) > 1e-3 for b in basins):
            basins.append(res.x)
    if not basins:
        raise AssertionError("every start was PSD-infeasible")
    best_x, best_v = None, math.inf
    for x in basins:
        for mu in list(refine) + ([0.0] if POLISH else []):
            res = minimize(obj, x, args=(lam, mu), method="Nelder-Mead",
                           options=dict(initial_simplex=_simplex(x, 1e-3), xatol=1e-8, fatol=1e-14, maxfev=20000))
            evaluations += res.nfev
            x = res.x
        v = obj.value(x, lam)
        if v < best_v:
            best_x, best_v = x, v
    k = CovarianceMatrix(obj.covariance(best_x).copy())
    return InnerMinResult(k, best_v, evaluations)


@dataclass(frozen=True)
class DualBoundResult:
    bound: RateValue
    lambda_opt: float
    K_opt: CovarianceMatrix
    inner_value: float
    partition: Partition
    concavity_warning: bool = False
    trace: tuple[tuple[float, float], ...] = field(default=(), repr=False)


def _concavity_violated(points: dict[float, float]) -> bool:
    lams = sorted(points)
    for a, b, c in zip(lams, lams[1:], lams[2:]):
        t = (b - a) / (c - a)
        if points[b] < (1 - t) * points[a] + t * points[c] - CONCAVITY_TOL:
            return True
    return False


def dual_bound(
    powers,
    partition: Partition | str | None = None,
    lambdas: Sequence[float] | None = None,
    *,
    unit: Unit | str = Unit.NATS,
    lambda_tol: float = LAMBDA_TOL,
    num_starts: int = NUM_STARTS,
    seed: int = 0,
) -> DualBoundResult:
    """Upper bound ``-max_lam min_K s_lam(K)`` on the feedback sum rate.

    With ``lambdas`` given the dual is maximized over that grid only.
    Otherwise the bracket ``[0, 1]`` is doubled until the dual decreases and
    a bounded Brent search locates the maximizer to ``lambda_tol``.  A
    concavity violation among the evaluated points (possible only if a local
    search missed the inner minimum) sets ``concavity_warning``.
    """
    p = _powers(powers)
    part = _partition(partition, p.size)
    cache: dict[float, InnerMinResult] = {}

    def dual(lam: float) -> float:
        lam = float(lam)
        if lam not in cache:
            cache[lam] = inner_min(lam, p, part, num_starts=num_starts, seed=seed)
        return cache[lam].value

    if lambdas is not None:
        grid = [float(x) for x in lambdas]
        if not grid or min(grid) < 0:
            raise DomainError("lambda grid must be nonempty and nonnegative")
        lam_opt = max(grid, key=dual)
    else:
        hi = 1.0
        g_hi = dual(hi)
        while True:
            g_next = dual(2.0 * hi)
            if g_next <= g_hi or hi > 1e6:
                break
            hi, g_hi = 2.0 * hi, g_next
        upper = 2.0 * hi
        lower = hi / 2.0 if hi > 1.0 else 0.0
        res = minimize_scalar(lambda x: -dual(x), bounds=(lower, upper), method="bounded",
                              options=dict(xatol=lambda_tol))
        candidates = [res.x] + list(cache)
        lam_opt = max(candidates, key=dual)
    best = cache[float(lam_opt)]
    points = {lam: r.value for lam, r in cache.items()}
    violated = _concavity_violated(points)
    if violated:
        warnings.warn("dual function is not concave on the evaluated points; inner minimum may be inexact",
                      RuntimeWarning, stacklevel=2)
    return DualBoundResult(
        bound=RateValue(max(-best.value, 0.0)).to(unit),
        lambda_opt=float(lam_opt),
        K_opt=best.covariance,
        inner_value=best.value,
        partition=part,
        concavity_warning=violated,
        trace=tuple(sorted(points.items())),
    )
