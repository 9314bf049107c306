"""Closed-form Gaussian information quantities for the channel Y = sum_j X_j + Z.

The noise Z is standard normal and all channel gains are normalized to one.
Everything here reduces to covariance algebra: the output variance is
``1 + 1^T K 1`` and conditioning on a subset of inputs is a Schur complement
of the joint covariance of ``(X_S, Y)``.

All rates are computed in nats; :class:`RateValue` converts to bits on demand.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, PSDViolationError

PSD_RTOL = 1e-10
PINV_RCOND = 1e-12
POWER_ATOL = 1e-12
SYMMETRY_RTOL = 1e-12


class Unit(str, enum.Enum):
    NATS = "nats"
    BITS = "bits"

    @classmethod
    def parse(cls, value: "Unit | str") -> "Unit":
        if isinstance(value, Unit):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown rate unit {value!r}; expected 'nats' or 'bits'") from None


@dataclass(frozen=True)
class RateValue:
    """A nonnegative information rate tagged with its unit."""

    value: float
    unit: Unit = Unit.NATS

    def __post_init__(self):
        object.__setattr__(self, "unit", Unit.parse(self.unit))
        object.__setattr__(self, "value", float(self.value))
        if not self.value >= 0.0:
            raise DomainError(f"rate must be nonnegative, got {self.value!r}")

    def to(self, unit: Unit | str) -> "RateValue":
        unit = Unit.parse(unit)
        if unit is self.unit:
            return self
        if unit is Unit.BITS:
            return RateValue(self.value / math.log(2.0), Unit.BITS)
        return RateValue(self.value * math.log(2.0), Unit.NATS)

    @property
    def nats(self) -> float:
        return self.to(Unit.NATS).value

    @property
    def bits(self) -> float:
        return self.to(Unit.BITS).value

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return f"{self.value:.12g} {self.unit.value}"


def convert_rate(rate: RateValue, unit: Unit | str) -> RateValue:
    """Convert ``rate`` to ``unit`` (bits = nats / ln 2)."""
    return rate.to(unit)


@dataclass(frozen=True)
class ChannelConfig:
    """Per-user power limits of a J-user GMAC with unit-variance noise."""

    powers: tuple[float, ...]
    noise_variance: float = 1.0

    def __post_init__(self):
        powers = tuple(float(p) for p in np.atleast_1d(np.asarray(self.powers, dtype=float)))
        object.__setattr__(self, "powers", powers)
        if len(powers) < 2:
            raise DomainError(f"need at least two users, got {len(powers)}")
        if not all(p > 0 and math.isfinite(p) for p in powers):
            raise DomainError(f"every power must be positive and finite, got {powers}")
        if self.noise_variance != 1.0:
            raise DomainError("noise variance is fixed to 1; rescale powers instead")

    @classmethod
    def symmetric(cls, num_users: int, power: float) -> "ChannelConfig":
        if int(num_users) != num_users or num_users < 2:
            raise DomainError(f"number of users must be an integer >= 2, got {num_users!r}")
        return cls((float(power),) * int(num_users))

    @classmethod
    def with_gains(cls, powers: Sequence[float], gains: Sequence[float]) -> "ChannelConfig":
        """Absorb channel gains into the powers, P_j <- g_j^2 P_j."""
        powers = np.asarray(powers, dtype=float)
        gains = np.asarray(gains, dtype=float)
        if powers.shape != gains.shape:
            raise DomainError("powers and gains must have the same length")
        return cls(tuple(gains**2 * powers))

    @property
    def num_users(self) -> int:
        return len(self.powers)

    @property
    def is_symmetric(self) -> bool:
        return max(self.powers) - min(self.powers) <= 1e-15 * max(self.powers)

    def as_array(self) -> np.ndarray:
        return np.array(self.powers)


def _min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(a)[0]) if a.size else 0.0


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric PSD input covariance K (power units).

    The stored matrix is symmetrized and read-only.  PSD is checked with a
    tolerance of ``-1e-10 * trace`` so rank-deficient boundary points, such as
    the equicorrelated ``rho = -1/(J-1)``, are accepted.
    """

    matrix: np.ndarray
    min_eigenvalue: float = field(init=False)

    def __post_init__(self):
        k = np.array(self.matrix, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] < 1:
            raise DomainError(f"covariance must be a square matrix, got shape {k.shape}")
        if not np.all(np.isfinite(k)):
            raise DomainError("covariance has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(k))))
        if np.max(np.abs(k - k.T)) > SYMMETRY_RTOL * scale:
            raise DomainError("covariance is not symmetric")
        k = 0.5 * (k + k.T)
        lam_min = _min_eigenvalue(k)
        if lam_min < -PSD_RTOL * max(float(np.trace(k)), 0.0):
            raise PSDViolationError(lam_min)
        k.setflags(write=False)
        object.__setattr__(self, "matrix", k)
        object.__setattr__(self, "min_eigenvalue", lam_min)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    @property
    def correlations(self) -> np.ndarray:
        """Correlation coefficients K_jk / sqrt(Q_j Q_k); zero where a variance vanishes."""
        q = self.variances
        scale = np.sqrt(np.outer(q, q))
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(scale > 0, self.matrix / scale, 0.0)
        np.fill_diagonal(rho, 1.0)
        return rho

    def correlation_vector(self) -> np.ndarray:
        """Upper-triangle correlations in the order (1,2), (1,3), ..., (J-1,J)."""
        return self.correlations[np.triu_indices(self.dim, 1)]

    def satisfies(self, powers: Sequence[float] | ChannelConfig) -> bool:
        """True if ``Q_j <= P_j`` (up to 1e-12) for every user."""
        p = powers.as_array() if isinstance(powers, ChannelConfig) else np.asarray(powers, float)
        if p.shape != (self.dim,):
            raise DomainError(f"expected {self.dim} power limits, got {p.shape}")
        return bool(np.all(self.variances <= p + POWER_ATOL))

    def __repr__(self) -> str:
        return f"CovarianceMatrix({np.array2string(self.matrix, precision=6)})"


def as_covariance(k: CovarianceMatrix | np.ndarray | Sequence[Sequence[float]]) -> CovarianceMatrix:
    return k if isinstance(k, CovarianceMatrix) else CovarianceMatrix(np.asarray(k, dtype=float))


def build_covariance(
    powers: Sequence[float] | ChannelConfig,
    correlations: float | Sequence[float] | np.ndarray,
) -> CovarianceMatrix:
    """Build K with ``K_jj = P_j`` and ``K_jk = rho_jk sqrt(P_j P_k)``.

    ``correlations`` is either a scalar (equicorrelation), the upper-triangle
    vector ``(rho_12, rho_13, ..., rho_(J-1)J)`` or a full correlation matrix.
    Raises :class:`PSDViolationError` when the result is not PSD.
    """
    p = powers.as_array() if isinstance(powers, ChannelConfig) else np.asarray(powers, dtype=float)
    if p.ndim != 1 or p.size < 1 or np.any(p < 0):
        raise DomainError("powers must be a vector of nonnegative values")
    j = p.size
    r = np.asarray(correlations, dtype=float)
    if r.ndim == 0:
        rho = float(r)
        if j > 1 and rho < -1.0 / (j - 1) - 1e-15:
            raise PSDViolationError(
                (1 + (j - 1) * rho) * float(p.min()),
                f"equicorrelation {rho} is below the PSD limit -1/(J-1) = {-1.0 / (j - 1):.6g}",
            )
        c = np.full((j, j), rho)
    elif r.ndim == 1:
        if r.size != j * (j - 1) // 2:
            raise DomainError(f"expected {j * (j - 1) // 2} pairwise correlations, got {r.size}")
        c = np.zeros((j, j))
        iu = np.triu_indices(j, 1)
        c[iu] = r
        c = c + c.T
    elif r.shape == (j, j):
        c = np.array(r)
    else:
        raise DomainError(f"cannot interpret correlations of shape {r.shape}")
    if np.any(np.abs(c) > 1 + 1e-15):
        raise DomainError("correlation coefficients must lie in [-1, 1]")
    np.fill_diagonal(c, 1.0)
    sq = np.sqrt(p)
    return CovarianceMatrix(c * np.outer(sq, sq))


def _index_set(s: Iterable[int] | None, dim: int) -> list[int]:
    if s is None:
        return []
    idx = sorted({int(i) for i in s})
    if idx and (idx[0] < 0 or idx[-1] >= dim):
        raise DomainError(f"index set {idx} out of range for {dim} users")
    return idx


def output_variance(k) -> float:
    """K_Y = 1 + sum_jk K_jk."""
    k = as_covariance(k)
    return 1.0 + float(k.matrix.sum())


def conditional_output_variance(k, given: Iterable[int] | None) -> float:
    """Var(Y | X_S) = K_Y - K_{Y,S} K_S^+ K_{S,Y}, with 0-based indices S.

    A singular K_S is handled with a pseudo-inverse (relative pivot 1e-12),
    which is exact when the dependent inputs are linear functions of the rest.
    """
    k = as_covariance(k)
    idx = _index_set(given, k.dim)
    ky = output_variance(k)
    if not idx:
        return ky
    if len(idx) == k.dim:
        return 1.0
    m = k.matrix
    cross = m[idx, :].sum(axis=1)  # Cov(X_S, Y) = (K 1)_S
    kss = m[np.ix_(idx, idx)]
    quad = float(cross @ np.linalg.pinv(kss, rcond=PINV_RCOND, hermitian=True) @ cross)
    return min(max(ky - quad, 1.0), ky)


def mutual_info_all(k, unit: Unit | str = Unit.NATS) -> RateValue:
    """I(X_1..X_J; Y) = 1/2 ln K_Y."""
    return RateValue(0.5 * math.log(output_variance(k))).to(unit)


def mutual_info_conditional(k, given: Iterable[int] | None, unit: Unit | str = Unit.NATS) -> RateValue:
    """I(X_{S^C}; Y | X_S) = 1/2 ln Var(Y | X_S)."""
    return RateValue(0.5 * math.log(conditional_output_variance(k, given))).to(unit)


def _logdet_pd(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    sign, logdet = np.linalg.slogdet(a)
    if sign <= 0:
        raise PSDViolationError(_min_eigenvalue(a), "conditional covariance is singular")
    return float(logdet)


def gaussian_mutual_information(
    cov: np.ndarray,
    a: Sequence[int],
    b: Sequence[int],
    given: Sequence[int] = (),
) -> float:
    """I(V_a; V_b | V_given) in nats for a zero-mean Gaussian vector V ~ N(0, cov).

    Computed from the Schur complement of ``cov`` onto ``a + b`` given
    ``given``.  Index sets must be disjoint; ``a`` and ``b`` must be
    nondegenerate given ``given``.
    """
    cov = np.asarray(cov, dtype=float)
    a, b, c = list(a), list(b), list(given)
    if not a or not b:
        return 0.0
    ab = a + b
    s = cov[np.ix_(ab, ab)]
    if c:
        cross = cov[np.ix_(ab, c)]
        s = s - cross @ np.linalg.pinv(cov[np.ix_(c, c)], rcond=PINV_RCOND, hermitian=True) @ cross.T
    s = 0.5 * (s + s.T)
    na = len(a)
    return 0.5 * (_logdet_pd(s[:na, :na]) + _logdet_pd(s[na:, na:]) - _logdet_pd(s))


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks S_1..S_M (0-based user indices) covering all users, M >= 2."""

    blocks: tuple[frozenset[int], ...]

    def __post_init__(self):
        blocks = tuple(frozenset(int(i) for i in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if len(blocks) < 2:
            raise DomainError(f"a partition needs at least two blocks, got {len(blocks)}")
        if any(not b for b in blocks):
            raise DomainError("partition blocks must be nonempty")
        union = frozenset().union(*blocks)
        if sum(len(b) for b in blocks) != len(union):
            raise DomainError("partition blocks overlap")
        if union != frozenset(range(len(union))):
            raise DomainError(f"partition must cover users 0..{len(union) - 1} exactly")

    @classmethod
    def singletons(cls, num_users: int) -> "Partition":
        return cls(tuple(frozenset((j,)) for j in range(num_users)))

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """Parse 1-based notation such as ``"{1},{2,3}"``."""
        groups = re.findall(r"\{([^{}]*)\}", text)
        if not groups or re.sub(r"\{[^{}]*\}|[\s,]", "", text):
            raise DomainError(f"cannot parse partition {text!r}; use e.g. '{{1}},{{2,3}}'")
        blocks = []
        for g in groups:
            items = [t for t in re.split(r"[\s,]+", g.strip()) if t]
            try:
                blocks.append(frozenset(int(t) - 1 for t in items))
            except ValueError:
                raise DomainError(f"non-integer user index in {text!r}") from None
        return cls(tuple(blocks))

    @property
    def num_users(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def is_singleton(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def sorted_blocks(self) -> list[list[int]]:
        return [sorted(b) for b in self.blocks]

    def __str__(self) -> str:
        return ",".join("{" + ",".join(str(i + 1) for i in sorted(b)) + "}" for b in self.blocks)
