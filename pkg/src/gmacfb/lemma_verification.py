"""Randomized numeric checks of the inequalities behind the converse.

Every check returns a :class:`CheckReport` carrying the number of trials,
the number of failures and the worst margin seen (smallest slack for an
inequality, largest deviation for an identity), so numerical drift is
visible even when nothing fails.  Checks are deterministic given ``seed``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .dependence_balance import h_value, random_correlation, s_lambda_gaussian
from .gaussian_core import Partition, gaussian_mutual_information
from .symmetric_capacity import ell, lambda_star, solve_beta

EQ_ATOL = 1e-9
DET_RTOL = 1e-9
DEFAULT_USERS = tuple(range(2, 11))


def default_powers(n: int = 25) -> np.ndarray:
    return np.logspace(-3, 3, n)


@dataclass
class CheckReport:
    check_name: str
    trials: int = 0
    failures: int = 0
    worst_margin: float = math.inf
    seed: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.failures == 0

    def record(self, margin: float, ok: bool) -> None:
        self.trials += 1
        self.failures += 0 if ok else 1
        self.worst_margin = min(self.worst_margin, float(margin))

    def merge(self, other: "CheckReport") -> "CheckReport":
        self.trials += other.trials
        self.failures += other.failures
        self.worst_margin = min(self.worst_margin, other.worst_margin)
        for key, value in other.details.items():
            if isinstance(value, (int, float)) and isinstance(self.details.get(key), (int, float)):
                self.details[key] = self.details[key] + value if isinstance(value, int) else min(self.details[key], value)
            else:
                self.details.setdefault(key, value)
        return self

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = "".join(f" {k}={_fmt(v)}" for k, v in sorted(self.details.items()))
        seed = "" if self.seed is None else f" seed={self.seed}"
        return (f"{status} {self.check_name}: trials={self.trials} failures={self.failures} "
                f"worst_margin={self.worst_margin:.3e}{seed}{extra}")


def _fmt(v) -> str:
    return f"{v:.3e}" if isinstance(v, float) else str(v)


def _as_list(x) -> list:
    return [x] if np.isscalar(x) else list(x)


def random_covariance(powers: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """D^(1/2) corr(A A^T) D^(1/2) with D = diag(powers)."""
    sq = np.sqrt(np.asarray(powers, dtype=float))
    return random_correlation(sq.size, rng) * np.outer(sq, sq)


# ---------------------------------------------------------------- convexity

def ell_second_derivative_poly(beta: float, num_users: int, power: float) -> float:
    """Second derivative of ell from its closed-form numerator.

    ell'' = J * N(gamma) / (2 (J-1) (1 + J P beta)^2 (1 + P beta (J-beta))^2)
    with gamma = beta - 1, M = J - 3 and N the quartic below.
    """
    J, P = num_users, power
    g, m = beta - 1.0, J - 3.0
    coeffs = (
        m**3 * P**4 + 8 * m**2 * P**4 + 2 * m**2 * P**3 + 22 * m * P**4 + 14 * m * P**3
        + 3 * m * P**2 + 21 * P**4 + 24 * P**3 + 11 * P**2 + 2 * P,
        2 * m**3 * P**4 + 16 * m**2 * P**4 + 2 * m**2 * P**3 + 46 * m * P**4 + 20 * m * P**3
        + 2 * m * P**2 + 48 * P**4 + 42 * P**3 + 10 * P**2,
        m**3 * P**4 + 9 * m**2 * P**4 + 33 * m * P**4 + 10 * m * P**3 + 45 * P**4 + 30 * P**3 + 2 * P**2,
        2 * m**2 * P**4 + 16 * m * P**4 + 4 * m * P**3 + 30 * P**4 + 12 * P**3,
        m**2 * P**4 + 7 * m * P**4 + 12 * P**4,
    )
    numerator = sum(c * g**i for i, c in enumerate(coeffs))
    u = 1.0 + P * beta * (J - beta)
    return J * numerator / (2.0 * (J - 1) * (1.0 + J * P * beta) ** 2 * u**2)


def ell_second_derivative(beta: float, num_users: int, power: float) -> float:
    """Second derivative of ell by direct differentiation of the two log terms."""
    J, P = num_users, power
    a = 1.0 + J * P * beta
    u = 1.0 + P * beta * (J - beta)
    du = P * (J - 2.0 * beta)
    return -(J * P) ** 2 / (2.0 * a**2) + J / (2.0 * (J - 1)) * (2.0 * P * u + du**2) / u**2


def check_ell_convexity(num_users: int, power: float, grid_step: float = 1e-3,
                        trials: int = 1000, seed: int = 42) -> CheckReport:
    """Convexity of ell on [1, J].

    Part 1: scaled second central differences of ell on a grid of step
    ``grid_step`` must be >= -1e-8.  Part 2 (J >= 3): at ``trials`` random
    points the quartic form of ell'' must be positive, and must agree with
    direct differentiation; sign or value disagreements are counted in
    ``details`` and also fail the check.  For J = 2 the random points test the
    exact second derivative.
    """
    J, P = int(num_users), float(power)
    rep = CheckReport(f"ell_convexity(J={J},P={P:g})", seed=seed)
    n = int(round((J - 1) / grid_step))
    betas = np.linspace(1.0, float(J), n + 1)
    vals = np.array([ell(b, J, P) for b in betas])
    h = betas[1] - betas[0]
    second = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / h**2
    for s in second:
        rep.record(s + 1e-8, s >= -1e-8)
    if J >= 3:
        rng = np.random.default_rng(seed)
        sign_mismatch = 0
        worst_rel = 0.0
        for _ in range(trials):
            beta = rng.uniform(1.0, J)
            poly = ell_second_derivative_poly(beta, J, P)
            direct = ell_second_derivative(beta, J, P)
            rel = abs(poly - direct) / max(abs(direct), 1e-300)
            worst_rel = max(worst_rel, rel)
            if (poly > 0) != (direct > 0) or rel > 1e-8:
                sign_mismatch += 1
            rep.record(poly, poly > 0)
        rep.details["poly_vs_direct_mismatches"] = sign_mismatch
        rep.details["poly_vs_direct_max_rel"] = float(worst_rel)
        rep.failures += sign_mismatch
    else:
        # the quartic is stated for J >= 3; two users get the exact second derivative instead
        rng = np.random.default_rng(seed)
        for beta in rng.uniform(1.0, J, size=trials):
            d2 = ell_second_derivative(beta, J, P)
            rep.record(d2, d2 > 0)
    return rep


# ---------------------------------------------------------------- Bernoulli

def check_bernoulli_gap(users: int | Iterable[int] = DEFAULT_USERS,
                        powers: float | Iterable[float] | None = None,
                        trials: int = 1000) -> CheckReport:
    """(1+JP)^(J-1) < (1+(J-1)P)^J, via the log-domain margin.

    Also checks the Bernoulli step ``((1+(J-1)P)/(1+JP))^(J-1) >= (1+P)/(1+JP)``
    and that ``(1+P)/(1+JP) > 1/(1+(J-1)P)``, which together imply the
    inequality.  Without explicit ``powers`` the log-grid on [1e-3, 1e3] is
    sized so that at least ``trials`` (J, P) pairs are checked.
    """
    users = _as_list(users)
    powers = default_powers(-(-trials // len(users))) if powers is None else _as_list(powers)
    rep = CheckReport("bernoulli_gap")
    chain_failures = 0
    for J in users:
        for P in powers:
            margin = J * math.log1p((J - 1) * P) - (J - 1) * math.log1p(J * P)
            rep.record(margin, margin > 0.0)
            lhs = (J - 1) * (math.log1p((J - 1) * P) - math.log1p(J * P))
            mid = math.log1p(P) - math.log1p(J * P)
            low = -math.log1p((J - 1) * P)
            if not (lhs >= mid - 1e-15 and mid > low):
                chain_failures += 1
    rep.details["chain_failures"] = chain_failures
    rep.failures += chain_failures
    return rep


# ---------------------------------------------------------------- AM-GM / Cauchy-Schwarz

def amgm_cs_gap(m: np.ndarray, power: float) -> float:
    """J ln(1 + P beta (J-beta)) - sum_j ln(1 + sum M - (sum_k M_jk)^2 / P), beta from the mean correlation."""
    J = m.shape[0]
    total = m.sum()
    beta = total / (J * power)  # sum M = P J beta
    lhs = float(np.sum(np.log(1.0 + total - m.sum(axis=1) ** 2 / power)))
    rhs = J * math.log1p(power * beta * (J - beta))
    return rhs - lhs


def check_amgm_cs(num_users: int, power: float, trials: int = 1000, seed: int = 42) -> CheckReport:
    """Product of conditional output variances is maximized at equicorrelation.

    Random PSD M with diagonal P must satisfy the inequality to 1e-10; every
    tenth trial is equicorrelated instead and must attain equality to 1e-9.
    A random draw whose row sums differ must show a gap larger than 1e-9,
    since equal row sums are exactly the equality case of both AM-GM and
    Cauchy-Schwarz (for J = 3 that means all correlations equal).
    """
    J, P = int(num_users), float(power)
    rng = np.random.default_rng(seed)
    rep = CheckReport(f"amgm_cs(J={J},P={P:g})", seed=seed)
    equality_trials = 0
    worst_equality = 0.0
    for t in range(trials):
        if t % 10 == 0:
            rho = rng.uniform(-1.0 / (J - 1), 1.0)
            m = P * (np.full((J, J), rho) + (1 - rho) * np.eye(J))
            gap = amgm_cs_gap(m, P)
            equality_trials += 1
            worst_equality = max(worst_equality, abs(gap))
            # equality margins live in details so worst_margin tracks the inequality slack
            rep.trials += 1
            rep.failures += 0 if abs(gap) <= EQ_ATOL else 1
            continue
        m = random_covariance(np.full(J, P), rng)
        gap = amgm_cs_gap(m, P)
        rows = m.sum(axis=1)
        distinct = np.ptp(rows) > 1e-3 * max(P, 1e-12)
        ok = gap >= -1e-10 and (not distinct or gap > EQ_ATOL)
        rep.record(gap, ok)
    rep.details["equality_trials"] = equality_trials
    rep.details["worst_equality_gap"] = float(worst_equality)
    return rep


# ---------------------------------------------------------------- Oppenheim step

def h_determinant_form(lam: float, k: np.ndarray) -> float:
    """Singleton Lagrangian written with determinants of the (X_j, Y) covariances.

    2h = -ln K_Y - lam/(J-1) ln[ prod_j det K_{X_j Y} / (K_Y^(J-1) prod_j Q_j) ].
    """
    J = k.shape[0]
    ky = 1.0 + k.sum()
    rows = k.sum(axis=1)
    q = np.diag(k)
    dets = q * ky - rows**2
    log_ratio = float(np.sum(np.log(dets))) - (J - 1) * math.log(ky) - float(np.sum(np.log(q)))
    return 0.5 * (-math.log(ky) - lam / (J - 1) * log_ratio)


def raise_first_variance(k: np.ndarray, p1: float) -> np.ndarray:
    """K' equal to K except that the (1,1) entry is the power limit P_1."""
    kp = np.array(k, dtype=float)
    kp[0, 0] = p1
    return kp


def check_oppenheim_step(trials: int = 1000, seed: int = 42, num_users: int = 3) -> CheckReport:
    """Raising Q_1 to P_1 never increases the singleton Lagrangian.

    For random K with Q_1 < P_1 and random lam >= 0 (every tenth trial lam = 0)
    this verifies ``h(lam, K') <= h(lam, K)`` using the determinant form of h.
    Oppenheim's inequality ``det K'_{X1Y} >= D E det K_{X1Y}`` is checked on
    the draws where its hypothesis holds, i.e. the Hadamard multiplier
    [[D, F], [F, E]] is PSD; draws outside the hypothesis are counted in
    ``details`` but are not failures.  For lam = 0 the exact difference
    ``-1/2 ln E`` is also checked.
    """
    J = int(num_users)
    rng = np.random.default_rng(seed)
    rep = CheckReport(f"oppenheim_step(J={J})", seed=seed)
    outside = det_failures = identity_failures = printed_violations = 0
    for t in range(trials):
        p = rng.uniform(0.1, 10.0, size=J)
        q = p.copy()
        q[0] = p[0] * rng.uniform(0.05, 0.999)
        lam = 0.0 if t % 10 == 0 else float(rng.exponential(2.0))
        k = random_covariance(q, rng)
        kp = raise_first_variance(k, p[0])
        diff = h_determinant_form(lam, kp) - h_determinant_form(lam, k)
        ok = diff <= 1e-12

        ky = 1.0 + k.sum()
        c1 = k[0].sum()
        delta = p[0] - q[0]
        D = p[0] / q[0]
        E = (ky + delta) / ky
        F = (c1 + delta) / c1
        if D * E >= F * F:
            det_k = q[0] * ky - c1**2
            det_kp = p[0] * (ky + delta) - (c1 + delta) ** 2
            if det_kp < D * E * det_k * (1.0 - DET_RTOL):
                det_failures += 1
                ok = False
        else:
            outside += 1
        if lam == 0.0 and abs(diff + 0.5 * math.log(E)) > 1e-12:
            identity_failures += 1
            ok = False
        if h_value(lam, kp, p) > h_value(lam, k, p) + 1e-12:
            printed_violations += 1
        rep.record(-diff, ok)
    rep.details.update(
        oppenheim_hypothesis_not_met=outside,
        det_failures=det_failures,
        lambda0_identity_failures=identity_failures,
        printed_h_increases=printed_violations,
    )
    return rep


# ---------------------------------------------------------------- factorization

class TwoLetterGaussian:
    """Joint covariance of two i.i.d. channel uses and their rotations.

    Coordinate layout (each X block has J entries)::

        X1 | X2 | Y1 | Y2 | Xt1 | Xt2 | Yt1 | Yt2

    with Xt1 = (X1 + X2)/sqrt 2, Xt2 = (X1 - X2)/sqrt 2 and likewise for Y.
    """

    def __init__(self, k: np.ndarray):
        k = np.asarray(k, dtype=float)
        J = k.shape[0]
        self.J = J
        base = np.zeros((2 * J + 2, 2 * J + 2))  # (X1, X2, Z1, Z2)
        base[:J, :J] = k
        base[J:2 * J, J:2 * J] = k
        base[2 * J, 2 * J] = base[2 * J + 1, 2 * J + 1] = 1.0
        ones = np.ones(J)
        a = np.zeros((4 * J + 4, 2 * J + 2))
        eye = np.eye(J)
        r = 1.0 / math.sqrt(2.0)
        a[0:J, 0:J] = eye
        a[J:2 * J, J:2 * J] = eye
        a[2 * J, 0:J] = ones
        a[2 * J, 2 * J] = 1.0
        a[2 * J + 1, J:2 * J] = ones
        a[2 * J + 1, 2 * J + 1] = 1.0
        o = 2 * J + 2
        a[o:o + J] = r * (a[0:J] + a[J:2 * J])
        a[o + J:o + 2 * J] = r * (a[0:J] - a[J:2 * J])
        a[o + 2 * J] = r * (a[2 * J] + a[2 * J + 1])
        a[o + 2 * J + 1] = r * (a[2 * J] - a[2 * J + 1])
        self.cov = a @ base @ a.T

    def x1(self, s=None):
        return self._block(0, s)

    def x2(self, s=None):
        return self._block(self.J, s)

    def xt1(self, s=None):
        return self._block(2 * self.J + 2, s)

    def xt2(self, s=None):
        return self._block(3 * self.J + 2, s)

    @property
    def y(self):
        return [2 * self.J, 2 * self.J + 1]

    @property
    def yt1(self):
        return [4 * self.J + 2]

    @property
    def yt2(self):
        return [4 * self.J + 3]

    def _block(self, offset, s):
        s = range(self.J) if s is None else sorted(s)
        return [offset + i for i in s]

    def mi(self, a, b, given=()):
        return gaussian_mutual_information(self.cov, a, b, given)


def two_letter_s_lambda(tl: TwoLetterGaussian, lam: float, partition: Partition,
                        rotated: bool = False) -> float:
    """-(lam/(M-1)+1) I(X1,X2; Y1,Y2) + lam/(M-1) sum_m I([X1]_m,[X2]_m; Y1,Y2)."""
    xa, xb = (tl.xt1, tl.xt2) if rotated else (tl.x1, tl.x2)
    ys = tl.yt1 + tl.yt2 if rotated else tl.y
    c = lam / (partition.num_blocks - 1)
    total = tl.mi(xa() + xb(), ys)
    blocks = sum(tl.mi(xa(b) + xb(b), ys) for b in partition.blocks)
    return -(c + 1.0) * total + c * blocks


def factorization_deviations(k: np.ndarray, lam: float, partition: Partition) -> dict[str, float]:
    """Absolute deviations of the two-letter identities for i.i.d. Gaussian inputs."""
    tl = TwoLetterGaussian(k)
    one = s_lambda_gaussian(lam, k, partition)
    two = two_letter_s_lambda(tl, lam, partition)
    two_rot = two_letter_s_lambda(tl, lam, partition, rotated=True)
    markov = (tl.mi(tl.xt1() + tl.xt2(), tl.yt1 + tl.yt2)
              - tl.mi(tl.xt1(), tl.yt1) - tl.mi(tl.xt2(), tl.yt2, tl.yt1))
    cond1 = max(abs(tl.mi(tl.yt1, tl.xt2(b), tl.xt1(b))) for b in partition.blocks)
    cond2 = max(abs(tl.mi(tl.yt2, tl.xt1(b), tl.yt1 + tl.xt2(b))) for b in partition.blocks)
    return {
        "additivity": abs(two - 2.0 * one),
        "rotation": abs(two_rot - two),
        "markov_chain_rule": abs(markov),
        "cond_theta1": cond1,
        "cond_theta2": cond2,
    }


def random_partition(num_users: int, rng: np.random.Generator) -> Partition:
    """Uniform random block labels, resampled until at least two blocks are used."""
    while True:
        labels = rng.integers(0, num_users, size=num_users)
        used = np.unique(labels)
        if used.size >= 2:
            return Partition(tuple(frozenset(np.flatnonzero(labels == u).tolist()) for u in used))


def check_factorization_identity(k: np.ndarray | None = None, lam: float | None = None,
                                 partition: Partition | None = None, trials: int = 1000,
                                 seed: int = 42, atol: float = EQ_ATOL) -> CheckReport:
    """Two-letter identities for i.i.d. Gaussian inputs.

    With ``k`` given a single instance is checked.  Otherwise each trial draws
    J in 2..4, random powers, a random covariance, lam and partition (every
    other trial the singleton partition).  Checked to ``atol``: the two-letter
    Lagrangian is twice the one-letter one; rotating to (X1 +- X2)/sqrt 2
    preserves it; the Markov chain-rule split of the rotated information;
    and both conditional informations that must vanish for equality.
    """
    rep = CheckReport("factorization_identity", seed=seed)
    worst = {}

    def run(kk, ll, pp):
        dev = factorization_deviations(kk, ll, pp)
        for name, v in dev.items():
            worst[name] = max(worst.get(name, 0.0), v)
        m = max(dev.values())
        rep.record(atol - m, m <= atol)

    if k is not None:
        k = np.asarray(k, dtype=float)
        run(k, 1.0 if lam is None else float(lam),
            partition if partition is not None else Partition.singletons(k.shape[0]))
    else:
        rng = np.random.default_rng(seed)
        for t in range(trials):
            J = int(rng.integers(2, 5))
            kk = random_covariance(rng.uniform(0.1, 5.0, size=J), rng)
            ll = float(rng.uniform(0.0, 5.0)) if lam is None else float(lam)
            pp = Partition.singletons(J) if t % 2 == 0 else random_partition(J, rng)
            run(kk, ll, pp)
    rep.details.update({f"max_{n}": float(v) for n, v in worst.items()})
    return rep


# ---------------------------------------------------------------- lambda*

def check_lambda_star_positive(users: int | Iterable[int] = DEFAULT_USERS,
                               powers: float | Iterable[float] | None = None,
                               trials: int = 1000) -> CheckReport:
    """lambda*(J, P, beta*) > 0 over a grid of (J, P), sized like the Bernoulli grid."""
    users = _as_list(users)
    powers = default_powers(-(-trials // len(users))) if powers is None else _as_list(powers)
    rep = CheckReport("lambda_star_positive")
    for J in users:
        for P in powers:
            sol = solve_beta(J, P)
            lam = lambda_star(J, P, sol.beta_star)
            rep.record(lam, lam > 0.0)
    return rep
