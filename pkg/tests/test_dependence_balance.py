import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from gmacfb.cutset_bounds import two_user_feedback_sum_capacity
from gmacfb.dependence_balance import (
    DualBoundResult,
    _concavity_violated,
    depbal_feasible,
    dual_bound,
    h_value,
    inner_min,
    random_correlation,
    s_lambda_gaussian,
)
from gmacfb.errors import DomainError, InfeasibilityError
from gmacfb.gaussian_core import Partition, build_covariance, mutual_info_all, mutual_info_conditional
from gmacfb.lemma_verification import h_determinant_form, raise_first_variance
from gmacfb.symmetric_capacity import solve_beta, sum_capacity


def random_k(rng, powers):
    sq = np.sqrt(np.asarray(powers, dtype=float))
    return random_correlation(sq.size, rng) * np.outer(sq, sq)


# ---------------------------------------------------------------- closed forms

def test_h_value_examples():
    zero = np.zeros((3, 3))
    assert h_value(2.5, zero, [1, 1, 1]) == 0.0
    k = build_covariance([0.5, 1.0, 2.0], [0.1, 0.2, 0.3])
    assert h_value(0.0, k, [0.5, 1.0, 2.0]) == pytest.approx(-mutual_info_all(k).value, abs=1e-15)
    k0 = build_covariance([0.3] * 3, 0.0)
    assert h_value(1.0, k0, [0.3] * 3) == pytest.approx(-0.75 * math.log(1.6), abs=1e-15)
    assert h_value(1.0, k0, [0.3] * 3) == pytest.approx(-0.352502721934302, abs=1e-12)


def test_h_value_errors():
    k = build_covariance([1.0, 1.0], 0.0)
    with pytest.raises(DomainError):
        h_value(-1.0, k, [1, 1])
    with pytest.raises(DomainError):
        h_value(1.0, k, [1, 1, 1])
    # variance far above the power limit drives a log argument negative
    big = build_covariance([100.0, 100.0], 0.0)
    with pytest.raises(InfeasibilityError):
        h_value(1.0, big, [0.01, 0.01])


def test_s_lambda_examples():
    k = build_covariance([1.0, 1.0], 0.0)
    assert s_lambda_gaussian(0.0, k) == pytest.approx(-0.5 * math.log(3.0), abs=1e-15)
    assert s_lambda_gaussian(0.0, k) == pytest.approx(-0.549306144334055, abs=1e-12)
    k3 = build_covariance([1.0, 2.0, 3.0], [0.2, 0.1, 0.4])
    part = Partition.parse("{1},{2,3}")
    want = -(mutual_info_conditional(k3, [0]).value + mutual_info_conditional(k3, [1, 2]).value)
    assert s_lambda_gaussian(1.0, k3, part) == pytest.approx(want, abs=1e-15)
    assert s_lambda_gaussian(1.0, k3, "{1},{2,3}") == pytest.approx(want, abs=1e-15)


def test_s_lambda_equals_h_when_diagonal_at_power_100_draws():
    rng = np.random.default_rng(7)
    for _ in range(100):
        J = int(rng.integers(2, 7))
        p = rng.uniform(0.1, 10.0, size=J)
        k = random_k(rng, p)
        lam = rng.uniform(0, 5)
        assert s_lambda_gaussian(lam, k) == pytest.approx(h_value(lam, k, p), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(0.01, 50.0), st.floats(0.0, 1.0), st.floats(0.0, 10.0))
def test_symmetric_reduction(J, P, t, lam):
    rho = -1.0 / (J - 1) + t * (1.0 + 1.0 / (J - 1))
    rho = min(rho, 1.0 - 1e-9)  # rho = 1 makes the conditional terms degenerate
    beta = 1 + (J - 1) * rho
    k = build_covariance([P] * J, rho)
    want = (0.5 * (lam - 1) * math.log1p(J * P * beta)
            - J * lam / (2 * (J - 1)) * math.log1p(P * beta * (J - beta)))
    assert h_value(lam, k, [P] * J) == pytest.approx(want, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_h_affine_in_lambda(seed, a, b):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.1, 5.0, size=3)
    k = random_k(rng, p)
    mid = h_value(0.5 * (a + b), k, p)
    assert mid == pytest.approx(0.5 * (h_value(a, k, p) + h_value(b, k, p)), abs=1e-10)


# ---------------------------------------------------------------- feasibility

def test_feasibility_examples():
    f = depbal_feasible(build_covariance([1.0, 1.0], 0.0))
    assert f.feasible and f.slack == pytest.approx(math.log(2) - 0.5 * math.log(3), abs=1e-15)
    assert f.slack == pytest.approx(0.143841, abs=1e-6)
    g = depbal_feasible(build_covariance([1.0, 1.0], 0.9))
    assert not g.feasible
    assert g.slack == pytest.approx(math.log(1.19) - 0.5 * math.log(4.8), abs=1e-15)
    ex1 = depbal_feasible(build_covariance([1, 4, 9], [0.5, 0.44, 0.58]))
    assert ex1.feasible and ex1.slack > 0


def test_feasibility_accepts_reduced_powers():
    k = build_covariance([0.5, 0.7, 1.0], 0.1)
    assert depbal_feasible(k).feasible


def test_partition_mismatch_rejected():
    with pytest.raises(DomainError):
        depbal_feasible(np.eye(3), Partition.singletons(2))


# ---------------------------------------------------------------- Q_j -> P_j monotonicity

def test_raising_a_variance_never_increases_exact_lagrangian():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        p = rng.uniform(0.1, 10.0, size=3)
        q = p.copy()
        q[0] *= rng.uniform(0.05, 0.999)
        k = random_k(rng, q)
        lam = rng.exponential(2.0)
        kp = raise_first_variance(k, p[0])
        assert h_determinant_form(lam, kp) <= h_determinant_form(lam, k) + 1e-12


def test_determinant_form_matches_exact_lagrangian():
    rng = np.random.default_rng(3)
    for _ in range(50):
        q = rng.uniform(0.1, 5.0, size=4)
        k = random_k(rng, q)
        lam = rng.uniform(0, 4)
        assert h_determinant_form(lam, k) == pytest.approx(s_lambda_gaussian(lam, k), abs=1e-10)


def test_printed_lagrangian_can_increase_when_variance_is_raised():
    # dividing by the power limit instead of the actual variance breaks the monotonicity
    rng = np.random.default_rng(42)
    increases = 0
    for _ in range(300):
        p = rng.uniform(0.1, 10.0, size=3)
        q = p.copy()
        q[0] *= rng.uniform(0.05, 0.999)
        k = random_k(rng, q)
        lam = rng.exponential(2.0)
        kp = raise_first_variance(k, p[0])
        if h_value(lam, kp, p) > h_value(lam, k, p) + 1e-12:
            increases += 1
    assert increases > 0


# ---------------------------------------------------------------- inner minimization

def test_inner_min_symmetric_minimizer_is_equicorrelated():
    for J, P in [(3, 0.3), (4, 1.0)]:
        sol = solve_beta(J, P)
        res = inner_min(sol.lambda_star, [P] * J)
        assert np.max(np.abs(res.correlations - sol.rho_star)) < 1e-4
        assert res.value == pytest.approx(-sol.capacity.value, abs=1e-9)
        np.testing.assert_allclose(res.covariance.variances, [P] * J, rtol=0, atol=1e-12)


@pytest.mark.parametrize("J,P", [(2, 1.0), (3, 1.0)])
def test_inner_min_lambda_zero_goes_to_full_correlation(J, P):
    res = inner_min(0.0, [P] * J)
    assert res.value == pytest.approx(-0.5 * math.log1p(J * J * P), abs=1e-6)
    assert np.all(res.correlations > 0.999)


def test_inner_min_large_lambda_two_users():
    # s_lam / lam tends to f1 - f2, whose minimizer solves 3 rho^2 + 6 rho + 2 = 0 at P = 1
    slope = lambda r: 1 / (3 + 2 * r) + 2 * r / (2 - r * r)
    target = brentq(slope, -0.9, 0.0, xtol=1e-14)
    assert target == pytest.approx(-1 + 1 / math.sqrt(3), abs=1e-12)
    values = [inner_min(lam, [1.0, 1.0]).correlations[0] for lam in (10.0, 100.0, 1000.0)]
    gaps = [abs(v - target) for v in values]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


def test_inner_min_deterministic_and_validates():
    a = inner_min(0.7, [1.0, 4.0, 9.0], seed=5)
    b = inner_min(0.7, [1.0, 4.0, 9.0], seed=5)
    assert a.value == b.value
    np.testing.assert_array_equal(a.covariance.matrix, b.covariance.matrix)
    with pytest.raises(DomainError):
        inner_min(-0.1, [1.0, 1.0])
    with pytest.raises(DomainError):
        inner_min(1.0, [1.0, 0.0])


# ---------------------------------------------------------------- dual bound

def test_dual_bound_two_user_matches_feedback_capacity():
    res = dual_bound([1.0, 1.0])
    assert isinstance(res, DualBoundResult)
    assert res.bound.value == pytest.approx(0.6436, abs=1e-4)
    assert res.bound.value == pytest.approx(two_user_feedback_sum_capacity(1.0, 1.0).value, abs=1e-6)
    assert not res.concavity_warning


def test_dual_bound_asymmetric_two_user_dominates_feedback_capacity():
    res = dual_bound([1.0, 2.0], "{1},{2}")
    assert res.bound.value >= two_user_feedback_sum_capacity(1.0, 2.0).value - 1e-6


def test_dual_bound_three_user_low_snr():
    res = dual_bound([0.3] * 3)
    assert res.bound.value == pytest.approx(sum_capacity(3, 0.3).value, abs=1e-4)
    assert res.lambda_opt == pytest.approx(solve_beta(3, 0.3).lambda_star, abs=1e-2)
    assert res.partition.is_singleton


def test_dual_bound_coarser_partition_is_valid_upper_bound():
    res = dual_bound([0.3] * 3, "{1},{2,3}")
    assert res.bound.value >= sum_capacity(3, 0.3).value - 1e-6


def test_dual_bound_example1():
    res = dual_bound([1.0, 4.0, 9.0])
    assert res.bound.value > 1.6215
    # weak duality against the published feasible point
    k = build_covariance([1, 4, 9], [0.5, 0.44, 0.58])
    assert mutual_info_all(k).value <= res.bound.value + 1e-4
    assert res.K_opt.satisfies([1.0, 4.0, 9.0])


def test_weak_duality_random_feasible_points():
    rng = np.random.default_rng(2)
    bound = dual_bound([1.0] * 3).bound.value
    feasible = 0
    for _ in range(500):
        q = rng.uniform(0.2, 1.0, size=3)
        k = random_k(rng, q)
        if depbal_feasible(k).feasible:
            feasible += 1
            assert mutual_info_all(k).value <= bound + 1e-4
    assert feasible > 50


def test_dual_bound_on_lambda_grid_and_units():
    res = dual_bound([1.0, 1.0], lambdas=[0.0, 0.25, 0.5, 1.0], unit="bits")
    assert res.lambda_opt == 0.5
    assert res.bound.unit.value == "bits"
    assert res.bound.nats >= sum_capacity(2, 1.0).value - 1e-9
    with pytest.raises(DomainError):
        dual_bound([1.0, 1.0], lambdas=[])


def test_concavity_detector():
    assert not _concavity_violated({0.0: 0.0, 1.0: 1.0, 2.0: 1.5})
    assert _concavity_violated({0.0: 0.0, 1.0: -1.0, 2.0: 0.0})


def test_dual_bound_warns_on_nonconcave_values(monkeypatch):
    import gmacfb.dependence_balance as db

    class Fake:
        def __init__(self, value):
            self.value = value
            self.covariance = build_covariance([1.0, 1.0], 0.0)

    monkeypatch.setattr(db, "inner_min", lambda lam, *a, **kw: Fake(-1.0 if lam == 0.5 else -2.0 + abs(lam - 1)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = db.dual_bound([1.0, 1.0], lambdas=[0.0, 0.5, 1.0, 1.5])
    assert res.concavity_warning
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
