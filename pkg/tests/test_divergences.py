import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qresource.divergences import (
    PinchingMap,
    classical_kl,
    dmax,
    hypothesis_testing,
    measured_all,
    measured_restricted,
    neyman_pearson,
    pinch,
    smoothed_dmax,
    support_contained,
    umegaki,
)
from qresource.errors import ValidationError
from qresource.linalg import commutator_norm, dephase, ket, maximally_mixed, projector, random_density

ZERO = projector(ket(0, 2))
ONE = projector(ket(1, 2))
PLUS = projector(np.ones(2) / math.sqrt(2))
HALF = maximally_mixed(2)


def test_umegaki_examples():
    rng = np.random.default_rng(0)
    rho = random_density(3, rng)
    assert abs(umegaki(rho, rho).value) <= 1e-12
    assert math.isclose(umegaki(ZERO, HALF).value, 1.0, abs_tol=1e-12)
    assert umegaki(ZERO, ONE).value == math.inf
    assert not support_contained(ZERO, ONE)


def test_dmax_examples():
    rng = np.random.default_rng(1)
    rho = random_density(2, rng)
    assert abs(dmax(rho, rho).value) <= 1e-9
    assert math.isclose(dmax(PLUS, HALF).value, 1.0, abs_tol=1e-12)
    assert dmax(ZERO, ONE).value == math.inf


def test_dmax_dominates_umegaki():
    rng = np.random.default_rng(2)
    for i in range(500):
        d = 2 + i % 2
        rho, sigma = random_density(d, rng), random_density(d, rng)
        assert dmax(rho, sigma).value >= umegaki(rho, sigma).value - 1e-9


def test_shape_mismatch_rejected():
    with pytest.raises(ValidationError):
        umegaki(HALF, maximally_mixed(3))


def test_hypothesis_testing_examples():
    rng = np.random.default_rng(3)
    rho = random_density(3, rng)
    assert math.isclose(hypothesis_testing(rho, rho, 0.5).value, 1.0, abs_tol=1e-12)
    res = hypothesis_testing(np.diag([0.75, 0.25]), HALF, 0.25)
    assert math.isclose(res.value, 1.0, abs_tol=1e-12)
    assert np.allclose(res.certificate, ZERO, atol=1e-12)
    with pytest.raises(ValidationError):
        hypothesis_testing(rho, rho, 1.5)


def test_hypothesis_testing_monotone_in_eps():
    # larger eps relaxes the type-I constraint, so the value cannot drop
    rng = np.random.default_rng(4)
    grid = np.linspace(0.1, 0.9, 9)
    for _ in range(20):
        rho, sigma = random_density(3, rng), random_density(3, rng)
        vals = [hypothesis_testing(rho, sigma, e).value for e in grid]
        assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))


def test_neyman_pearson_test_is_feasible():
    rng = np.random.default_rng(5)
    rho, sigma = random_density(4, rng), random_density(4, rng)
    beta, m = neyman_pearson(rho, sigma, 0.2)
    w = np.linalg.eigvalsh(m)
    assert w.min() >= -1e-10 and w.max() <= 1 + 1e-10
    assert np.trace(m @ rho).real >= 0.8 - 1e-10
    assert math.isclose(np.trace(m @ sigma).real, beta, abs_tol=1e-10)


def test_measured_examples():
    rng = np.random.default_rng(6)
    rho = random_density(2, rng)
    assert abs(measured_all(rho, rho).value) <= 1e-9
    a, b = np.diag([0.75, 0.25]), np.diag([0.25, 0.75])
    assert abs(measured_all(a, b).value - umegaki(a, b).value) <= 1e-6
    assert measured_all(PLUS, np.diag([0.75, 0.25])).value < umegaki(PLUS, np.diag([0.75, 0.25])).value - 1e-4


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_measured_below_umegaki(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(d, rng), random_density(d, rng)
    assert measured_all(rho, sigma).value <= umegaki(rho, sigma).value + 1e-9


def test_measured_restricted():
    rng = np.random.default_rng(7)
    rho, sigma = random_density(2, rng), random_density(2, rng)
    assert abs(measured_restricted(rho, sigma, [(np.eye(2),)]).value) <= 1e-12
    eps = 0.1
    beta, m = neyman_pearson(rho, sigma, eps)
    val = measured_restricted(rho, sigma, [(m, np.eye(2) - m)]).value
    assert val >= classical_kl([1 - eps, eps], [beta, 1 - beta]) - 1e-9
    for _ in range(10):
        a, b = random_density(3, rng), random_density(3, rng)
        basis = [projector(ket(i, 3)) for i in range(3)]
        assert measured_restricted(a, b, [basis]).value <= measured_all(a, b).value + 1e-9


def test_classical_kl():
    assert math.isclose(classical_kl([0.5, 0.5], [0.5, 0.5]), 0.0, abs_tol=1e-15)
    assert classical_kl([1.0, 0.0], [0.0, 1.0]) == math.inf
    assert math.isclose(classical_kl([1.0, 0.0], [0.5, 0.5]), 1.0)


def test_smoothed_dmax():
    rng = np.random.default_rng(8)
    rho, sigma = random_density(2, rng), random_density(2, rng)
    assert abs(smoothed_dmax(rho, sigma, 0.0).value - dmax(rho, sigma).value) <= 1e-8
    grid = [0.0, 0.05, 0.1, 0.2, 0.3]
    vals = [smoothed_dmax(rho, sigma, e).value for e in grid]
    assert all(b <= a + 1e-8 for a, b in zip(vals, vals[1:]))
    assert smoothed_dmax(ZERO, HALF, 0.5).value < dmax(ZERO, HALF).value - 1e-3


def test_smoothed_dmax_routes_agree():
    rng = np.random.default_rng(9)
    rho, sigma = random_density(3, rng), random_density(3, rng)
    sdp = smoothed_dmax(rho, sigma, 0.1).value
    sub = smoothed_dmax(rho, sigma, 0.1, method="subgradient").value
    assert sub >= sdp - 1e-6
    assert sub - sdp <= 1e-3


def test_pinching():
    rng = np.random.default_rng(10)
    rho = random_density(3, rng)
    sigma = np.diag([0.5, 0.3, 0.2])
    assert np.allclose(pinch(sigma, rho), dephase(rho))
    for _ in range(20):
        rho, sigma = random_density(3, rng), random_density(3, rng)
        assert commutator_norm(pinch(sigma, rho), sigma) <= 1e-10
    pm = PinchingMap(np.diag([0.25, 0.25, 0.5]))
    assert pm.distinct_count == 2
