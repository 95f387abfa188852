import math

import numpy as np
import pytest

from qresource.divergences import dmax, umegaki
from qresource.errors import UnsupportedFamily
from qresource.free_sets import Membership, coherence_family, pseudo_entanglement_family, separable_two_qubit_family
from qresource.linalg import dephase, ebit, maximally_mixed, projector, random_density, tensor
from qresource.monotones import (
    asymptotic_continuity_check,
    coherence_ree_exact,
    continuity_g,
    cross_entropy_and_gradient,
    generalized_robustness,
    log_robustness,
    min_scale,
    regularization_trace,
    relative_entropy_of_resource,
    separably_measured_ree_lower,
    standard_robustness,
    symmetrize_copies,
)

PLUS = projector(np.ones(2) / np.sqrt(2))
SEP = separable_two_qubit_family()
COH = coherence_family(2)


def _werner(p):
    return p * ebit() + (1 - p) * maximally_mixed(4)


def test_ree_free_state_is_zero():
    assert relative_entropy_of_resource(np.diag([0.6, 0.4]), COH).value <= 1e-8


def test_ree_coherence_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(10):
        rho = random_density(2, rng)
        res = relative_entropy_of_resource(rho, COH, tol=1e-9)
        assert abs(res.value - umegaki(rho, dephase(rho)).value) <= 1e-6
        assert abs(coherence_ree_exact(rho) - res.value) <= 1e-6


def test_ree_ebit_is_one_bit():
    res = relative_entropy_of_resource(ebit(), SEP, tol=1e-6)
    assert abs(res.value - 1.0) <= 1e-3
    assert res.gap <= 1e-3
    # certified by the explicit feasible point (Φ + Φ⊥)/2 = dephased ebit
    assert abs(umegaki(ebit(), dephase(ebit())).value - 1.0) <= 1e-12


def test_cross_entropy_gradient_matches_finite_difference():
    rng = np.random.default_rng(1)
    rho, tau = random_density(3, rng), random_density(3, rng)
    _, grad = cross_entropy_and_gradient(rho, tau)
    h = 1e-6
    direction = random_density(3, rng) - tau
    # central difference: tau has a small eigenvalue, so the one-sided error is O(h / w_min^2)
    up, _ = cross_entropy_and_gradient(rho, tau + h * direction)
    down, _ = cross_entropy_and_gradient(rho, tau - h * direction)
    exact = np.real(np.vdot(grad, direction))
    assert abs((up - down) / (2 * h) - exact) <= 1e-6 * abs(exact)


def test_regularization_coherence_constant_and_fekete():
    rng = np.random.default_rng(2)
    rho = random_density(2, rng)
    tr = regularization_trace(rho, COH, 3)
    assert max(tr.d_n) - min(tr.d_n) <= 1e-6
    assert all(d <= tr.d_n[0] + 1e-6 for d in tr.d_n)
    assert tr.lower <= tr.upper + 1e-12
    assert len(tr.states) == 3


def test_regularization_werner_subadditive():
    tr = regularization_trace(_werner(0.8), SEP, 2, tol=1e-4)
    assert tr.d_n[1] * 2 <= 2 * tr.d_n[0] + 1e-6 + 2 * tr.gaps[1]
    assert tr.subadditive


def test_symmetrize_copies_keeps_membership():
    rng = np.random.default_rng(3)
    fam = pseudo_entanglement_family(2, 2)
    sigma, dec = fam.sample(2, rng)
    sym = symmetrize_copies(sigma, fam, 2)
    assert abs(np.trace(sym).real - 1) <= 1e-12
    assert fam.fw_distance(sym, 2, seed=0)[0] <= 1e-6


def test_min_scale():
    assert abs(min_scale(PLUS, maximally_mixed(2)) - 2.0) <= 1e-9
    assert min_scale(projector(np.array([1, 0])), projector(np.array([0, 1]))) == math.inf


def test_generalized_robustness_examples():
    assert generalized_robustness(maximally_mixed(4), SEP).value <= 1e-8
    res = generalized_robustness(ebit(), SEP)
    assert abs(res.value - 1.0) <= 1e-4
    assert res.details["method"] == "sdp"
    slow = generalized_robustness(ebit(), SEP, method="bisection")
    assert abs(slow.value - 1.0) <= 1e-4
    assert slow.details["method"] == "bisection"
    with pytest.raises(UnsupportedFamily):
        generalized_robustness(PLUS, COH, method="sdp")


def test_robustness_faithful_on_samples():
    rng = np.random.default_rng(4)
    for i in range(10):
        rho = random_density(4, rng, rank=1 + i % 4)
        inside = SEP.membership(rho, 1, tol=1e-9) is Membership.INSIDE
        val = generalized_robustness(rho, SEP, seed=i).value
        assert (val <= 1e-6) == inside


def test_robustness_coherence_plus():
    # mixer (I + x X + y Y + z Z)/2 cancels the coherence iff y = 0 and s = -1/x
    xs = np.linspace(-1, 1, 2001)
    best = np.min(-1.0 / xs[xs < 0])
    assert abs(generalized_robustness(PLUS, COH).value - best) <= 1e-4
    # a diagonal mixer never removes the off-diagonal term
    assert math.isinf(standard_robustness(PLUS, COH).value)


def test_standard_robustness_dominates_generalized():
    rng = np.random.default_rng(5)
    for i in range(20):
        rho = random_density(4, rng)
        gen = generalized_robustness(rho, SEP, seed=i)
        std = standard_robustness(rho, SEP, seed=i)
        assert std.value >= gen.details["lower"] - 1e-9
    assert standard_robustness(maximally_mixed(4), SEP).value <= 1e-8


def test_log_robustness():
    assert log_robustness(np.diag([0.5, 0.5]), COH).value == 0.0
    res = log_robustness(ebit(), SEP)
    assert abs(res.value - 1.0) <= 1e-4
    rng = np.random.default_rng(6)
    for i in range(5):
        rho = random_density(2, rng)
        res = log_robustness(rho, COH, seed=i)
        assert res.details["agree"]
        # any free state upper bounds the minimum
        assert res.value <= dmax(rho, dephase(rho)).value + 1e-6


def test_separably_measured_lower_bound():
    rng = np.random.default_rng(7)
    sep_state = tensor(random_density(2, rng), random_density(2, rng))
    assert separably_measured_ree_lower(sep_state, seed=0)[0] <= 1e-6
    assert separably_measured_ree_lower(ebit(), seed=0)[0] >= 0.2
    # matched Pauli settings see every entangled Werner state
    for p in (0.4, 0.6, 0.9):
        rho = _werner(p)
        lb = separably_measured_ree_lower(rho, seed=0)[0]
        assert 0 < lb <= relative_entropy_of_resource(rho, SEP).value + 1e-6
    # a finite POVM family need not detect every entangled state, but it never beats the REE
    for i in range(4):
        rho = random_density(4, rng, rank=1)
        lb = separably_measured_ree_lower(rho, random_settings=2, seed=i)[0]
        assert 0 <= lb <= relative_entropy_of_resource(rho, SEP, seed=i).value + 1e-6


def test_continuity():
    assert continuity_g(0.0) == 0.0
    assert abs(continuity_g(1.0) - 2.0) <= 1e-15
    rng = np.random.default_rng(8)
    rho = random_density(2, rng)
    rep = asymptotic_continuity_check([(rho, rho)], COH)
    assert rep.rows[0]["difference"] <= 1e-9 and rep.rows[0]["bound"] == 0.0
    pairs = []
    for _ in range(500):
        a = random_density(2, rng)
        t = float(rng.uniform(0, 0.3))
        pairs.append((a, (1 - t) * a + t * random_density(2, rng)))
    assert asymptotic_continuity_check(pairs, COH, tol=1e-6).violations == 0
