import math

import numpy as np
import pytest
from scipy.optimize import brentq

from qresource.divergences import hypothesis_testing
from qresource.errors import UnsupportedInstance
from qresource.free_sets import IidFamily, coherence_family, pseudo_entanglement_family
from qresource.linalg import distinct_eigenvalue_count, ebit, n_copies, projector, random_density, random_pure, symmetrize
from qresource.monotones import coherence_ree_exact
from qresource.stein import (
    binary_entropy,
    coherence_stein_check,
    composite_dh,
    conversion_rate_upper_bound,
    converse_slack,
    measured_vs_regularized_check,
    rate_table,
    trace_distance_to_free,
    trace_distance_to_free_trend,
)

PLUS = projector(np.ones(2) / math.sqrt(2))
COH = coherence_family(2)


def _pure(p):
    return projector(np.array([math.sqrt(p), math.sqrt(1 - p)]))


def test_binary_entropy_and_slack():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert math.isclose(converse_slack(1.0, 0.5, 1), 1.0 + 2.0)
    assert converse_slack(1.0, 0.05, 100) < converse_slack(1.0, 0.05, 10)


def test_iid_family_reduces_to_hypothesis_testing():
    rng = np.random.default_rng(0)
    rho, sigma = random_density(2, rng), random_density(2, rng)
    fam = IidFamily(sigma)
    for n in (1, 2):
        direct = hypothesis_testing(n_copies(rho, n), n_copies(sigma, n), 0.1).value / n
        assert abs(composite_dh(rho, fam, n, 0.1).value - direct) <= 1e-9


def test_composite_brackets_for_coherence():
    # maximally coherent qubit; for mixed states the one-shot value sits far below D_I
    target = coherence_ree_exact(PLUS)
    res = composite_dh(PLUS, COH, 1, 0.01)
    assert target - 0.1 <= res.value <= target + 0.05
    assert res.value <= target + converse_slack(target, 0.01, 1)
    assert res.lower <= res.value + 1e-12


def test_free_state_rates_are_trivial():
    rho = np.diag([0.7, 0.3])
    for n in (1, 2):
        res = composite_dh(rho, COH, n, 0.05)
        assert abs(res.value + math.log2(0.95) / n) <= 1e-6


def test_rate_table_converse_and_eps_nesting():
    table = rate_table(PLUS, COH, [1, 2], [0.05, 0.3])
    assert table.converse_ok
    assert table.eps_monotone()
    for n in (1, 2):
        lo = next(r for r in table.rows if r["n"] == n and r["eps"] == 0.05)
        hi = next(r for r in table.rows if r["n"] == n and r["eps"] == 0.3)
        assert hi["rate_bits"] >= lo["rate_bits"] - lo["gap"] - hi["gap"]


def test_coherence_stein_trend_for_plus():
    table = coherence_stein_check(PLUS, [0.05], 3)
    assert table.target == pytest.approx(1.0, abs=1e-12)
    devs = [abs(r["deviation"]) for r in table.rows]
    assert all(0.65 <= r["rate_bits"] <= 1.1 for r in table.rows)
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_measured_check_commuting_case():
    rep = measured_vs_regularized_check(np.diag([0.6, 0.4]), COH, 2)
    for row in rep.rows:
        assert abs(row["measured_min"] - row["d_n"]) <= 1e-5
    assert rep.holds


def test_measured_sandwich_pseudo_entanglement():
    # nearly separable states need hundreds of atoms at n = 2; an entangled pure state does not
    rng = np.random.default_rng(2)
    rho = projector(random_pure(4, rng))
    rep = measured_vs_regularized_check(rho, pseudo_entanglement_family(2, 2), 2, tol=1e-5, max_iter=30)
    assert rep.holds, rep.rows


def test_spectrum_count_polynomial():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        sigma = symmetrize(random_density(2**n, rng), 2, n)
        assert distinct_eigenvalue_count(sigma, atol=1e-9) <= (n + 1) ** 4


def test_conversion_bound():
    same = conversion_rate_upper_bound(PLUS, PLUS, COH)
    assert same.upper >= 1.0 - 1e-9
    p = brentq(lambda x: binary_entropy(x) - 0.5, 1e-9, 0.5)
    omega = _pure(p)
    res = conversion_rate_upper_bound(PLUS, omega, COH)
    assert abs(res.denominator - 0.5) <= 1e-9
    assert abs(res.upper - 2.0) <= 1e-6
    # matches the ratio of regularised values for the coherence family
    assert abs(res.upper - coherence_ree_exact(PLUS) / coherence_ree_exact(omega)) <= 1e-9
    with pytest.raises(UnsupportedInstance):
        conversion_rate_upper_bound(PLUS, np.diag([0.5, 0.5]), COH)


def test_trace_distance():
    fam = pseudo_entanglement_family(2, 2)
    upper, lower, state = trace_distance_to_free(np.eye(4) / 4, fam, 1)
    assert upper <= 1e-6
    trend = trace_distance_to_free_trend(ebit(), fam, 2)
    assert trend.values[0] == pytest.approx(0.5, abs=1e-6)
    assert trend.values[1] == pytest.approx(0.75, abs=1e-6)
    assert trend.nondecreasing()
    assert all(lo <= t + 1e-9 and t < 1 for lo, t in zip(trend.lower, trend.values))
