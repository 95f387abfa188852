import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qresource.counterexample import (
    counterexample_report,
    g_function,
    iid_power,
    max_varentropy_search,
    tilted_curvature,
    tilted_distribution,
    varentropy,
    weighted_varentropy,
)
from qresource.errors import ValidationError

probs = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(lambda x: np.array(x) / np.sum(x))


def test_varentropy_examples():
    assert abs(varentropy(np.full(5, 0.2))) <= 1e-15
    assert math.isclose(varentropy([0.75, 0.25]), 3 / 16 * math.log2(3) ** 2, rel_tol=1e-12)
    with pytest.raises(ValidationError):
        varentropy([0.5, 0.6])


@settings(max_examples=60, deadline=None)
@given(probs)
def test_varentropy_nonnegative_and_t_equals_p(p):
    p = p / p.sum()
    assert varentropy(p) >= 0
    assert math.isclose(weighted_varentropy(p, p), varentropy(p), abs_tol=1e-12)


@settings(max_examples=30, deadline=None)
@given(probs, st.integers(1, 5))
def test_iid_additivity(q, n):
    q = q / q.sum()
    qn = iid_power(q, n)
    assert math.isclose(weighted_varentropy(qn, qn), n * varentropy(q), abs_tol=1e-9)


def test_weighted_varentropy_edge_cases():
    p = np.array([0.5, 0.25, 0.25])
    assert weighted_varentropy(np.zeros(3), p) == 0.0
    with pytest.raises(ValidationError):
        weighted_varentropy(np.ones(2), p)
    with pytest.raises(ValidationError):
        weighted_varentropy(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValidationError):
        g_function(p, p, 0)


def test_g_on_products():
    q = np.array([0.6, 0.3, 0.1])
    n, m, r = 6, 1, 1
    p = iid_power(q, n - m - r)
    assert math.isclose(g_function(p, p, n), (n - m - r) / n * varentropy(q), abs_tol=1e-9)
    assert math.isclose(g_function(np.full(4, 0.25), np.full(4, 0.25), 3), 0.0, abs_tol=1e-15)


def test_binary_maximum_matches_grid():
    _, val, _ = max_varentropy_search(2, restarts=4, seed=0)
    grid = np.linspace(1e-6, 1 - 1e-6, 200_001)
    grid_val = np.max(grid * (1 - grid) * np.log2(grid / (1 - grid)) ** 2)
    assert abs(val - grid_val) <= 1e-6
    assert val < 1.0


def test_larger_alphabets():
    _, v4, values = max_varentropy_search(4, restarts=8, seed=1)
    _, v5, _ = max_varentropy_search(5, restarts=8, seed=1)
    assert v4 > 1.0
    assert v5 >= v4 - 1e-9
    assert np.all(values <= v4 + 1e-12)


def test_tilted_distribution():
    q = np.array([0.5, 0.3, 0.2])
    assert np.allclose(tilted_distribution(q, 0.0), q)
    assert tilted_distribution(q, 50.0)[0] > 0.999999


def test_tilted_curvature_is_second_derivative():
    rng = np.random.default_rng(0)
    n, m, r = 20, 1, 1
    for _ in range(5):
        q = rng.dirichlet(np.ones(4))
        s, h = float(rng.uniform(-0.3, 0.3)), 1e-4

        def f(x):
            return (n - m - r) / n * math.log2(np.sum(q ** (1 + x)))

        fd = (f(s + h) - 2 * f(s) + f(s - h)) / h**2 / math.log(2)
        assert abs(tilted_curvature(q, s, n, m, r) - fd) <= 1e-5
        assert abs(tilted_curvature(q, 0.0, n, m, r) - (n - m - r) / n * varentropy(q)) <= 1e-9


def test_report_d4_and_d2():
    rep = counterexample_report(4, 1, 1, (6, 8, 16, 32), seed=7)
    gs = [row["g"] for row in rep.rows]
    assert rep.exceeds_one and gs[-1] > 1.0
    assert all(b >= a for a, b in zip(gs, gs[1:]))
    assert 6 in rep.checked and rep.max_check_error <= 1e-9
    assert rep.to_dict()["V_Q_units"] == "bits^2"
    low = counterexample_report(2, 1, 1, (8, 16, 32), seed=7)
    assert not low.exceeds_one
    with pytest.raises(ValidationError):
        counterexample_report(4, 1, 1, (2, 8))
