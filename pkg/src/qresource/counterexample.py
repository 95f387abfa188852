"""Varentropy growth against a per-copy bound of one.

A weighted varentropy ``V_T(P)`` divided by ``n`` is sometimes asserted to stay
below one (even to vanish) for distributions whose smallest weight is bounded
from below. Taking ``T = P = Q^{⊗k}`` with ``V(Q) > 1`` makes it grow like
``(k/n) V(Q)``; this module finds such a ``Q`` and tabulates the growth.

All logarithms are base 2, so varentropies are in bits².
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

PROB_TOL = 1e-12


def as_probability(p, name="P"):
    """Validate a probability vector (nonnegative, sums to one within 1e-12)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValidationError(f"{name} sums to {p.sum():.15g}, not 1")
    return p


def as_weights(t, name="T"):
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or not np.all(np.isfinite(t)) or np.any(t < 0):
        raise ValidationError(f"{name} must be a 1-d array of nonnegative weights")
    return t


def _log2_where(p, mask):
    out = np.zeros_like(p)
    out[mask] = np.log2(p[mask])
    return out


def varentropy(p):
    """Variance of ``log2 p_x`` under ``P`` in bits² (``0 log² 0 = 0``).

    Examples
    --------
    >>> round(varentropy([0.75, 0.25]), 12) == round(3 / 16 * math.log2(3) ** 2, 12)
    True
    """
    p = as_probability(p)
    mask = p > 0
    lg = _log2_where(p, mask)
    mean = float(np.sum(p * lg))
    return max(float(np.sum(p * lg**2)) - mean**2, 0.0)


def weighted_varentropy(t, p):
    """``Σ t_x (log2 p_x)² - (Σ t_x log2 p_x)²`` for arbitrary weights ``t >= 0``.

    Symbols with ``t_x = 0`` drop out; a positive weight on a zero-probability
    symbol is rejected.
    """
    t = as_weights(t)
    p = as_probability(p)
    if t.shape != p.shape:
        raise ValidationError(f"alphabet sizes differ: {t.size} weights vs {p.size} probabilities")
    mask = t > 0
    if np.any(p[mask] == 0):
        raise ValidationError("positive weight on a zero-probability symbol")
    lg = _log2_where(p, mask)
    return float(np.sum(t * lg**2)) - float(np.sum(t * lg)) ** 2


def g_function(t, p, n):
    """The per-copy quantity ``V_T(P) / n``."""
    if int(n) != n or n < 1:
        raise ValidationError("n must be a positive integer")
    return weighted_varentropy(t, p) / n


def iid_power(q, k):
    """The explicit product distribution ``Q^{⊗k}`` (``|Q|^k`` entries)."""
    q = as_probability(q, "Q")
    out = np.ones(1)
    for _ in range(int(k)):
        out = np.outer(out, q).ravel()
    return out


def _varentropy_grad(p):
    lg = np.log2(p)
    mean = float(np.sum(p * lg))
    c = 1.0 / math.log(2)
    return lg**2 + 2 * c * lg - 2 * mean * (lg + c)


def _project_simplex(v, floor):
    # Euclidean projection onto {p >= floor, Σ p = 1}
    d = v.size
    u = np.sort(v - floor)[::-1]
    css = np.cumsum(u) - (1.0 - d * floor)
    k = np.nonzero(u - css / np.arange(1, d + 1) > 0)[0][-1]
    return np.maximum(v - floor - css[k] / (k + 1), 0.0) + floor


def _ascend(p, floor, max_iter, tol):
    val = varentropy(p)
    step = 0.1
    for _ in range(max_iter):
        g = _varentropy_grad(p)
        while True:
            cand = _project_simplex(p + step * g, floor)
            cand = cand / cand.sum()
            new = varentropy(cand)
            if new >= val or step < 1e-16:
                break
            step *= 0.5
        moved = np.max(np.abs(cand - p))
        p, gain, val = cand, new - val, new
        step = min(step * 2.0, 1.0)
        if moved < tol or gain < tol * 1e-3:
            break
    return p, val


def max_varentropy_search(d, restarts=16, seed=0, max_iter=5000, tol=1e-12, floor=1e-12):
    """Maximise the varentropy over distributions on ``d`` symbols.

    Projected-gradient ascent (backtracking step) from ``restarts`` random
    Dirichlet starting points plus the "one heavy symbol" start.

    Returns
    -------
    q : ndarray
        Best distribution found.
    value : float
        ``V(q)`` in bits².
    values : ndarray
        Final value of every restart, for consistency checks.
    """
    d = int(d)
    if d < 2:
        raise ValidationError("alphabet size must be at least 2")
    rng = np.random.default_rng(seed)
    starts = [np.r_[0.9, np.full(d - 1, 0.1 / (d - 1))]]
    starts += [rng.dirichlet(np.ones(d)) for _ in range(max(int(restarts), 1) - 1)]
    best, best_val, values = None, -math.inf, []
    for p0 in starts:
        p, val = _ascend(_project_simplex(p0, floor), floor, max_iter, tol)
        values.append(val)
        if val > best_val:
            best, best_val = p, val
    return best, best_val, np.array(values)


def tilted_distribution(q, s):
    """``λ_x = q_x^{1+s} / Σ q_{x'}^{1+s}``; ``s = 0`` returns ``q``."""
    q = as_probability(q, "Q")
    if s < 0 and np.any(q == 0):
        raise ValidationError("zero entry cannot be tilted with s < 0")
    mask = q > 0
    logw = np.full(q.shape, -np.inf)
    logw[mask] = (1.0 + s) * np.log(q[mask])
    logw -= np.max(logw)
    w = np.exp(logw)
    return w / w.sum()


def tilted_curvature(q, s, n, m=1, r=1):
    """``((n-m-r)/n) Var_λ(log2 q)`` with ``λ`` the ``s``-tilt of ``q``.

    This is the second ``s``-derivative of ``((n-m-r)/n) log2 Σ q^{1+s}``
    divided by ``ln 2`` (a cumulant-generating function), evaluated for
    ``ρ, σ`` diagonal with weights ``λ`` and ``q``. At ``s = 0`` it equals
    ``((n-m-r)/n) V(q)``.
    """
    lam = tilted_distribution(q, s)
    return (n - m - r) / n * weighted_varentropy(lam, q)


@dataclass
class CounterexampleReport:
    """Growth of ``g`` along ``T = P = Q^{⊗(n-m-r)}``.

    ``rows`` holds ``{"n", "g", "min_probability"}``; ``checked`` lists the
    ``n`` where the closed form was compared with the explicit product.
    """

    d: int
    q: np.ndarray
    v_q: float
    m: int
    r: int
    rows: list
    exceeds_one: bool
    nonvanishing: bool
    checked: list = field(default_factory=list)
    max_check_error: float = 0.0

    def to_dict(self):
        return {
            "d": self.d,
            "Q": [float(x) for x in self.q],
            "V_Q": self.v_q,
            "V_Q_units": "bits^2",
            "m": self.m,
            "r": self.r,
            "rows": self.rows,
            "flags": {"g_exceeds_one": self.exceeds_one, "g_not_vanishing": self.nonvanishing},
            "closed_form_checked_at": self.checked,
            "closed_form_max_error": self.max_check_error,
        }


def counterexample_report(d=4, m=1, r=1, n_list=(8, 16, 32), restarts=16, seed=0, explicit_max=8):
    """Tabulate ``g(n) = V_T(P)/n`` for ``T = P = Q^{⊗(n-m-r)}`` with ``Q`` of maximal varentropy.

    ``g`` uses additivity, ``V(Q^{⊗k}) = k V(Q)``, and is cross-checked
    against the explicit product distribution whenever ``n - m - r <= explicit_max``.
    """
    n_list = sorted(int(n) for n in n_list)
    if not n_list or any(n <= m + r for n in n_list):
        raise ValidationError("every n must exceed m + r")
    q, v_q, _ = max_varentropy_search(d, restarts=restarts, seed=seed)
    rows, checked, err = [], [], 0.0
    qmin = float(np.min(q))
    for n in n_list:
        k = n - m - r
        g = k * v_q / n
        if k <= explicit_max:
            p = iid_power(q, k)
            err = max(err, abs(g_function(p, p, n) - g))
            checked.append(n)
        rows.append({"n": n, "g": g, "min_probability": qmin**k})
    gs = [row["g"] for row in rows]
    exceeds = gs[-1] > 1.0
    nonvanishing = all(b >= a - 1e-12 for a, b in zip(gs, gs[1:])) and gs[-1] > 0
    return CounterexampleReport(int(d), q, v_q, int(m), int(r), rows, exceeds, nonvanishing, checked, err)
