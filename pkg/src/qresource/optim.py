"""Conditional-gradient machinery over convex hulls of atoms.

The free-state sets only expose a linear maximisation oracle, so every
optimisation over them goes through :func:`fully_corrective_fw`: each outer
step asks the oracle for a new atom, then the weights on the active atoms are
re-optimised over the probability simplex.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog, minimize, nnls


def project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    k = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


@dataclass
class FWResult:
    point: np.ndarray
    value: float
    gap: float
    atoms: list
    weights: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    stalled: bool = False


def _combine(atoms, weights):
    out = np.zeros_like(atoms[0])
    for w, a in zip(weights, atoms):
        if w != 0.0:
            out = out + w * a
    return out


def simplex_minimize(fun, atoms, w0, maxiter=500, ftol=1e-15):
    """Minimise ``fun(point) -> (value, grad)`` over convex weights of ``atoms``."""
    k = len(atoms)
    if k == 1:
        return np.ones(1)
    flat = np.array([a.reshape(-1) for a in atoms])

    def raw(w):
        point = (w @ flat).reshape(atoms[0].shape)
        val, grad = fun(point)
        return val, np.real(flat.conj() @ grad.reshape(-1))

    # work in units of the starting value so tiny objectives still make progress
    f0 = raw(w0)[0]
    scale = abs(f0) if np.isfinite(f0) and f0 != 0.0 else 1.0

    def wfun(w):
        val, g = raw(w)
        return val / scale, g / scale

    res = minimize(
        wfun,
        w0,
        jac=True,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * k,
        constraints=[{"type": "eq", "fun": lambda w: np.sum(w) - 1.0, "jac": lambda w: np.ones_like(w)}],
        options=dict(maxiter=maxiter, ftol=ftol),
    )
    w = np.clip(res.x, 0.0, None)
    s = np.sum(w)
    w = w / s if s > 0 else w0
    if wfun(w)[0] > wfun(w0)[0]:
        return w0
    return w


def _pairwise_step(fun, atoms, weights, grad, toward):
    """Move weight from the highest-gradient active atom to ``toward``.

    The step size is a root of the directional derivative, which stays
    resolvable long after value differences drown in rounding. Returns
    ``(weights, point, value, grad)`` or None when no step is possible.
    """
    scores = np.array([np.real(np.vdot(grad, a)) for a in atoms])
    scores[weights <= 0] = -np.inf
    away = int(np.argmax(scores))
    if away == toward or not scores[toward] < scores[away]:
        return None
    cap = float(weights[away])
    base = _combine(atoms, weights)
    direction = atoms[toward] - atoms[away]

    def slope(t):
        value, g = fun(base + t * direction)
        # infeasible points (infinite value) count as uphill
        return float(np.real(np.vdot(g, direction))) if np.isfinite(value) else math.inf

    if not slope(0.0) < 0:
        return None
    # bracket [lo, hi] with slope(lo) < 0 and a finite positive slope at hi
    lo, hi, t = 0.0, cap, None
    s_hi = slope(hi)
    if s_hi <= 0:
        t = cap
    for _ in range(100):
        if t is not None or np.isfinite(s_hi):
            break
        mid = 0.5 * (lo + hi)
        s_mid = slope(mid)
        if s_mid <= 0:
            lo = mid
        else:
            hi, s_hi = mid, s_mid
    if t is None:
        if not np.isfinite(s_hi):
            t = lo
        else:
            t = brentq(slope, lo, hi, xtol=max(1e-300, 1e-15 * hi), maxiter=200, full_output=True, disp=False)[0]
    if t <= 0:
        return None
    weights = weights.copy()
    weights[away] -= t
    weights[toward] += t
    weights = np.clip(weights, 0.0, None)
    weights /= np.sum(weights)
    point = _combine(atoms, weights)
    new_value, new_grad = fun(point)
    if not np.isfinite(new_value):
        return None
    return weights, point, new_value, new_grad


def _least_squares_simplex(atoms, target, sum_weight=1e4):
    """Weights on the simplex minimising ``||sum w_i a_i - target||_F``."""
    cols = []
    for a in atoms:
        v = a.reshape(-1)
        cols.append(np.concatenate([v.real, v.imag, [sum_weight]]))
    mat = np.array(cols).T
    t = target.reshape(-1)
    rhs = np.concatenate([t.real, t.imag, [sum_weight]])
    w, _ = nnls(mat, rhs, maxiter=50 * len(atoms) + 100)
    s = np.sum(w)
    return w / s if s > 0 else np.full(len(atoms), 1.0 / len(atoms))


def fully_corrective_fw(
    fun,
    oracle,
    atoms,
    weights=None,
    tol=1e-6,
    max_iter=10_000,
    max_atoms=400,
    prune=1e-13,
    inner=None,
    stop=None,
):
    """Minimise a smooth convex function over the convex hull of oracle atoms.

    Parameters
    ----------
    fun : callable
        ``fun(point) -> (value, gradient)``; the gradient is a Hermitian matrix
        with ``d value = Re Tr(gradient · d point)``.
    oracle : callable
        ``oracle(direction) -> atom`` maximising ``Re Tr(direction · atom)``.
    atoms : list of ndarray
        Initial active set.
    tol : float
        Stop when the Frank-Wolfe duality gap drops below ``tol``.
    inner : callable, optional
        Replacement for the default SLSQP weight solver,
        ``inner(atoms, w0) -> weights``.
    stop : callable, optional
        ``stop(value, gap) -> bool`` for early exits (e.g. certified infeasibility).

    Returns
    -------
    FWResult
        ``value - gap`` is a certified lower bound on the minimum.
    """
    atoms = [np.asarray(a, dtype=complex) for a in atoms]
    if weights is None:
        weights = np.full(len(atoms), 1.0 / len(atoms))
    weights = np.asarray(weights, dtype=float)
    if len(atoms) > 1:
        weights = (inner or (lambda a, w: simplex_minimize(fun, a, w)))(atoms, weights)
    point = _combine(atoms, weights)
    value, grad = fun(point)
    gap = math.inf
    history = []
    converged = False
    stalled = False
    it = 0
    for it in range(1, max_iter + 1):
        new = np.asarray(oracle(-grad), dtype=complex)
        gap = float(np.real(np.vdot(grad, point - new)))
        history.append((value, gap))
        if gap <= tol:
            converged = True
            break
        if stop is not None and stop(value, gap):
            break
        match = [i for i, a in enumerate(atoms) if np.max(np.abs(new - a)) <= 1e-12]
        if match:
            toward = match[0]
        else:
            atoms.append(new)
            toward = len(atoms) - 1
            w0 = np.append(weights, 0.0)
            # seed the new atom with a short line-search step so the solver starts off the vertex
            best_t, best_v = 0.0, value
            for t in (0.5, 0.25, 0.1, 0.03, 0.01, 1e-3, 1e-4, 1e-6):
                cand = (1 - t) * point + t * new
                v, _ = fun(cand)
                if v < best_v:
                    best_t, best_v = t, v
                    break
            w0 = w0 * (1 - best_t)
            w0[-1] += best_t
            weights = (inner or (lambda a, w: simplex_minimize(fun, a, w)))(atoms, w0)
        # the weight solver stalls at ~1e-8 relative accuracy; a pairwise step
        # toward the oracle atom, sized by the directional derivative, goes further
        point = _combine(atoms, weights)
        value, grad = fun(point)
        polished = _pairwise_step(fun, atoms, weights, grad, toward)
        if polished is not None:
            weights, point, value, grad = polished
        elif match:
            stalled = True
            break
        keep = weights > prune
        if not np.any(keep):
            keep[np.argmax(weights)] = True
        atoms = [a for a, k in zip(atoms, keep) if k]
        weights = weights[keep]
        if len(atoms) > max_atoms:
            order = np.argsort(weights)[::-1][:max_atoms]
            atoms = [atoms[i] for i in order]
            weights = weights[order]
        weights = weights / np.sum(weights)
        point = _combine(atoms, weights)
        value, grad = fun(point)
    return FWResult(point, float(value), max(gap, 0.0), atoms, weights, it, converged, history, stalled)


def fw_distance(target, oracle, atoms, tol=1e-14, max_iter=500):
    """Frobenius distance from ``target`` to the convex hull of oracle atoms.

    Returns ``(distance, FWResult)``; the result's point is the nearest hull
    point found.
    """
    target = np.asarray(target, dtype=complex)

    def fun(x):
        diff = x - target
        return float(np.real(np.vdot(diff, diff))), 2.0 * diff

    res = fully_corrective_fw(
        fun,
        oracle,
        atoms,
        tol=tol,
        max_iter=max_iter,
        inner=lambda a, w: _least_squares_simplex(a, target),
        stop=lambda v, g: v <= tol,
    )
    return math.sqrt(max(res.value, 0.0)), res


@dataclass
class CutResult:
    """Outcome of :func:`maximise_concave_by_cuts`.

    ``best`` is the largest objective value seen at a genuine hull point
    (``point``); ``upper`` bounds the maximum over the whole set whenever the
    oracle is exact.
    """

    point: np.ndarray
    best: float
    upper: float
    atoms: list
    weights: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list)

    @property
    def gap(self):
        return max(self.upper - self.best, 0.0)


def _master_lp(table, offsets):
    """``max_w min_k (table[k] @ w + offsets[k])`` over the simplex, with dual weights."""
    k, j = table.shape
    c = np.zeros(j + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-table, np.ones((k, 1))])
    a_eq = np.zeros((1, j + 1))
    a_eq[0, :j] = 1.0
    bounds = [(0.0, None)] * j + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=offsets, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"master LP failed: {res.message}")
    w = np.clip(res.x[:j], 0.0, None)
    mu = np.clip(-res.ineqlin.marginals, 0.0, None)
    if mu.sum() <= 0:
        mu = np.zeros(k)
        mu[int(np.argmin(table @ w + offsets))] = 1.0
    return w / w.sum(), mu / mu.sum(), -res.fun


def maximise_concave_by_cuts(cut, oracle, start, tol=1e-8, max_iter=200, stop=None):
    """Maximise a concave ``φ(σ) = min_k (Re Tr C_k σ + b_k)`` over a convex hull of oracle atoms.

    Kelley's cutting planes with column generation: every evaluation
    ``cut(σ) -> (φ(σ), C, b)`` contributes the affine majorant it attains, the
    master LP picks the best hull point under the collected majorants, and the
    LP duals mix the majorants into a direction for ``oracle(C) -> atom``
    (maximising ``Re Tr C σ``). The mixed majorant maximised by the oracle is a
    valid upper bound on ``max φ``.

    ``stop(best, upper) -> bool`` replaces the default absolute test
    ``upper - best <= tol``.
    """
    atoms = [np.asarray(start, dtype=complex)]
    mats, offsets, rows = [], [], []
    weights = np.ones(1)
    point = atoms[0]
    best, best_point, best_w, best_atoms = -math.inf, point, weights, list(atoms)
    upper = math.inf
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        val, mat, off = cut(point)
        mat = np.asarray(mat, dtype=complex)
        if val > best:
            best, best_point, best_w, best_atoms = val, point, weights, list(atoms)
        mats.append(mat)
        offsets.append(float(off))
        rows.append([float(np.real(np.vdot(mat, a))) for a in atoms])
        table = np.array(rows)
        weights, mu, _ = _master_lp(table, np.array(offsets))
        direction = sum(m * c for m, c in zip(mu, mats))
        new = np.asarray(oracle(direction), dtype=complex)
        upper = min(upper, float(np.real(np.vdot(direction, new))) + float(mu @ np.array(offsets)))
        history.append((best, upper))
        done = stop(best, upper) if stop is not None else upper - best <= tol
        if done:
            converged = True
            break
        if all(np.max(np.abs(new - a)) > 1e-12 for a in atoms):
            atoms.append(new)
            for r, c in zip(rows, mats):
                r.append(float(np.real(np.vdot(c, new))))
            weights, mu, _ = _master_lp(np.array(rows), np.array(offsets))
        point = sum(w * a for w, a in zip(weights, atoms))
    return CutResult(best_point, best, upper, best_atoms, best_w, it, converged, history)
