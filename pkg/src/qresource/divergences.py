"""Quantum relative entropies and the pinching map.

Every public quantity is reported in bits. ``math.inf`` marks the
"supports do not nest" branch; it is never replaced by a large float.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import NumericalFailure, ValidationError
from .linalg import (
    LN2,
    SUPPORT_RTOL,
    Povm,
    as_density,
    as_hermitian,
    spectrum_groups,
    support_basis,
    trace_distance,
)

SUPPORT_TOL = 1e-10


@dataclass
class DivergenceValue:
    """A divergence in bits with an optional optimiser and an accuracy gap."""

    value: float
    certificate: Optional[np.ndarray] = None
    gap: float = 0.0
    lower_bound: bool = False
    iterations: int = 0

    def __float__(self):
        return float(self.value)


def _pair(rho, sigma):
    rho = as_density(rho, name="rho")
    sigma = as_density(sigma, name="sigma")
    if rho.shape != sigma.shape:
        raise ValidationError(f"shape mismatch: {rho.shape} vs {sigma.shape}")
    return rho, sigma


def support_contained(rho, sigma, tol=SUPPORT_TOL):
    """Whether supp rho ⊆ supp sigma, i.e. rho has no weight on ker sigma."""
    vs, _ = support_basis(sigma)
    outside = np.real(np.trace(rho)) - np.real(np.trace(vs.conj().T @ rho @ vs))
    return outside <= tol


def _entropy_terms(rho, sigma):
    """Tr rho log rho and Tr rho log sigma in nats (sigma log on its support)."""
    wr = np.linalg.eigvalsh(rho)
    wr = wr[wr > SUPPORT_RTOL * wr[-1]]
    neg_entropy = float(np.sum(wr * np.log(wr)))
    ws, vs = np.linalg.eigh(sigma)
    keep = ws > SUPPORT_RTOL * ws[-1]
    vk = vs[:, keep]
    diag = np.real(np.einsum("ij,ik,kj->j", vk.conj(), rho, vk))
    cross = float(np.sum(diag * np.log(ws[keep])))
    return neg_entropy, cross


def umegaki(rho, sigma):
    """Umegaki relative entropy ``Tr rho (log rho - log sigma)`` in bits."""
    rho, sigma = _pair(rho, sigma)
    if not support_contained(rho, sigma):
        return DivergenceValue(math.inf)
    neg_entropy, cross = _entropy_terms(rho, sigma)
    return DivergenceValue(max((neg_entropy - cross) / LN2, 0.0))


def dmax(rho, sigma):
    """Max-relative entropy; the certificate is the maximising generalised eigenvector."""
    rho, sigma = _pair(rho, sigma)
    if not support_contained(rho, sigma):
        return DivergenceValue(math.inf)
    vs, ws = support_basis(sigma)
    s_inv_half = vs / np.sqrt(ws)
    core = s_inv_half.conj().T @ rho @ s_inv_half
    w, v = np.linalg.eigh(0.5 * (core + core.conj().T))
    lam = w[-1]
    vec = s_inv_half @ v[:, -1]
    vec = vec / np.linalg.norm(vec)
    return DivergenceValue(max(math.log2(lam), 0.0) if lam > 0 else 0.0, certificate=vec)


# ---------------------------------------------------------------------------
# hypothesis testing


def _np_projector(rho, sigma, t, cut):
    """Projector onto the strictly positive part of ``rho - t sigma``."""
    w, v = np.linalg.eigh(rho - t * sigma)
    vp = v[:, w > cut]
    proj = vp @ vp.conj().T
    a = np.real(np.vdot(proj, rho))
    b = np.real(np.vdot(proj, sigma))
    return proj, a, b


def neyman_pearson(rho, sigma, eps, max_iter=200):
    """Optimal test for ``min Tr M sigma`` subject to ``Tr M rho >= 1 - eps``.

    Returns ``(beta, M)``. The threshold ``t`` of the family of projectors
    ``{rho - t sigma > 0}`` is bisected; the final test is the convex mixture of
    the two bracketing projectors that meets the type-I constraint with
    equality.
    """
    target = 1.0 - eps
    dim = rho.shape[0]
    if target <= 0.0:
        return 0.0, np.zeros((dim, dim), dtype=complex)
    cut = 1e-14
    # weight of rho on ker(sigma) is accepted for free
    vs, ws = support_basis(sigma)
    ker = np.eye(dim) - vs @ vs.conj().T
    a_ker = np.real(np.vdot(ker, rho))
    if a_ker >= target - 1e-15:
        m = ker * (target / a_ker) if a_ker > 0 else ker
        return 0.0, m
    lo = 0.0
    p_lo, a_lo, b_lo = _np_projector(rho, sigma, lo, cut)
    if a_lo < target:
        # only possible when eps is (numerically) zero and rho is not full support in its own span
        p_lo = np.eye(dim, dtype=complex)
        a_lo, b_lo = 1.0, 1.0
    hi = max(np.linalg.eigvalsh(rho)[-1] / ws[0], 1.0) * 2.0 + 1.0
    p_hi, a_hi, b_hi = _np_projector(rho, sigma, hi, cut)
    while a_hi >= target:
        hi *= 2.0
        p_hi, a_hi, b_hi = _np_projector(rho, sigma, hi, cut)
        if hi > 1e300:
            raise NumericalFailure("Neyman-Pearson threshold search diverged")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        p_mid, a_mid, b_mid = _np_projector(rho, sigma, mid, cut)
        if a_mid >= target:
            lo, p_lo, a_lo, b_lo = mid, p_mid, a_mid, b_mid
        else:
            hi, p_hi, a_hi, b_hi = mid, p_mid, a_mid, b_mid
        if hi - lo <= 1e-15 * hi:
            break
    if a_lo - a_hi <= 0:
        w = 1.0
    else:
        w = (target - a_hi) / (a_lo - a_hi)
    w = min(max(w, 0.0), 1.0)
    m = w * p_lo + (1.0 - w) * p_hi
    beta = w * b_lo + (1.0 - w) * b_hi
    return max(beta, 0.0), 0.5 * (m + m.conj().T)


def hypothesis_testing(rho, sigma, eps):
    """Hypothesis-testing relative entropy ``-log2 min{Tr M sigma : Tr M rho >= 1-eps}``.

    The certificate is the optimal test ``M``. A vanishing optimal type-II
    error is reported as ``inf``.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"eps must lie in [0, 1], got {eps}")
    rho, sigma = _pair(rho, sigma)
    beta, m = neyman_pearson(rho, sigma, eps)
    value = math.inf if beta <= 0.0 else -math.log2(beta)
    return DivergenceValue(value, certificate=m)


# ---------------------------------------------------------------------------
# measured relative entropies


def classical_kl(p, q):
    """Kullback-Leibler divergence in bits with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def _herm_from_params(x, d):
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    h = np.diag(x[:d]).astype(complex)
    h[iu] = x[d : d + k] + 1j * x[d + k :]
    return h + np.triu(h, 1).conj().T


def _herm_to_params(g, d):
    iu = np.triu_indices(d, 1)
    return np.concatenate([np.real(np.diag(g)), 2 * np.real(g[iu]), 2 * np.imag(g[iu])])


def _variational_objective(x, rho, sigma, d):
    # f(H) = Tr rho H + 1 - Tr sigma exp(H), nats; concave in exp(H)
    h = _herm_from_params(x, d)
    w, v = np.linalg.eigh(h)
    w = np.minimum(w, 700.0)
    ew = np.exp(w)
    s = v.conj().T @ sigma @ v
    val = np.real(np.vdot(rho, h)) + 1.0 - float(np.real(np.sum(np.diag(s) * ew)))
    dw = w[:, None] - w[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        divided = np.where(
            np.abs(dw) > 1e-9,
            (ew[:, None] - ew[None, :]) / dw,
            np.exp(0.5 * (w[:, None] + w[None, :])),
        )
    grad = rho - v @ (divided * s) @ v.conj().T
    return -val, -_herm_to_params(grad, d)


def _basis_kl(basis, rho, sigma):
    p = np.real(np.einsum("ij,ik,kj->j", basis.conj(), rho, basis))
    q = np.real(np.einsum("ij,ik,kj->j", basis.conj(), sigma, basis))
    return classical_kl(np.clip(p, 0, None), np.clip(q, 0, None)), p, q


def measured_all(rho, sigma, max_iter=100_000, rtol=1e-9):
    """Measured relative entropy over all POVMs, as a certified lower bound.

    Maximises the concave functional ``Tr rho log w + 1 - Tr sigma w`` over
    positive definite observables ``w = exp(H)``, starting from the identity,
    by quasi-Newton ascent with line search. The returned value is the
    Kullback-Leibler divergence achieved by measuring in the eigenbasis of the
    final observable, so it is always attained by an actual measurement. The
    certificate is that observable and ``gap`` the last relative improvement.
    """
    rho, sigma = _pair(rho, sigma)
    if not support_contained(rho, sigma):
        return DivergenceValue(math.inf)
    # restrict to supp sigma
    vs, _ = support_basis(sigma)
    r = vs.conj().T @ rho @ vs
    s = vs.conj().T @ sigma @ vs
    r, s = 0.5 * (r + r.conj().T), 0.5 * (s + s.conj().T)
    d = r.shape[0]
    if d == 1:
        return DivergenceValue(0.0, certificate=vs @ vs.conj().T)
    res = minimize(
        _variational_objective,
        np.zeros(d * d),
        args=(r, s, d),
        jac=True,
        method="L-BFGS-B",
        options=dict(maxiter=max_iter, ftol=rtol * 1e-6, gtol=1e-12, maxcor=30),
    )
    if not np.all(np.isfinite(res.x)):
        raise NumericalFailure("measured relative entropy ascent diverged", best=0.0)
    h = _herm_from_params(res.x, d)
    _, basis = np.linalg.eigh(h)
    kl, p, q = _basis_kl(basis, r, s)
    # optimal eigenvalues for this basis are p/q; that observable is the certificate
    with np.errstate(divide="ignore", invalid="ignore"):
        wopt = np.where(q > 0, p / np.where(q > 0, q, 1.0), 0.0)
    omega_small = (basis * wopt) @ basis.conj().T
    omega = vs @ omega_small @ vs.conj().T
    variational = -res.fun / LN2
    value = max(kl, 0.0)
    gap = abs(value - variational) if np.isfinite(variational) else math.inf
    return DivergenceValue(value, certificate=omega, gap=gap, lower_bound=True, iterations=int(res.nit))


def measured_restricted(rho, sigma, measurements, cone_test=None):
    """Best Kullback-Leibler divergence over a supplied finite family of POVMs.

    This is a lower bound on the measured relative entropy of any measurement
    class containing the family. ``cone_test`` optionally vets every effect
    (e.g. membership in the cone of separable operators). The certificate is
    the index of the best POVM in the family.
    """
    rho, sigma = _pair(rho, sigma)
    measurements = list(measurements)
    if not measurements:
        raise ValidationError("need at least one POVM")
    best, best_idx = -math.inf, None
    for idx, povm in enumerate(measurements):
        if not isinstance(povm, Povm):
            povm = Povm(tuple(povm))
        if povm.dim != rho.shape[0]:
            raise ValidationError("POVM dimension does not match the states")
        if cone_test is not None:
            for e in povm.effects:
                if not cone_test(e):
                    raise ValidationError(f"effect of POVM {idx} fails the cone test")
        val = classical_kl(povm.probabilities(rho), povm.probabilities(sigma))
        if val > best:
            best, best_idx = val, idx
    return DivergenceValue(max(best, 0.0), certificate=best_idx, lower_bound=True)


# ---------------------------------------------------------------------------
# smoothing


def _project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    k = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def _project_l1_ball(v, radius):
    if np.sum(np.abs(v)) <= radius:
        return v
    return np.sign(v) * radius * _project_simplex(np.abs(v) / radius)


def _project_states(x):
    w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
    return (v * _project_simplex(w)) @ v.conj().T


def _project_ball(x, center, radius):
    w, v = np.linalg.eigh(0.5 * ((x - center) + (x - center).conj().T))
    return center + (v * _project_l1_ball(w, radius)) @ v.conj().T


def _project_smoothing_set(x, rho, eps, sweeps=40):
    """Dykstra projection onto states within trace distance eps of rho."""
    y = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(sweeps):
        z = _project_states(y + p)
        p = y + p - z
        y = _project_ball(z + q, rho, 2.0 * eps)
        q = z + q - y
    return _repair(_project_states(y), rho, eps)


def _repair(candidate, rho, eps):
    """Pull a state back into the eps-ball by mixing it with rho."""
    dist = trace_distance(candidate, rho)
    if dist <= eps:
        return candidate
    lam = eps / dist
    return rho + lam * (candidate - rho)


def _smoothing_sdp(rho, sigma, eps):
    """Solve the smoothing program as a semidefinite program.

    Returns ``(t, rho_prime)`` with ``t`` the solver's optimal ``lambda``.
    """
    import cvxpy as cp

    d = rho.shape[0]
    x = cp.Variable((d, d), hermitian=True)
    pos = cp.Variable((d, d), hermitian=True)
    neg = cp.Variable((d, d), hermitian=True)
    t = cp.Variable()
    constraints = [
        x >> 0,
        cp.real(cp.trace(x)) == 1,
        x - rho == pos - neg,
        pos >> 0,
        neg >> 0,
        cp.real(cp.trace(pos + neg)) <= 2 * eps,
        t * sigma - x >> 0,
        t >= 1,
    ]
    problem = cp.Problem(cp.Minimize(t), constraints)
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.error.SolverError as exc:
        raise NumericalFailure(f"smoothing SDP failed: {exc}") from None
    if problem.status in ("infeasible", "infeasible_inaccurate"):
        return math.inf, None
    if problem.status not in ("optimal", "optimal_inaccurate") or x.value is None:
        raise NumericalFailure(f"smoothing SDP status {problem.status}")
    return float(t.value), np.asarray(x.value)


def _certify_smoothing(candidate, rho, sigma, eps):
    """Make a candidate exactly feasible and return ``(value, state)``."""
    vs, _ = support_basis(sigma)
    proj = vs @ vs.conj().T
    x = _project_states(proj @ candidate @ proj)
    x = _repair(x, rho, eps)
    return dmax(x, sigma).value, x


def smoothed_dmax(rho, sigma, eps, method="sdp", max_iter=3000, tol=1e-10):
    """Smoothed max-relative entropy over the trace-distance eps-ball.

    Parameters
    ----------
    method : {"sdp", "subgradient"}
        ``"sdp"`` solves the semidefinite program with an interior-point
        solver. ``"subgradient"`` runs projected gradient descent on a soft-max
        surrogate of ``lambda_max(sigma^{-1/2} rho' sigma^{-1/2})``.

    Returns
    -------
    DivergenceValue
        The value is ``dmax(rho', sigma)`` evaluated exactly at a feasible
        ``rho'`` (the certificate), hence an upper bound. For the SDP route
        ``gap`` is the distance to the solver's optimal objective; for the
        subgradient route it is the last change of the surrogate.
    """
    if not 0.0 <= eps < 1.0:
        raise ValidationError(f"eps must lie in [0, 1), got {eps}")
    if method not in ("sdp", "subgradient"):
        raise ValidationError(f"unknown smoothing method {method!r}")
    rho, sigma = _pair(rho, sigma)
    base = dmax(rho, sigma)
    if eps == 0.0:
        return DivergenceValue(base.value, certificate=rho.copy(), gap=0.0)
    if method == "sdp":
        t, x = _smoothing_sdp(rho, sigma, eps)
        if x is None:
            # no state in the ball is supported inside supp sigma
            return DivergenceValue(math.inf, certificate=None, gap=0.0)
        value, cert = _certify_smoothing(x, rho, sigma, eps)
        if value > base.value:
            value, cert = base.value, rho.copy()
        floor = max(math.log2(max(t, 1.0)), 0.0)
        return DivergenceValue(value, certificate=cert, gap=max(value - floor, 0.0))
    return _smoothed_dmax_subgradient(rho, sigma, eps, base, max_iter, tol)


def _smoothed_dmax_subgradient(rho, sigma, eps, base, max_iter, tol):
    vs, ws = support_basis(sigma)
    s_inv_half = vs / np.sqrt(ws)
    sig_proj = vs @ vs.conj().T

    def exact(x):
        inside = np.real(np.vdot(sig_proj, x))
        if inside < 1.0 - 1e-10:
            return math.inf
        core = s_inv_half.conj().T @ x @ s_inv_half
        lam = np.linalg.eigvalsh(0.5 * (core + core.conj().T))[-1]
        return max(math.log2(lam), 0.0) if lam > 0 else 0.0

    # seeds: pull rho into supp sigma, or spend the budget mixing toward sigma
    seeds = [rho]
    proj = sig_proj @ rho @ sig_proj
    if np.real(np.trace(proj)) > 0:
        seeds.append(_repair(proj / np.real(np.trace(proj)), rho, eps))
    seeds.append(_repair(sigma, rho, eps))
    best_x, best_val = None, math.inf
    for x in seeds:
        v = exact(x)
        if v < best_val:
            best_x, best_val = x, v
    if not np.isfinite(best_val):
        best_x = _project_smoothing_set(proj + 1e-12 * sig_proj, rho, eps)
        best_val = exact(best_x)
    x = best_x.copy()
    scale = 1.0 / ws[0]
    it = 0
    last_gap = math.inf
    for beta in (1e1, 1e2, 1e3, 1e4, 1e5):
        step = 0.5 / (beta * scale * scale)
        prev = math.inf
        for _ in range(max_iter // 5):
            it += 1
            core = s_inv_half.conj().T @ x @ s_inv_half
            w, v = np.linalg.eigh(0.5 * (core + core.conj().T))
            z = np.exp(beta * (w - w[-1]))
            smooth = w[-1] + math.log(np.sum(z)) / beta
            grad_core = (v * (z / np.sum(z))) @ v.conj().T
            grad = s_inv_half @ grad_core @ s_inv_half.conj().T
            x = _project_smoothing_set(x - step * grad, rho, eps)
            val = exact(x)
            if val < best_val:
                best_x, best_val = x, val
            if abs(prev - smooth) <= tol * max(1.0, abs(smooth)):
                break
            prev = smooth
        last_gap = abs(prev - smooth) if np.isfinite(prev) else math.inf
    return DivergenceValue(min(best_val, base.value), certificate=best_x, gap=max(last_gap, 0.0), iterations=it)


# ---------------------------------------------------------------------------
# pinching


class PinchingMap:
    """Pinching with respect to the spectral projectors of a state.

    Eigenvalues closer than ``atol`` are treated as degenerate.
    """

    def __init__(self, sigma, atol=1e-10):
        sigma = as_hermitian(sigma, name="sigma")
        w, v = np.linalg.eigh(sigma)
        self.sigma = sigma
        self.groups = spectrum_groups(w, atol)
        self.eigenvalues = np.array([np.mean(w[g]) for g in self.groups])
        self.projectors = [v[:, g] @ v[:, g].conj().T for g in self.groups]
        self._blocks = [v[:, g] for g in self.groups]

    @property
    def distinct_count(self):
        return len(self.groups)

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape != self.sigma.shape:
            raise ValidationError("operator shape does not match the pinching map")
        out = np.zeros_like(x)
        for b in self._blocks:
            out += b @ (b.conj().T @ x @ b) @ b.conj().T
        return out


def pinch(pmap, x):
    """Apply a :class:`PinchingMap` (or build one from a state) to ``x``."""
    if not isinstance(pmap, PinchingMap):
        pmap = PinchingMap(pmap)
    return pmap(x)
