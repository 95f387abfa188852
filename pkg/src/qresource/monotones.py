"""Resource monotones over free-state families.

Optimisations over a free set go through the fully-corrective Frank-Wolfe
engine in :mod:`qresource.optim`, so every value comes with an optimiser that
is a genuine free state and a duality gap.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .divergences import dmax, umegaki
from .errors import NumericalFailure, UnsupportedFamily, ValidationError
from .free_sets import Membership, SeparableFamily
from .linalg import (
    LN2,
    as_density,
    distinct_eigenvalue_count,
    n_copies,
    partial_transpose,
    projector,
    random_unitary,
    sqrt_psd,
    symmetrize,
    trace_distance,
)
from .optim import fully_corrective_fw

REE_MIX = 1e-8


@dataclass
class MonotoneResult:
    """A monotone value in bits (robustnesses are dimensionless) with its optimiser."""

    value: float
    state: np.ndarray = None
    gap: float = 0.0
    iterations: int = 0
    details: dict = field(default_factory=dict)

    @property
    def lower(self):
        return max(self.value - self.gap, 0.0)

    def __float__(self):
        return float(self.value)


def _check_level(rho, family, n):
    rho = as_density(rho, name="rho")
    if rho.shape[0] != family.dim(n):
        raise ValidationError(f"state of dim {rho.shape[0]} does not match {family.name} at n={n} (dim {family.dim(n)})")
    return rho


def _counter_oracle(family, n, seed):
    counter = itertools.count()
    return lambda direction: family.linear_oracle(direction, n, seed=seed + next(counter))


def _neg_entropy_bits(rho):
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(np.sum(w * np.log2(w)))


def cross_entropy_and_gradient(rho, tau):
    """``-Tr rho log2 tau`` and its gradient in ``tau`` (Daleckii-Krein formula)."""
    w, u = np.linalg.eigh(tau)
    w = np.maximum(w, 1e-300)
    lw = np.log(w)
    r = u.conj().T @ rho @ u
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) <= 1e-12 * max(w[-1], 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        div = np.where(close, 2.0 / (w[:, None] + w[None, :]), (lw[:, None] - lw[None, :]) / np.where(close, 1.0, dw))
    value = -float(np.real(np.sum(np.diag(r) * lw))) / LN2
    grad = -(u @ (div * r) @ u.conj().T) / LN2
    return value, 0.5 * (grad + grad.conj().T)


# ---------------------------------------------------------------------------
# relative entropy of resource


def relative_entropy_of_resource(rho, family, n=1, tol=1e-6, max_iter=10_000, seed=0, mix=REE_MIX):
    """``min_{σ ∈ M_n} D(ρ || σ)`` by fully-corrective Frank-Wolfe.

    Iterates are mixed with the canonical full-rank state at weight ``mix``
    so the logarithm stays finite; the reported state is that mixture, which
    is free, so ``value`` is attained. ``value - gap`` lower-bounds the
    minimum over the mixed set.
    """
    rho = _check_level(rho, family, n)
    canon = family.canonical_full_rank(n)
    neg_ent = _neg_entropy_bits(rho)

    def fun(point):
        tau = (1 - mix) * point + mix * canon
        val, grad = cross_entropy_and_gradient(rho, tau)
        return neg_ent + val, (1 - mix) * grad

    res = fully_corrective_fw(fun, _counter_oracle(family, n, seed), [canon], tol=tol, max_iter=max_iter)
    state = (1 - mix) * res.point + mix * canon
    result = MonotoneResult(max(res.value, 0.0), state, res.gap, res.iterations, {"atoms": len(res.atoms)})
    if not res.converged:
        raise NumericalFailure(f"Frank-Wolfe stopped with gap {res.gap:.3g} after {res.iterations} iterations", best=result)
    return result


@dataclass
class RegularizationTrace:
    """Per-copy values ``d_n = D_M(ρ^{⊗n}) / n`` and their consistency checks."""

    levels: list
    d_n: list
    gaps: list
    spectrum_counts: list
    subadditivity: list
    budget_exceeded: bool = False
    states: list = field(default_factory=list, repr=False)

    @property
    def upper(self):
        return min(self.d_n)

    @property
    def lower(self):
        """Largest ``d_n - (gap_n + log2 q(n)) / n`` (pinching-corrected estimate)."""
        return max(
            max(d - (g + math.log2(q)) / n, 0.0) for n, d, g, q in zip(self.levels, self.d_n, self.gaps, self.spectrum_counts)
        )

    @property
    def subadditive(self):
        return all(row["ok"] for row in self.subadditivity)


def regularization_trace(rho, family, n_max, tol=1e-6, max_dim=64, seed=0):
    """Compute ``d_n`` for ``n = 1..n_max`` and check ``f(n+m) <= f(n) + f(m)``.

    Levels whose dimension exceeds ``max_dim`` are skipped and flagged.
    """
    if n_max < 2:
        raise ValidationError("regularization_trace needs n_max >= 2")
    rho = _check_level(rho, family, 1)
    levels, d_n, gaps, counts, states = [], [], [], [], []
    exceeded = False
    for n in range(1, n_max + 1):
        if family.dim(n) > max_dim:
            exceeded = True
            break
        res = relative_entropy_of_resource(n_copies(rho, n), family, n, tol=tol, seed=seed + n)
        levels.append(n)
        d_n.append(res.value / n)
        gaps.append(res.gap)
        states.append(res.state)
        sym = symmetrize_copies(res.state, family, n)
        counts.append(distinct_eigenvalue_count(sym, atol=1e-9))
    f = {n: n * d for n, d in zip(levels, d_n)}
    g = dict(zip(levels, gaps))
    checks = []
    for a in levels:
        for b in levels:
            if a <= b and a + b in f:
                lhs = f[a + b] - g[a + b]
                rhs = f[a] + f[b]
                checks.append({"n": a, "m": b, "f_sum": f[a + b], "f_n_plus_f_m": rhs, "ok": lhs <= rhs + tol})
    return RegularizationTrace(levels, d_n, gaps, counts, checks, exceeded, states)


def symmetrize_copies(state, family, n):
    """Average a level-``n`` operator over all permutations of the copies."""
    if n == 1:
        return state
    if family.parties == 1:
        return symmetrize(state, family.local_dims[0], n)
    # group each copy into one factor, then average over copy permutations
    d = family.dim(1)
    return symmetrize(state, d, n)


# ---------------------------------------------------------------------------
# robustness


def _require_decidable(family):
    probe = family.canonical_full_rank(1)
    if family.exact_membership(probe, 1, 1e-9) is None:
        raise UnsupportedFamily(f"{family.name} has no exact level-1 membership test")


def min_scale(a, b, tol=1e-12):
    """Smallest ``λ`` with ``a <= λ b`` for PSD ``b`` (``inf`` if none exists)."""
    w, v = np.linalg.eigh(b)
    keep = w > 1e-12 * max(w[-1], 1e-300)
    vs, ws = v[:, keep], w[keep]
    s = vs / np.sqrt(ws)
    core = s.conj().T @ a @ s
    lam = float(np.linalg.eigvalsh(0.5 * (core + core.conj().T))[-1]) if vs.shape[1] else 0.0
    for scale in (lam, lam * (1 + 1e-9) + 1e-12):
        if np.linalg.eigvalsh(scale * b - a)[0] >= -tol:
            return scale
    return math.inf


def _dual_lower(rho, tau, family, seed):
    """Witness bound ``Tr Wρ / max_M Tr Wσ`` built from the optimiser ``tau``.

    ``W = τ^{-1} ρ^{1/2} u u† ρ^{1/2} τ^{-1}`` with ``u`` the top eigenvector
    of ``ρ^{1/2} τ^{-1} ρ^{1/2}``; at the optimum the bound is tight.
    """
    w, v = np.linalg.eigh(tau)
    if w[0] <= 1e-14:
        return 1.0
    tinv = (v / w) @ v.conj().T
    sr = sqrt_psd(rho)
    core = sr @ tinv @ sr
    _, vec = np.linalg.eigh(0.5 * (core + core.conj().T))
    x = tinv @ sr @ vec[:, -1]
    wit = np.outer(x, x.conj())
    best = family.linear_oracle(wit, 1, seed=seed)
    denom = float(np.real(np.vdot(wit, best)))
    num = float(np.real(np.vdot(wit, rho)))
    return max(num / denom, 1.0) if denom > 0 else 1.0


def _negative_sq(x):
    w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
    neg = np.minimum(w, 0.0)
    return float(np.sum(neg**2)), (v * neg) @ v.conj().T


def _ppt_repair(tau, dims):
    """Mix ``tau`` with white noise until it and its partial transpose are PSD."""
    tau = 0.5 * (tau + tau.conj().T)
    tau = tau / np.real(np.trace(tau))
    d = tau.shape[0]
    low = min(np.linalg.eigvalsh(tau)[0], np.linalg.eigvalsh(partial_transpose(tau, dims, [0]))[0])
    if low >= 0:
        return tau
    # (1-p) low + p/d >= 0 with a little headroom
    p = min(1.0, -low / (1.0 / d - low) * (1 + 1e-6) + 1e-14)
    return (1 - p) * tau + p * np.eye(d) / d


def _use_sdp(family, method):
    if method not in ("auto", "sdp", "bisection"):
        raise ValidationError(f"unknown robustness method {method!r}")
    if method == "sdp" and not family.ppt_exact(1):
        raise UnsupportedFamily(f"{family.name} is not a partial-transpose cone at level 1")
    return method == "sdp" or (method == "auto" and family.ppt_exact(1))


def _psd_part(x):
    w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
    return (v * np.maximum(w, 0.0)) @ v.conj().T


def _robustness_sdp(rho, dims, standard):
    """Robustness over the partial-transpose cone as a semidefinite program.

    Minimises ``Tr T`` over ``T >= ρ`` with ``T^Γ >= 0`` (and, for the
    standard variant, ``(T - ρ)^Γ >= 0``). Returns ``(lower, tau)``: a weak
    duality bound on the robustness rebuilt from the solver's dual matrices
    after projecting them onto the PSD cone, and the normalised ``T``
    repaired into the free set.
    """
    import cvxpy as cp

    d = rho.shape[0]
    t = cp.Variable((d, d), hermitian=True)
    cons = [t - rho >> 0, cp.partial_transpose(t, list(dims), 0) >> 0]
    if standard:
        cons.append(cp.partial_transpose(t - rho, list(dims), 0) >> 0)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(t))), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NumericalFailure(f"robustness SDP ended with status {prob.status}")
    tau = _ppt_repair(np.asarray(t.value, dtype=complex), dims)

    # weak duality: for PSD Z, V and Y = (I - Z^Γ - V^Γ + λI) >= 0,
    # (1 + λ) Tr T >= Tr Yρ + Tr V ρ^Γ for every feasible T
    pt = lambda x: partial_transpose(x, dims, [0])  # noqa: E731
    z = _psd_part(np.asarray(cons[1].dual_value, dtype=complex))
    # solvers differ in how they scale Hermitian duals; fix the scale from Y + Z^Γ + V^Γ = I
    y_raw = np.asarray(cons[0].dual_value, dtype=complex)
    raw_total = y_raw + pt(np.asarray(cons[1].dual_value, dtype=complex))
    v = None
    if standard:
        raw_total = raw_total + pt(np.asarray(cons[2].dual_value, dtype=complex))
        v = _psd_part(np.asarray(cons[2].dual_value, dtype=complex))
    c = d / float(np.real(np.trace(raw_total)))
    z = c * z
    y = np.eye(d) - pt(z)
    bound_extra = 0.0
    if v is not None:
        v = c * v
        y = y - pt(v)
        bound_extra = float(np.real(np.vdot(v, pt(rho))))
    lam = max(0.0, -float(np.linalg.eigvalsh(0.5 * (y + y.conj().T))[0]))
    y = y + lam * np.eye(d)
    bound = float(np.real(np.vdot(y, rho))) + bound_extra
    return bound / (1.0 + lam) - 1.0, tau


def _polish_scale(tau, scale_of):
    """Best of ``scale_of`` over light white-noise mixtures of ``tau``."""
    d = tau.shape[0]
    best, best_tau = scale_of(tau), tau
    for p in (1e-12, 1e-10, 1e-8, 1e-6):
        cand = (1 - p) * tau + p * np.eye(d) / d
        val = scale_of(cand)
        if val < best:
            best, best_tau = val, cand
    return best, best_tau


def _robustness_bisection(rho, family, scale_of, penalty, tol, seed, inner_iter):
    """Shared bisection: smallest ``s`` admitting a free ``τ`` with ``penalty_s(τ) = 0``.

    ``scale_of(τ)`` returns the exact smallest feasible ``s`` for a given
    ``τ`` (a certified upper bound); ``penalty(s)`` returns the FW objective.
    """
    oracle = _counter_oracle(family, 1, seed)
    canon = family.canonical_full_rank(1)
    best_tau = canon
    hi = scale_of(canon)
    lo = 0.0
    atoms, weights = [canon], None
    undecided = 0
    steps = 0
    infeasible = []  # (s, sqrt of certified-positive penalty) for secant steps
    while hi - lo > tol and steps < 200:
        steps += 1
        s = 0.5 * (lo + hi)
        if len(infeasible) >= 2:
            # the minimal penalty behaves like c (s* - s)^2 below the threshold
            (s1, r1), (s2, r2) = infeasible[-2], infeasible[-1]
            if r1 > r2 > 0 and s2 > s1:
                guess = s2 + r2 * (s2 - s1) / (r1 - r2)
                width = hi - lo
                s = min(max(guess, lo + 0.05 * width), hi - 0.05 * width)
        res = fully_corrective_fw(
            penalty(s),
            oracle,
            list(atoms),
            weights=weights,
            tol=0.0,
            max_iter=inner_iter,
            stop=lambda v, g: v - g > 0.0 or v <= 1e-24 or g <= 1e-16,
        )
        atoms, weights = res.atoms, res.weights
        s_tau = scale_of(res.point)
        if s_tau < hi:
            hi, best_tau = s_tau, res.point
        if s_tau <= s + 1e-12 * (1 + s):
            continue
        if res.value > 1e-20 and res.value - res.gap > 0.0:
            infeasible.append((s, math.sqrt(res.value)))
        else:
            undecided += 1
        lo = s
    return hi, lo, best_tau, undecided, steps


def generalized_robustness(rho, family, tol=1e-6, seed=0, inner_iter=300, method="auto"):
    """Least ``s`` such that ``(ρ + sσ)/(1+s)`` is free for some state ``σ``.

    Bisection on ``s``; feasibility is searched by Frank-Wolfe minimisation of
    ``||((1+s)τ - ρ)_-||²`` over free ``τ``. Every feasible ``τ`` found gives
    the certified value ``2^{Dmax(ρ||τ)} - 1``; a witness built from the best
    ``τ`` gives a lower bound, recorded in ``details``.

    With ``method="auto"`` a family whose level-1 set is exactly the
    partial-transpose cone is handled by a semidefinite program instead
    (``method="sdp"``); ``method="bisection"`` forces the search above. The
    SDP optimiser is repaired into the free set and scored exactly, so the
    value is a certified upper bound either way.
    """
    _require_decidable(family)
    rho = _check_level(rho, family, 1)
    if family.membership(rho, 1) is Membership.INSIDE:
        return MonotoneResult(0.0, rho.copy(), 0.0, 0, {"lower": 0.0})

    def scale_of(tau):
        return min_scale(rho, tau) - 1.0

    def penalty(s):
        def fun(tau):
            val, neg = _negative_sq((1 + s) * tau - rho)
            return val, 2 * (1 + s) * neg

        return fun

    if _use_sdp(family, method):
        sdp_lower, tau = _robustness_sdp(rho, family.dims(1), standard=False)
        hi, tau = _polish_scale(tau, scale_of)
        dual = _dual_lower(rho, tau, family, seed) - 1.0
        lower = max(dual, sdp_lower, 0.0)
        mixer = ((1 + hi) * tau - rho) / hi if hi > 0 else tau
        details = {"lower": lower, "dual_lower": dual, "sdp_lower": sdp_lower, "method": "sdp", "mixer": mixer}
        return MonotoneResult(hi, tau, max(hi - lower, 0.0), 0, details)
    hi, lo, tau, undecided, steps = _robustness_bisection(rho, family, scale_of, penalty, tol, seed, inner_iter)
    dual = _dual_lower(rho, tau, family, seed) - 1.0
    lower = max(lo if undecided == 0 else 0.0, dual)
    mixer = ((1 + hi) * tau - rho) / hi if hi > 0 else tau
    return MonotoneResult(
        hi,
        tau,
        max(hi - lower, 0.0),
        steps,
        {
            "lower": lower,
            "dual_lower": dual,
            "bisection_lower": lo,
            "undecided_steps": undecided,
            "method": "bisection",
            "mixer": mixer,
        },
    )


def standard_robustness(rho, family, tol=1e-6, seed=0, inner_iter=300, method="auto"):
    """Least ``s`` such that ``(ρ + sσ)/(1+s)`` is free with ``σ`` itself free.

    Returns ``inf`` when no free mixer exists at all (e.g. any coherent state
    under the coherence family, where ``ρ - sσ`` keeps its off-diagonal part).
    For partial-transpose families the search minimises the negative parts of
    ``X = (1+s)τ - ρ`` and of its partial transpose over free ``τ``.
    """
    _require_decidable(family)
    rho = _check_level(rho, family, 1)
    if family.membership(rho, 1) is Membership.INSIDE:
        return MonotoneResult(0.0, rho.copy(), 0.0, 0, {})
    if family.parties == 1:
        return MonotoneResult(math.inf, None, 0.0, 0, {"reason": "no free mixer removes off-diagonal terms"})
    dims = family.dims(1)

    def scale_of(tau):
        a = min_scale(rho, tau)
        b = min_scale(partial_transpose(rho, dims, [0]), partial_transpose(tau, dims, [0]))
        return max(a, b) - 1.0

    def penalty(s):
        def fun(tau):
            x = (1 + s) * tau - rho
            v1, n1 = _negative_sq(x)
            v2, n2 = _negative_sq(partial_transpose(x, dims, [0]))
            return v1 + v2, 2 * (1 + s) * (n1 + partial_transpose(n2, dims, [0]))

        return fun

    if _use_sdp(family, method):
        lower, tau = _robustness_sdp(rho, dims, standard=True)
        hi, tau = _polish_scale(tau, scale_of)
        # the generalized robustness never exceeds this one
        lower = max(lower, _robustness_sdp(rho, dims, standard=False)[0], 0.0)
        mixer = ((1 + hi) * tau - rho) / hi if hi > 0 else None
        details = {"lower": lower, "method": "sdp", "mixer": mixer}
        return MonotoneResult(hi, tau, max(hi - lower, 0.0), 0, details)
    hi, lo, tau, undecided, steps = _robustness_bisection(rho, family, scale_of, penalty, tol, seed, inner_iter)
    lower = lo if undecided == 0 else 0.0
    mixer = ((1 + hi) * tau - rho) / hi if np.isfinite(hi) and hi > 0 else None
    return MonotoneResult(hi, tau, max(hi - lower, 0.0), steps, {"lower": lower, "undecided_steps": undecided, "mixer": mixer})


def _direct_min_dmax(rho, family, seed, tol=1e-9, mix=1e-12, powers=(16, 128, 1024, 8192, 65536)):
    """``min_{τ free} Dmax(ρ||τ)`` by Frank-Wolfe on Schatten-p surrogates.

    ``||ρ^{1/2} τ^{-1} ρ^{1/2}||_p`` is convex in ``τ`` and tends to the
    largest eigenvalue as ``p`` grows; the exact ``Dmax`` is evaluated at every
    iterate and the best one kept.
    """
    canon = family.canonical_full_rank(1)
    sr = sqrt_psd(rho)
    oracle = _counter_oracle(family, 1, seed)
    atoms, weights = [canon], None
    best_val, best_tau = dmax(rho, canon).value, canon
    iters = 0
    for p in powers:

        def fun(point, p=p):
            tau = (1 - mix) * point + mix * canon
            w, v = np.linalg.eigh(tau)
            w = np.maximum(w, 1e-300)
            tinv = (v / w) @ v.conj().T
            core = sr @ tinv @ sr
            lam, u = np.linalg.eigh(0.5 * (core + core.conj().T))
            top = lam[-1]
            r = np.clip(lam / top, 0.0, None)
            norm_ratio = float(np.sum(r**p)) ** (1.0 / p)
            value = math.log2(top) + math.log2(norm_ratio)
            coef = (r / norm_ratio) ** (p - 1)
            q = (u * coef) @ u.conj().T / (top * norm_ratio)
            grad = -(tinv @ sr @ q @ sr @ tinv) / LN2
            return value, (1 - mix) * 0.5 * (grad + grad.conj().T)

        res = fully_corrective_fw(fun, oracle, list(atoms), weights=weights, tol=tol, max_iter=400)
        atoms, weights = res.atoms, res.weights
        iters += res.iterations
        tau = (1 - mix) * res.point + mix * canon
        val = dmax(rho, tau).value
        if val < best_val:
            best_val, best_tau = val, tau
    return best_val, best_tau, iters


def log_robustness(rho, family, tol=1e-6, seed=0, check_tol=1e-4, fail_tol=1e-3):
    """``log2(1 + R)`` cross-validated against a direct minimisation of ``Dmax``.

    Raises :class:`NumericalFailure` when the two routes differ by more than
    ``fail_tol``; ``details["agree"]`` records agreement within ``check_tol``.
    """
    gen = generalized_robustness(rho, family, tol=tol, seed=seed)
    via_bisection = math.log2(1.0 + gen.value)
    if gen.value == 0.0:
        return MonotoneResult(0.0, gen.state, 0.0, gen.iterations, {"direct": 0.0, "agree": True})
    direct, tau, iters = _direct_min_dmax(as_density(rho), family, seed)
    diff = abs(via_bisection - direct)
    details = {"bisection": via_bisection, "direct": direct, "difference": diff, "agree": diff <= check_tol}
    result = MonotoneResult(via_bisection, gen.state, math.log2(1.0 + gen.value) - math.log2(1.0 + gen.details["lower"]), gen.iterations + iters, details)
    if diff > fail_tol:
        raise NumericalFailure(f"log-robustness routes disagree by {diff:.3g} bits", best=result)
    return result


# ---------------------------------------------------------------------------
# separably measured relative entropy


def _local_bases(d, rng, extra):
    """Computational, Fourier and ``extra`` Haar-random orthonormal bases of C^d."""
    omega = np.exp(2j * np.pi / d)
    fourier = np.array([[omega ** (j * k) for k in range(d)] for j in range(d)]) / np.sqrt(d)
    bases = [np.eye(d, dtype=complex), fourier]
    if d == 2:
        bases.append(np.array([[1, 1], [1j, -1j]]) / np.sqrt(2))
    bases.extend(random_unitary(d, rng) for _ in range(extra))
    return bases


def _product_povm(ba, bb, weight=1.0):
    return [weight * np.kron(projector(ba[:, i]), projector(bb[:, j])) for i in range(ba.shape[1]) for j in range(bb.shape[1])]


def separable_povms(rho, dims=(2, 2), random_settings=4, seed=0):
    """A finite family of separable POVMs (every effect is a product operator).

    Contains each local product-basis measurement, the shared-randomness
    mixture of matched settings, and a local basis aligned with the best
    product approximation of ``ρ``.
    """
    from .free_sets import best_product_state

    da, db = dims
    rng = np.random.default_rng(seed)
    fixed = 3 if da == 2 else 2
    bases_a = _local_bases(da, rng, random_settings)
    if da == db:
        # conjugate bases make maximally correlated outcomes on |Φ> visible
        bases_b = [m.conj() for m in bases_a]
    else:
        bases_b = _local_bases(db, rng, random_settings)
    matched = list(zip(bases_a, bases_b))
    povms = [_product_povm(ba, bb) for ba, bb in matched]
    for group in (matched, matched[:fixed]):
        shared = []
        for ba, bb in group:
            shared.extend(_product_povm(ba, bb, 1.0 / len(group)))
        povms.append(shared)
    _, (a, b) = best_product_state(as_density(rho), dims, seed=seed)
    qa = np.linalg.qr(np.column_stack([a, rng.normal(size=(da, da - 1)) + 0j]))[0]
    qb = np.linalg.qr(np.column_stack([b, rng.normal(size=(db, db - 1)) + 0j]))[0]
    povms.append(_product_povm(qa, qb))
    return povms


def _min_kl_over_free(p, effects, family, seed, tol=1e-9, max_iter=500):
    """``min_{σ free} KL(p || q(σ))`` with ``q_x(σ) = Tr E_x σ``; returns a certified lower bound."""
    effects = np.array(effects)
    canon = family.canonical_full_rank(1)
    oracle = _counter_oracle(family, 1, seed)
    mask = p > 0

    def probs(sigma):
        return np.real(np.einsum("xij,ji->x", effects, sigma))

    def fun(sigma):
        q = probs(sigma)
        if np.any(q[mask] <= 0):
            return math.inf, np.zeros_like(sigma)
        val = float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))
        coef = np.zeros_like(q)
        coef[mask] = -p[mask] / q[mask] / LN2
        grad = np.einsum("x,xij->ij", coef, effects)
        return val, 0.5 * (grad + grad.conj().T)

    # KL >= 0, so once the value is below tol the bound cannot improve by more than tol
    res = fully_corrective_fw(fun, oracle, [canon], tol=tol, max_iter=max_iter, stop=lambda v, g: v <= tol)
    value, grad = fun(res.point)
    if not np.isfinite(value):
        return 0.0, res
    atom = oracle(-grad)
    gap = float(np.real(np.vdot(grad, res.point - atom)))
    return max(value - max(gap, 0.0), 0.0), res


def separably_measured_ree_lower(rho, dims=(2, 2), random_settings=4, seed=0, povms=None):
    """Certified lower bound on the separably measured relative entropy of entanglement.

    ``max_E min_{σ separable} KL(E(ρ) || E(σ))`` over a finite family of
    separable POVMs; the inner minimum is certified from below by its
    Frank-Wolfe gap. Returns ``(bound, details)``.
    """
    rho = as_density(rho, name="rho")
    da, db = dims
    if rho.shape[0] != da * db:
        raise ValidationError("state dimension does not match the bipartite shape")
    family = SeparableFamily(da, db)
    if povms is None:
        povms = separable_povms(rho, dims, random_settings, seed)
    best, best_idx, values = 0.0, None, []
    for idx, effects in enumerate(povms):
        p = np.clip(np.real(np.array([np.vdot(e, rho) for e in effects])), 0.0, None)
        lb, _ = _min_kl_over_free(p, effects, family, seed + 1000 * idx)
        values.append(lb)
        if lb > best:
            best, best_idx = lb, idx
    return best, {"per_povm": values, "best_povm": best_idx, "povm_count": len(povms)}


# ---------------------------------------------------------------------------
# asymptotic continuity


def continuity_g(x):
    """``(1+x) log2(1+x) - x log2 x`` with ``0 log 0 = 0``."""
    x = float(x)
    if x < 0:
        raise ValidationError("continuity_g needs x >= 0")
    return (1 + x) * math.log2(1 + x) - (x * math.log2(x) if x > 0 else 0.0)


@dataclass
class ContinuityReport:
    pairs: int
    violations: int
    worst_slack: float
    rows: list

    @property
    def passed(self):
        return self.violations == 0


def asymptotic_continuity_check(pairs, family, tol=1e-6, seed=0):
    """Check ``|D_M(ρ) - D_M(ρ')| <= ε log2 d + g(ε)`` with ``ε = ½||ρ - ρ'||_1``.

    ``pairs`` is an iterable of ``(ρ, ρ')``. A violation would mean a solver
    failure, not a failure of the bound.
    """
    d = family.dim(1)
    rows, violations, worst = [], 0, math.inf
    for i, (a, b) in enumerate(pairs):
        va = relative_entropy_of_resource(a, family, 1, tol=tol * 1e-2, seed=seed + 2 * i)
        vb = relative_entropy_of_resource(b, family, 1, tol=tol * 1e-2, seed=seed + 2 * i + 1)
        eps = trace_distance(a, b)
        bound = eps * math.log2(d) + continuity_g(eps)
        diff = abs(va.value - vb.value)
        slack = bound - diff
        worst = min(worst, slack)
        bad = diff > bound + tol
        violations += int(bad)
        rows.append({"eps": eps, "difference": diff, "bound": bound, "violation": bad})
    return ContinuityReport(len(rows), violations, worst, rows)


def coherence_ree_exact(rho):
    """Closed form ``D(ρ || Δ(ρ))`` for the coherence family (Δ dephases)."""
    rho = as_density(rho)
    return umegaki(rho, np.diag(np.diag(rho))).value


__all__ = [
    "ContinuityReport",
    "MonotoneResult",
    "RegularizationTrace",
    "asymptotic_continuity_check",
    "coherence_ree_exact",
    "continuity_g",
    "cross_entropy_and_gradient",
    "generalized_robustness",
    "log_robustness",
    "min_scale",
    "regularization_trace",
    "relative_entropy_of_resource",
    "separable_povms",
    "separably_measured_ree_lower",
    "standard_robustness",
    "symmetrize_copies",
]
