"""Dense linear algebra on small Hilbert spaces.

Operators are plain complex ``numpy`` arrays. Multipartite operators carry
their tensor structure through a tuple of local dimensions (``dims``), ordered
the same way as the Kronecker factors.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9
TRACE_TOL = 1e-9
SUPPORT_RTOL = 1e-12
LN2 = np.log(2.0)


# ---------------------------------------------------------------------------
# validation


def _as_square(x, name="operator"):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {x.shape}")
    return x


def hermiticity_residual(x):
    x = np.asarray(x)
    return float(np.max(np.abs(x - x.conj().T))) if x.size else 0.0


def as_hermitian(x, tol=HERMITIAN_TOL, name="operator"):
    """Return ``x`` as a Hermitian complex array, symmetrised to kill round-off.

    Raises
    ------
    ValidationError
        If ``x`` is not square or deviates from its adjoint by more than ``tol``.
    """
    x = _as_square(x, name)
    res = hermiticity_residual(x)
    if res > tol:
        raise ValidationError(f"{name} is not Hermitian (residual {res:.3e} > {tol:.0e})")
    return 0.5 * (x + x.conj().T)


def as_density(x, psd_tol=PSD_TOL, trace_tol=TRACE_TOL, name="state"):
    """Validate a density operator.

    Eigenvalues in ``[-psd_tol, 0)`` are clipped to zero and the result is
    renormalised; anything more negative is rejected.
    """
    x = as_hermitian(x, name=name)
    tr = np.trace(x).real
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(f"{name} has trace {tr:.12g}, expected 1")
    w, v = np.linalg.eigh(x)
    if w[0] < -psd_tol:
        raise ValidationError(f"{name} has negative eigenvalue {w[0]:.3e}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        x = (v * w) @ v.conj().T
        x = 0.5 * (x + x.conj().T)
        x /= np.trace(x).real
    return x


def is_psd(x, tol=PSD_TOL):
    return bool(np.linalg.eigvalsh(as_hermitian(x))[0] >= -tol)


def check_dims(dims, dim):
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValidationError(f"local dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != dim:
        raise ValidationError(f"local dimensions {dims} do not multiply to {dim}")
    return dims


@dataclass(frozen=True)
class Povm:
    """A finite measurement: PSD effects summing to the identity."""

    effects: tuple
    labels: Optional[tuple] = None
    tol: float = field(default=PSD_TOL, repr=False)

    def __post_init__(self):
        effects = tuple(as_hermitian(e, name="effect") for e in self.effects)
        if not effects:
            raise ValidationError("a POVM needs at least one effect")
        dim = effects[0].shape[0]
        for e in effects:
            if e.shape != (dim, dim):
                raise ValidationError("POVM effects have mismatched shapes")
            if np.linalg.eigvalsh(e)[0] < -self.tol:
                raise ValidationError("POVM effect is not positive semidefinite")
        total = sum(effects)
        if np.max(np.abs(total - np.eye(dim))) > self.tol:
            raise ValidationError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)
        labels = self.labels if self.labels is not None else tuple(range(len(effects)))
        if len(labels) != len(effects):
            raise ValidationError("one label per effect is required")
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def dim(self):
        return self.effects[0].shape[0]

    def probabilities(self, rho):
        p = np.array([np.real(np.vdot(e, rho)) for e in self.effects])
        return np.clip(p, 0.0, None)


# ---------------------------------------------------------------------------
# spectral decomposition


def _jacobi_rotate(a, v, p, q):
    apq = a[p, q]
    mag = abs(apq)
    if mag == 0.0:
        return
    phase = apq / mag
    theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # G = diag(phase, 1) @ [[c, s], [-s, c]] acting on coordinates (p, q)
    g = np.array([[phase * c, phase * s], [-s, c]])
    idx = [p, q]
    a[:, idx] = a[:, idx] @ g
    a[idx, :] = g.conj().T @ a[idx, :]
    a[p, q] = a[q, p] = 0.0
    v[:, idx] = v[:, idx] @ g


def jacobi_eigh(h, tol=1e-14, max_sweeps=60):
    """Cyclic Jacobi eigensolver for a Hermitian matrix.

    Deterministic and dependency-free; intended for small matrices and as an
    independent cross-check of the LAPACK path.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    v : ndarray
        Unitary whose columns are the matching eigenvectors.
    """
    a = as_hermitian(h).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(np.triu(a, 1)) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > tol * scale * 1e-3:
                    _jacobi_rotate(a, v, p, q)
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigh(h, method="lapack"):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="jacobi"`` routes through :func:`jacobi_eigh`.
    """
    h = as_hermitian(h)
    if method == "jacobi":
        return jacobi_eigh(h)
    if method != "lapack":
        raise ValidationError(f"unknown eigensolver {method!r}")
    return np.linalg.eigh(h)


def matrix_function(h, func, rtol=SUPPORT_RTOL, on_support=True):
    """Apply ``func`` to the eigenvalues of ``h``.

    With ``on_support`` the function is applied only to eigenvalues above
    ``rtol * max|eigenvalue|`` and the kernel is mapped to zero.
    """
    w, v = np.linalg.eigh(as_hermitian(h))
    if on_support:
        cut = rtol * max(np.max(np.abs(w)), 0.0)
        keep = w > cut
        fw = np.zeros_like(w)
        fw[keep] = func(w[keep])
    else:
        fw = func(w)
    out = (v * fw) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def support_projector(h, rtol=SUPPORT_RTOL):
    w, v = np.linalg.eigh(as_hermitian(h))
    cut = rtol * max(np.max(np.abs(w)), 0.0)
    vs = v[:, w > cut]
    return vs @ vs.conj().T


def support_basis(h, rtol=SUPPORT_RTOL):
    """Orthonormal basis (as columns) of the support of a PSD matrix."""
    w, v = np.linalg.eigh(as_hermitian(h))
    cut = rtol * max(np.max(np.abs(w)), 0.0)
    return v[:, w > cut], w[w > cut]


def matrix_log_on_support(h, base=2.0, psd_tol=PSD_TOL):
    """Logarithm of a PSD operator restricted to its support (zero on the kernel)."""
    h = as_hermitian(h)
    w = np.linalg.eigvalsh(h)
    if w.size and w[0] < -psd_tol:
        raise ValidationError(f"matrix logarithm needs a PSD argument (eigenvalue {w[0]:.3e})")
    return matrix_function(h, lambda x: np.log(x) / np.log(base))


def sqrt_psd(h):
    return matrix_function(h, np.sqrt)


def inv_sqrt_on_support(h):
    return matrix_function(h, lambda x: 1.0 / np.sqrt(x))


def trace_norm(x):
    """Schatten-1 norm; sum of absolute eigenvalues for Hermitian input."""
    x = _as_square(x)
    if hermiticity_residual(x) <= HERMITIAN_TOL * max(1.0, np.max(np.abs(x))):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (x + x.conj().T)))))
    return float(np.sum(np.linalg.svd(x, compute_uv=False)))


def trace_distance(rho, sigma):
    return 0.5 * trace_norm(np.asarray(rho) - np.asarray(sigma))


def positive_part(x):
    return matrix_function(x, lambda w: np.clip(w, 0.0, None), on_support=False)


def negative_part(x):
    """The operator ``min(x, 0)`` (negative semidefinite)."""
    return matrix_function(x, lambda w: np.clip(w, None, 0.0), on_support=False)


# ---------------------------------------------------------------------------
# tensor structure


def tensor(*ops):
    """Kronecker product of any number of operators or vectors."""
    if len(ops) == 1 and isinstance(ops[0], (list, tuple)):
        ops = tuple(ops[0])
    out = np.array([[1.0 + 0j]]) if np.ndim(ops[0]) == 2 else np.array([1.0 + 0j])
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def n_copies(op, n):
    return tensor(*([op] * n))


def partial_trace(rho, dims, keep):
    """Reduced operator on the factors listed in ``keep`` (in increasing order)."""
    rho = _as_square(rho)
    dims = check_dims(dims, rho.shape[0])
    nsys = len(dims)
    keep = sorted(set(int(k) for k in np.atleast_1d(keep)))
    for k in keep:
        if not 0 <= k < nsys:
            raise ValidationError(f"subsystem index {k} out of range for {nsys} factors")
    t = rho.reshape(dims + dims)
    traced = [k for k in range(nsys) if k not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    upper = letters.upper()
    if 2 * nsys > 52:
        raise ValidationError("too many tensor factors")
    row = [letters[k] for k in range(nsys)]
    col = [letters[k] if k in traced else upper[k] for k in range(nsys)]
    out = "".join(letters[k] for k in keep) + "".join(upper[k] for k in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return reduced.reshape(dk, dk)


def partial_transpose(rho, dims, sys):
    """Transpose the factors in ``sys`` (an int or iterable of ints)."""
    rho = _as_square(rho)
    dims = check_dims(dims, rho.shape[0])
    n = len(dims)
    t = rho.reshape(dims + dims)
    axes = list(range(2 * n))
    for k in np.atleast_1d(sys):
        k = int(k)
        if not 0 <= k < n:
            raise ValidationError(f"subsystem index {k} out of range")
        axes[k], axes[n + k] = axes[n + k], axes[k]
    return t.transpose(axes).reshape(rho.shape)


def _check_perm(perm):
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(len(perm))):
        raise ValidationError(f"{perm.tolist()} is not a permutation")
    return perm


def permute_systems(op, dims, perm):
    """Conjugate ``op`` by the permutation unitary moving factor ``i`` to slot ``perm[i]``.

    Works without materialising the permutation matrix. ``dims`` describes the
    input ordering; the output ordering is ``dims`` permuted accordingly.
    """
    op = _as_square(op)
    dims = check_dims(dims, op.shape[0])
    perm = _check_perm(perm)
    if len(perm) != len(dims):
        raise ValidationError("permutation length does not match number of factors")
    inv = np.argsort(perm)
    n = len(dims)
    t = op.reshape(dims + dims)
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(op.shape)


def permutation_operator(perm, local_dim):
    """Unitary ``P`` with ``P (v_1 ⊗ ... ⊗ v_n) = v_{π⁻¹(1)} ⊗ ... ⊗ v_{π⁻¹(n)}``.

    ``perm[i]`` is the image of factor ``i``.
    """
    perm = _check_perm(perm)
    n = len(perm)
    dim = local_dim**n
    basis = np.eye(dim, dtype=complex).reshape((local_dim,) * n + (dim,))
    inv = np.argsort(perm)
    moved = basis.transpose(list(inv) + [n])
    return moved.reshape(dim, dim)


def symmetrize(op, local_dim, n):
    """Average of ``P op P†`` over all permutations of ``n`` identical factors."""
    from itertools import permutations

    dims = (local_dim,) * n
    perms = list(permutations(range(n)))
    acc = np.zeros_like(np.asarray(op, dtype=complex))
    for p in perms:
        acc += permute_systems(op, dims, p)
    return acc / len(perms)


# ---------------------------------------------------------------------------
# standard states and random sampling


def ket(index, dim):
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec):
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def ebit():
    """The two-qubit maximally entangled state (|00> + |11>)/sqrt(2)."""
    phi = (tensor(ket(0, 2), ket(0, 2)) + tensor(ket(1, 2), ket(1, 2))) / np.sqrt(2)
    return projector(phi)


def maximally_mixed(dim):
    return np.eye(dim, dtype=complex) / dim


def dephase(rho):
    """Diagonal part of ``rho`` in the computational basis."""
    return np.diag(np.diag(np.asarray(rho))).astype(complex)


def random_unitary(dim, rng):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim, rng, rank=None):
    """Random state from the induced (Hilbert-Schmidt when ``rank=dim``) measure."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def commutator_norm(a, b):
    return float(np.linalg.norm(a @ b - b @ a))


def spectrum_groups(w, atol=1e-10):
    """Group sorted eigenvalues into clusters separated by more than ``atol``."""
    w = np.asarray(w)
    order = np.argsort(w, kind="stable")
    groups, current = [], [order[0]]
    for prev, idx in zip(order[:-1], order[1:]):
        if w[idx] - w[prev] > atol:
            groups.append(current)
            current = [idx]
        else:
            current.append(idx)
    groups.append(current)
    return groups


def distinct_eigenvalue_count(h, atol=1e-10):
    return len(spectrum_groups(np.linalg.eigvalsh(as_hermitian(h)), atol))


def system_dims(local_dims: Sequence[int], n: int):
    """Tensor-factor dimensions of ``n`` copies of a system with ``local_dims``."""
    return tuple(local_dims) * n
