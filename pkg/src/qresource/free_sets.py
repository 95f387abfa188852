"""Free-state families exposed through membership tests and linear oracles.

A family describes the sets ``M_n`` of free states on ``n`` copies of a base
system. Every family offers

* ``linear_oracle(g, n)``: a free state maximising ``Tr(g σ)``,
* ``membership(σ, n)``: one of ``inside`` / ``outside`` / ``undecided``,
* ``canonical_full_rank(n)``: the i.i.d. full-rank free state.

Members sampled by :meth:`FreeStateFamily.sample` carry a
:class:`Decomposition` (convex weights over pure product atoms). Partial
traces, tensor products and copy permutations act on decompositions in closed
form, which is what lets :func:`axiom_check` certify membership at levels where
no exact test exists.
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from scipy.optimize import least_squares

from .errors import ValidationError
from .linalg import (
    as_density,
    check_dims,
    is_psd,
    maximally_mixed,
    n_copies,
    partial_trace,
    partial_transpose,
    permute_systems,
    projector,
    random_density,
    random_pure,
    tensor,
)
from .optim import fw_distance

ORACLE_RESTARTS = 32
ORACLE_TOL = 1e-10
FW_MEMBERSHIP_TOL = 1e-6
PPT_TOL = 1e-9


class Membership(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class Decomposition:
    """Convex combination of pure product atoms.

    ``atoms[i]`` is a tuple of unit vectors, one per tensor factor of the level
    the decomposition lives on.
    """

    weights: np.ndarray
    atoms: tuple

    def state(self):
        out = None
        for w, factors in zip(self.weights, self.atoms):
            term = w * projector(tensor(*factors))
            out = term if out is None else out + term
        return out

    def mix(self, other, t):
        """The decomposition of ``(1 - t) self + t other``."""
        weights = np.concatenate([(1 - t) * self.weights, t * other.weights])
        return Decomposition(weights, self.atoms + other.atoms)

    def drop_last(self, count):
        """Trace out the last ``count`` factors of every atom."""
        return Decomposition(self.weights, tuple(a[: len(a) - count] for a in self.atoms))

    def product(self, other):
        weights = np.outer(self.weights, other.weights).reshape(-1)
        atoms = tuple(a + b for a in self.atoms for b in other.atoms)
        return Decomposition(weights, atoms)

    def permute(self, perm):
        """Move factor ``i`` of every atom to slot ``perm[i]``."""
        inv = np.argsort(perm)
        return Decomposition(self.weights, tuple(tuple(a[j] for j in inv) for a in self.atoms))

    def condition(self, effect, count):
        """Apply the effect to the last ``count`` factors and discard them.

        Returns the unnormalised decomposition of ``Tr_last[(I ⊗ E) ρ]``.
        """
        weights = []
        for w, a in zip(self.weights, self.atoms):
            tail = tensor(*a[len(a) - count :])
            weights.append(w * float(np.real(np.vdot(tail, effect @ tail))))
        return Decomposition(np.array(weights), tuple(a[: len(a) - count] for a in self.atoms))


# ---------------------------------------------------------------------------
# best product state


def _to_front(g, dims, j):
    """Reshape ``g`` as ``(d_j, rest, d_j, rest)`` with factor ``j`` moved first."""
    n = len(dims)
    perm = [0] * n
    perm[j] = 0
    slot = 1
    for i in range(n):
        if i != j:
            perm[i] = slot
            slot += 1
    moved = permute_systems(g, dims, perm)
    rest = int(np.prod(dims)) // dims[j]
    return moved.reshape(dims[j], rest, dims[j], rest)


def _batched_kron(vecs):
    """Row-wise Kronecker product of a list of ``(R, d_i)`` arrays."""
    out = vecs[0]
    for v in vecs[1:]:
        out = (out[:, :, None] * v[:, None, :]).reshape(out.shape[0], -1)
    return out


def best_product_state(g, dims, restarts=ORACLE_RESTARTS, seed=0, tol=ORACLE_TOL, max_sweeps=200):
    """Maximise ``<v|g|v>`` over unit product vectors ``v = v_1 ⊗ ... ⊗ v_k``.

    Alternates leading-eigenvector updates of one factor at a time. One start
    uses the leading eigenvectors of the reduced operators of the top
    eigenvector of ``g``; the remaining ``restarts`` starts are Haar random.

    Returns
    -------
    value : float
    factors : tuple of ndarray
    """
    g = np.asarray(g, dtype=complex)
    dims = check_dims(dims, g.shape[0])
    k = len(dims)
    if k == 1:
        w, v = np.linalg.eigh(g)
        return float(w[-1]), (v[:, -1],)
    rng = np.random.default_rng(seed)
    top = np.linalg.eigh(g)[1][:, -1]
    top_state = np.outer(top, top.conj())
    starts = [[np.linalg.eigh(partial_trace(top_state, dims, [j]))[1][:, -1] for j in range(k)]]
    for _ in range(restarts):
        starts.append([random_pure(d, rng) for d in dims])
    factors = [np.array([s[j] for s in starts]) for j in range(k)]
    blocks = [_to_front(g, dims, j) for j in range(k)]
    prev = np.full(len(starts), -np.inf)
    for _ in range(max_sweeps):
        for j in range(k):
            others = [factors[i] for i in range(k) if i != j]
            phi = _batched_kron(others)
            local = np.einsum("aibj,ri,rj->rab", blocks[j], phi.conj(), phi)
            local = 0.5 * (local + np.conj(np.swapaxes(local, 1, 2)))
            w, v = np.linalg.eigh(local)
            factors[j] = v[:, :, -1]
            value = w[:, -1]
        if np.max(value - prev) < tol:
            break
        prev = value
    best = int(np.argmax(np.round(value, 12)))
    out = []
    for j in range(k):
        vec = factors[j][best]
        # fix the global phase so the output is deterministic
        idx = int(np.argmax(np.abs(vec) > 1e-8))
        vec = vec * np.exp(-1j * np.angle(vec[idx]))
        out.append(vec / np.linalg.norm(vec))
    return float(value[best]), tuple(out)


def ppt_violation(rho, dims, part):
    """Most negative eigenvalue of the partial transpose over the factors in ``part``."""
    return float(np.linalg.eigvalsh(partial_transpose(rho, dims, part))[0])


def _bipartitions(k):
    """Non-trivial bipartitions of ``k`` factors, each listed once."""
    for r in range(1, k // 2 + 1):
        for part in itertools.combinations(range(k), r):
            if 2 * r == k and 0 not in part:
                continue
            yield part


# ---------------------------------------------------------------------------
# families


class FreeStateFamily:
    """Base class; concrete families override the oracle and the exact test."""

    name = "family"
    decomposes = True

    def __init__(self, local_dims):
        self.local_dims = tuple(int(d) for d in local_dims)
        self.parties = len(self.local_dims)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    # --- shapes
    def dims(self, n):
        return self.local_dims * n

    def dim(self, n):
        return int(np.prod(self.dims(n)))

    def copy_perm(self, perm):
        """Expand a permutation of copies into one of tensor factors."""
        p = self.parties
        return [perm[c] * p + i for c in range(len(perm)) for i in range(p)]

    # --- capabilities
    def canonical_full_rank(self, n):
        return maximally_mixed(self.dim(n))

    def canonical_decomposition(self, n):
        """Decomposition of the canonical state (uniform over a product basis)."""
        eyes = [np.eye(d, dtype=complex) for d in self.dims(n)]
        atoms = tuple(
            tuple(eyes[j][i] for j, i in enumerate(idx)) for idx in itertools.product(*[range(d) for d in self.dims(n)])
        )
        return Decomposition(np.full(len(atoms), 1.0 / len(atoms)), atoms)

    def oracle_atom(self, g, n, seed=0):
        raise NotImplementedError

    def linear_oracle(self, g, n, seed=0):
        """A free state maximising ``Re Tr(g σ)`` over the level-``n`` set."""
        g = np.asarray(g, dtype=complex)
        if g.shape != (self.dim(n), self.dim(n)):
            raise ValidationError(f"oracle direction has shape {g.shape}, expected dim {self.dim(n)}")
        g = 0.5 * (g + g.conj().T)
        return projector(tensor(*self.oracle_atom(g, n, seed)))

    def is_atom(self, factors, n, tol=1e-9):
        dims = self.dims(n)
        if len(factors) != len(dims):
            return False
        return all(f.shape == (d,) and abs(np.linalg.norm(f) - 1) <= tol for f, d in zip(factors, dims))

    def ppt_exact(self, n):
        """True when level ``n`` is exactly the two-party partial-transpose cone."""
        return False

    def exact_membership(self, sigma, n, tol):
        """Exact decision where available; ``None`` when undecidable."""
        return None

    def witness(self, sigma, n, tol):
        """A certificate of non-membership (e.g. a negative partial transpose), or None."""
        return None

    def membership(self, sigma, n, tol=1e-9, certificate=None):
        sigma = np.asarray(sigma, dtype=complex)
        if sigma.shape != (self.dim(n), self.dim(n)):
            raise ValidationError(f"state has shape {sigma.shape}, expected dim {self.dim(n)}")
        if np.max(np.abs(sigma - sigma.conj().T)) > tol or not is_psd(sigma, tol):
            return Membership.OUTSIDE
        if abs(np.trace(sigma).real - 1) > tol:
            return Membership.OUTSIDE
        verdict = self.exact_membership(sigma, n, tol)
        if verdict is not None:
            return verdict
        if certificate is not None and self.verify_certificate(sigma, n, certificate, tol):
            return Membership.INSIDE
        if self.witness(sigma, n, tol) is not None:
            return Membership.OUTSIDE
        return Membership.UNDECIDED

    def verify_certificate(self, sigma, n, certificate, tol=1e-9):
        w = np.asarray(certificate.weights)
        if np.any(w < -tol) or abs(np.sum(w) - 1) > tol:
            return False
        if not all(self.is_atom(a, n) for a in certificate.atoms):
            return False
        return float(np.max(np.abs(certificate.state() - sigma))) <= tol

    def random_atom(self, n, rng):
        return tuple(random_pure(d, rng) for d in self.dims(n))

    def sample(self, n, rng, atoms=None, oracle_atoms=0):
        """A random member of ``M_n`` together with its decomposition.

        ``atoms`` random atoms (default: uniform in 1..4) plus ``oracle_atoms``
        linear-oracle outputs for random directions, mixed with Dirichlet weights.
        """
        count = int(rng.integers(1, 5)) if atoms is None else atoms
        chosen = [self.random_atom(n, rng) for _ in range(count)]
        for _ in range(oracle_atoms):
            g = random_density(self.dim(n), rng) - maximally_mixed(self.dim(n))
            chosen.append(self.oracle_atom(g, n, seed=int(rng.integers(2**31))))
        weights = rng.dirichlet(np.ones(len(chosen)))
        dec = Decomposition(weights, tuple(chosen))
        return dec.state(), dec

    def fw_distance(self, sigma, n, seed=0, tol=FW_MEMBERSHIP_TOL, max_iter=60, polish=1e-9):
        """Frobenius distance from ``sigma`` to the level-``n`` set via Frank-Wolfe.

        Returns ``(distance, nearest_state)``; the distance is an upper bound
        (the nearest point found is a genuine member).
        """
        sigma = np.asarray(sigma, dtype=complex)
        counter = itertools.count()
        factors_of = {}

        def oracle(direction):
            factors = self.oracle_atom(0.5 * (direction + direction.conj().T), n, seed=seed + next(counter))
            atom = projector(tensor(*factors))
            factors_of[atom.tobytes()] = factors
            return atom

        dist, res = fw_distance(sigma, oracle, [self.canonical_full_rank(n)], tol=polish * polish, max_iter=max_iter)
        if dist <= polish or not self.decomposes:
            return dist, res.point
        # FW converges sublinearly on curved faces; polish the active atoms jointly
        seeds = []
        canonical = self.canonical_decomposition(n)
        for atom, w in zip(res.atoms, res.weights):
            factors = factors_of.get(atom.tobytes())
            if factors is not None:
                seeds.append(tuple(w ** (0.5 / len(factors)) * f for f in factors))
            elif canonical is not None:
                for cw, cf in zip(canonical.weights, canonical.atoms):
                    seeds.append(tuple((w * cw) ** (0.5 / len(cf)) * f for f in cf))
        if not seeds:
            return dist, res.point
        best, best_point = dist, res.point
        rng = np.random.default_rng(seed)
        stalls = 0
        for _ in range(12):
            point, seeds = _refine_product_atoms(sigma, seeds, self.dims(n))
            refined = float(np.linalg.norm(point - sigma))
            progress = refined < 0.5 * best
            if refined < best:
                best, best_point = refined, point
            if best <= polish:
                break
            if not progress:
                # escape a poor local fit by adding a few light random atoms
                stalls += 1
                if stalls > 4:
                    break
                seeds = seeds + [tuple(1e-2 * random_pure(d, rng) for d in self.dims(n)) for _ in range(2)]
        return best, best_point


def _refine_product_atoms(target, seeds, dims, max_nfev=200):
    """Locally minimise ``||Σ_i |v_i><v_i| - target||_F`` over product vectors ``v_i``.

    Each ``v_i = x_i1 ⊗ ... ⊗ x_ik`` is unnormalised so its norm carries the
    weight. The problem has zero residual when ``target`` is a product mixture,
    so a Gauss-Newton type solver converges quickly. Returns the normalised
    mixture, which is a genuine product mixture.
    """
    dims = tuple(dims)
    k = len(dims)
    m = len(seeds)
    size = sum(dims)
    offsets = np.cumsum((0,) + dims)
    eyes = [np.eye(d, dtype=complex) for d in dims]

    def unpack(x):
        z = (x[: m * size] + 1j * x[m * size :]).reshape(m, size)
        return [[z[i, offsets[j] : offsets[j + 1]] for j in range(k)] for i in range(m)]

    def residual(x):
        tau = sum(np.outer(v, v.conj()) for v in (tensor(*f) for f in unpack(x)))
        r = (tau - target).reshape(-1)
        return np.concatenate([r.real, r.imag])

    def jacobian(x):
        cols_re, cols_im = [], []
        for f in unpack(x):
            v = tensor(*f)
            for j in range(k):
                for c in range(dims[j]):
                    u = tensor(*[eyes[j][c] if i == j else f[i] for i in range(k)])
                    uv = np.outer(u, v.conj())
                    cols_re.append((uv + uv.conj().T).reshape(-1))
                    cols_im.append((1j * uv - 1j * uv.conj().T).reshape(-1))
        cols = np.array(cols_re + cols_im).T
        return np.concatenate([cols.real, cols.imag])

    z0 = np.concatenate([f for s in seeds for f in s])
    x0 = np.concatenate([z0.real, z0.imag])
    res = least_squares(residual, x0, jac=jacobian, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    factors = unpack(res.x)
    tau = sum(np.outer(v, v.conj()) for v in (tensor(*f) for f in factors))
    return tau / np.trace(tau).real, [tuple(f) for f in factors]


class CoherenceFamily(FreeStateFamily):
    """Incoherent states: diagonal in the computational basis of each copy."""

    def __init__(self, dim):
        if int(dim) < 2:
            raise ValidationError("coherence family needs dim >= 2")
        super().__init__((int(dim),))
        self.name = f"coherence:{int(dim)}"

    def oracle_atom(self, g, n, seed=0):
        diag = np.real(np.diag(g))
        idx = int(np.argmax(diag))
        digits = np.unravel_index(idx, self.dims(n))
        return tuple(np.eye(d, dtype=complex)[i] for d, i in zip(self.dims(n), digits))

    def exact_membership(self, sigma, n, tol):
        off = sigma - np.diag(np.diag(sigma))
        return Membership.INSIDE if np.max(np.abs(off), initial=0.0) <= tol else Membership.OUTSIDE

    def witness(self, sigma, n, tol):
        off = sigma - np.diag(np.diag(sigma))
        i, j = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        return (int(i), int(j)) if abs(off[i, j]) > tol else None

    def is_atom(self, factors, n, tol=1e-9):
        if not super().is_atom(factors, n, tol):
            return False
        return all(np.sum(np.abs(f) > tol) == 1 for f in factors)

    def random_atom(self, n, rng):
        return tuple(np.eye(d, dtype=complex)[rng.integers(d)] for d in self.dims(n))

    def fw_distance(self, sigma, n, seed=0, tol=FW_MEMBERSHIP_TOL, max_iter=500):
        sigma = np.asarray(sigma, dtype=complex)
        diag = np.diag(np.clip(np.real(np.diag(sigma)), 0, None)).astype(complex)
        diag /= np.trace(diag).real
        return float(np.linalg.norm(sigma - diag)), diag


class RankDeficientCoherence(CoherenceFamily):
    """Negative control: diagonal states with a rank-one "canonical" state.

    Its canonical state ``|0><0|^{⊗n}`` is not full rank, so the full-rank
    axiom must fail.
    """

    def __init__(self, dim):
        super().__init__(dim)
        self.name = f"coherence-rank-deficient:{int(dim)}"

    def canonical_full_rank(self, n):
        e0 = np.zeros((self.local_dims[0],) * 2, dtype=complex)
        e0[0, 0] = 1.0
        return n_copies(e0, n)

    def canonical_decomposition(self, n):
        atom = tuple(np.eye(d, dtype=complex)[0] for d in self.dims(n))
        return Decomposition(np.ones(1), (atom,))


class ProductFamily(FreeStateFamily):
    """Fully product ("pseudo-entanglement") states.

    ``M_n`` is the convex hull of ``2n``-fold products of local pure states on
    ``(A B)^{⊗n}``; at ``n = 1`` it is the separable set of ``A:B``.
    """

    def __init__(self, dim_a, dim_b):
        super().__init__((int(dim_a), int(dim_b)))
        self.name = f"product:{int(dim_a)},{int(dim_b)}"

    def oracle_atom(self, g, n, seed=0):
        return best_product_state(g, self.dims(n), seed=seed)[1]

    def ppt_exact(self, n):
        return n == 1 and self.dim(1) <= 6

    def exact_membership(self, sigma, n, tol):
        if self.ppt_exact(n):
            return Membership.INSIDE if ppt_violation(sigma, self.dims(1), [0]) >= -tol else Membership.OUTSIDE
        return None

    def witness(self, sigma, n, tol):
        dims = self.dims(n)
        for part in _bipartitions(len(dims)):
            lam = ppt_violation(sigma, dims, list(part))
            if lam < -max(tol, PPT_TOL):
                return {"transposed": list(part), "eigenvalue": lam}
        return None


class SeparableFamily(FreeStateFamily):
    """States separable across the ``A^n : B^n`` cut.

    Tensor factors are ordered ``A_1 B_1 A_2 B_2 ...``. Membership is decided
    exactly by the partial transpose when ``dim_a * dim_b <= 6`` at ``n = 1``;
    otherwise only a failing partial transpose decides (``outside``).
    """

    decomposes = False

    def __init__(self, dim_a=2, dim_b=2):
        super().__init__((int(dim_a), int(dim_b)))
        self.name = "sep2x2" if (dim_a, dim_b) == (2, 2) else f"sep:{int(dim_a)},{int(dim_b)}"

    def cut_perm(self, n):
        """Factor permutation taking ``A_1 B_1 ... A_n B_n`` to ``A_1..A_n B_1..B_n``."""
        return [i if j == 0 else n + i for i in range(n) for j in range(2)]

    def oracle_atom(self, g, n, seed=0):
        perm = self.cut_perm(n)
        grouped = permute_systems(g, self.dims(n), perm)
        da, db = self.local_dims[0] ** n, self.local_dims[1] ** n
        _, (a, b) = best_product_state(grouped, (da, db), seed=seed)
        return (a, b)

    def linear_oracle(self, g, n, seed=0):
        g = np.asarray(g, dtype=complex)
        if g.shape != (self.dim(n), self.dim(n)):
            raise ValidationError(f"oracle direction has shape {g.shape}, expected dim {self.dim(n)}")
        g = 0.5 * (g + g.conj().T)
        a, b = self.oracle_atom(g, n, seed)
        grouped = projector(tensor(a, b))
        return permute_systems(grouped, (self.local_dims[0],) * n + (self.local_dims[1],) * n, np.argsort(self.cut_perm(n)))

    def ppt_exact(self, n):
        return n == 1 and self.dim(1) <= 6

    def exact_membership(self, sigma, n, tol):
        if self.ppt_exact(n):
            return Membership.INSIDE if ppt_violation(sigma, self.dims(1), [0]) >= -tol else Membership.OUTSIDE
        return None

    def witness(self, sigma, n, tol):
        lam = ppt_violation(sigma, self.dims(n), list(range(0, 2 * n, 2)))
        return {"transposed": "A", "eigenvalue": lam} if lam < -max(tol, PPT_TOL) else None

    def verify_certificate(self, sigma, n, certificate, tol=1e-9):
        if n != 1:
            return False
        return super().verify_certificate(sigma, n, certificate, tol)

    def canonical_decomposition(self, n):
        if n != 1:
            return None
        return super().canonical_decomposition(n)

    def random_atom(self, n, rng):
        if n != 1:
            raise ValidationError("separable-family atoms are only sampled at level 1")
        return super().random_atom(n, rng)


def block_reorder(rho, dim_a, dim_b, k):
    """Regroup ``A_1 B_1 ... A_k B_k`` into ``(A_1..A_k)(B_1..B_k)`` ordering."""
    dims = (dim_a, dim_b) * k
    perm = [i if j == 0 else k + i for i in range(k) for j in range(2)]
    return permute_systems(rho, dims, perm)


class BlockFamily(ProductFamily):
    """Product family on blocks: ``A -> A_1..A_k`` and ``B -> B_1..B_k``.

    States must be given with each block grouped as ``(A_1..A_k)(B_1..B_k)``;
    use :func:`block_reorder` to convert from interleaved ordering.
    """

    def __init__(self, dim_a, dim_b, k):
        if int(k) < 1:
            raise ValidationError("block size k must be >= 1")
        super().__init__(int(dim_a) ** int(k), int(dim_b) ** int(k))
        self.base_dims = (int(dim_a), int(dim_b))
        self.k = int(k)
        self.name = f"product-block:{int(dim_a)},{int(dim_b)},{int(k)}"


class IidFamily(FreeStateFamily):
    """The singleton sets ``M_n = {σ^{⊗n}}`` for a fixed full-rank ``σ``."""

    decomposes = False

    def __init__(self, sigma, name="iid"):
        sigma = as_density(sigma, name="sigma")
        super().__init__((sigma.shape[0],))
        self.sigma = sigma
        self.name = name

    def canonical_full_rank(self, n):
        return n_copies(self.sigma, n)

    def canonical_decomposition(self, n):
        return None

    def linear_oracle(self, g, n, seed=0):
        return n_copies(self.sigma, n)

    def exact_membership(self, sigma, n, tol):
        close = np.max(np.abs(sigma - n_copies(self.sigma, n))) <= tol
        return Membership.INSIDE if close else Membership.OUTSIDE


def coherence_family(dim):
    return CoherenceFamily(dim)


def separable_two_qubit_family():
    return SeparableFamily(2, 2)


def pseudo_entanglement_family(dim_a, dim_b):
    return ProductFamily(dim_a, dim_b)


def block_family(base, k):
    if not isinstance(base, ProductFamily) or isinstance(base, BlockFamily):
        raise ValidationError("block_family expects a pseudo-entanglement family")
    return BlockFamily(base.local_dims[0], base.local_dims[1], k)


def family_from_spec(spec):
    """Parse ``coherence:d``, ``sep2x2``, ``product:dA,dB`` or ``product-block:dA,dB,k``."""
    spec = spec.strip()
    try:
        if spec == "sep2x2":
            return separable_two_qubit_family()
        kind, _, args = spec.partition(":")
        vals = [int(x) for x in args.split(",")] if args else []
        if kind == "coherence" and len(vals) == 1:
            return coherence_family(vals[0])
        if kind == "product" and len(vals) == 2:
            return pseudo_entanglement_family(*vals)
        if kind == "product-block" and len(vals) == 3:
            return block_family(pseudo_entanglement_family(vals[0], vals[1]), vals[2])
    except ValueError as exc:
        raise ValidationError(f"bad family spec {spec!r}: {exc}") from None
    raise ValidationError(f"unknown family spec {spec!r}")


# ---------------------------------------------------------------------------
# axiom and compatibility checks

AXIOMS = ("convexity", "full_rank", "partial_trace", "tensor_product", "permutation")


@dataclass
class AxiomVerdict:
    verdict: str = "untested"
    checked: int = 0
    undecided: int = 0
    witness: object = None
    detail: str = ""

    def record(self, ok, witness=None, detail=""):
        if ok is None:
            self.undecided += 1
            return
        self.checked += 1
        if ok:
            if self.verdict == "untested":
                self.verdict = "pass"
        elif self.verdict != "fail":
            self.verdict = "fail"
            self.witness = witness
            self.detail = detail


@dataclass
class AxiomReport:
    family: str
    n_range: tuple
    samples: int
    axioms: dict = field(default_factory=lambda: {a: AxiomVerdict() for a in AXIOMS})

    @property
    def all_pass(self):
        return all(v.verdict == "pass" for v in self.axioms.values())

    def summary(self):
        return {
            name: {"verdict": v.verdict, "checked": v.checked, "undecided": v.undecided, "detail": v.detail}
            for name, v in self.axioms.items()
        }


def _decide(family, state, n, dec, tol):
    verdict = family.membership(state, n, tol=tol, certificate=dec if family.decomposes else None)
    if verdict is Membership.UNDECIDED:
        return None
    return verdict is Membership.INSIDE


def axiom_check(family, n_max, samples, seed=0, tol=1e-9):
    """Sample members and test the five structural axioms on them.

    Each sample is a random mixture of random atoms and linear-oracle outputs
    at a random level ``n <= n_max``. The transformed states are computed on
    the matrices themselves; membership at the new level is then decided by
    the family's exact test or by the transformed decomposition.
    """
    if n_max < 2:
        raise ValidationError("axiom_check needs n_max >= 2")
    rng = np.random.default_rng(seed)
    report = AxiomReport(family.name, (1, n_max), samples)
    ax = report.axioms
    p = family.parties

    for n in range(1, n_max + 1):
        c = family.canonical_full_rank(n)
        lam = float(np.linalg.eigvalsh(c)[0])
        iid = float(np.max(np.abs(c - n_copies(family.canonical_full_rank(1), n))))
        inside = _decide(family, c, n, family.canonical_decomposition(n), tol)
        ok = lam > 1e-12 and iid <= 1e-12 and inside is not False
        ax["full_rank"].record(ok, witness=c, detail=f"n={n}: min eigenvalue {lam:.3g}, iid deviation {iid:.3g}")

    levels = [n for n in range(1, n_max + 1) if family.decomposes or n == 1]
    for _ in range(samples):
        n = int(rng.choice(levels))
        s1, d1 = family.sample(n, rng, oracle_atoms=int(rng.integers(0, 2)))
        s2, d2 = family.sample(n, rng)
        t = float(rng.uniform())
        mixed = (1 - t) * s1 + t * s2
        ok = _decide(family, mixed, n, d1.mix(d2, t), tol)
        ax["convexity"].record(ok, witness=mixed, detail=f"mixture at n={n} rejected")

        if not family.decomposes:
            continue
        if n >= 2:
            reduced = partial_trace(s1, family.dims(n), list(range((n - 1) * p)))
            ok = _decide(family, reduced, n - 1, d1.drop_last(p), tol)
            ax["partial_trace"].record(ok, witness=reduced, detail=f"reduction {n}->{n - 1} rejected")
        if n < n_max:
            m = int(rng.integers(1, n_max - n + 1))
            s3, d3 = family.sample(m, rng)
            prod = tensor(s1, s3)
            ok = _decide(family, prod, n + m, d1.product(d3), tol)
            ax["tensor_product"].record(ok, witness=prod, detail=f"product {n}+{m} rejected")
        perm = list(rng.permutation(n))
        fperm = family.copy_perm(perm)
        moved = permute_systems(s1, family.dims(n), fperm)
        ok = _decide(family, moved, n, d1.permute(fperm), tol)
        ax["permutation"].record(ok, witness=moved, detail=f"permutation {perm} rejected")
    return report


@dataclass
class CompatibilityReport:
    family: str
    n: int
    k: int
    distances: list
    traces: list
    tol: float

    @property
    def max_distance(self):
        return max(self.distances) if self.distances else 0.0

    @property
    def passed(self):
        return all(d <= self.tol for d in self.distances)


def compatibility_check(family, n, k, samples, seed=0, tol=FW_MEMBERSHIP_TOL):
    """Conditioning members of ``M_{n+k}`` on effects must land back in ``M_n``.

    For sampled ``ρ ∈ M_{n+k}`` and ``E >= 0`` on the last ``k`` copies, the
    operator ``Tr_last[(I ⊗ E) ρ]`` is normalised and its Frank-Wolfe distance
    to ``M_n`` recorded. The first sample uses ``E = I``.
    """
    if n < 1 or k < 1:
        raise ValidationError("compatibility_check needs n, k >= 1")
    if not family.decomposes:
        raise ValidationError("compatibility_check needs a family with product decompositions")
    rng = np.random.default_rng(seed)
    dims = family.dims(n + k)
    keep = list(range(n * family.parties))
    d_tail = family.dim(k)
    distances, traces = [], []
    for i in range(samples):
        rho, _ = family.sample(n + k, rng)
        if i == 0:
            effect = np.eye(d_tail, dtype=complex)
        else:
            effect = random_density(d_tail, rng) * float(rng.uniform(0.1, 1.0)) * d_tail
        full = tensor(np.eye(family.dim(n), dtype=complex), effect) @ rho
        cond = partial_trace(full, dims, keep)
        cond = 0.5 * (cond + cond.conj().T)
        tr = float(np.trace(cond).real)
        traces.append(tr)
        if tr <= 1e-14:
            distances.append(0.0)
            continue
        dist, _ = family.fw_distance(cond / tr, n, seed=int(rng.integers(2**31)), tol=tol)
        distances.append(float(dist))
    return CompatibilityReport(family.name, n, k, distances, traces, tol)


__all__ = [
    "AXIOMS",
    "AxiomReport",
    "AxiomVerdict",
    "BlockFamily",
    "CoherenceFamily",
    "CompatibilityReport",
    "Decomposition",
    "FreeStateFamily",
    "IidFamily",
    "Membership",
    "ProductFamily",
    "RankDeficientCoherence",
    "SeparableFamily",
    "axiom_check",
    "best_product_state",
    "block_family",
    "block_reorder",
    "coherence_family",
    "compatibility_check",
    "family_from_spec",
    "ppt_violation",
    "pseudo_entanglement_family",
    "separable_two_qubit_family",
]
