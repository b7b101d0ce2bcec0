"""Finite-dimensional von Neumann algebras as multimatrix algebras.

``A = M_{n_1} + ... + M_{n_k}`` is stored as the ordered tuple of block sizes.
The standard form ``L^2 A`` is the algebra itself with the blockwise
(unnormalised) trace pairing; a vector is the concatenation of the row-major
vectorisations of its blocks.  With that convention

====================  ==============================
left action  ``a``    ``kron(a_i, I)`` on block ``i``
right action ``b``    ``kron(I, b_i^T)`` on block ``i``
``J``                 ``vec X -> vec X^*``
====================  ==============================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlgebraMismatch,
    DimensionMismatch,
    NotProjection,
    NotUnital,
    NotUnitary,
    ShapeMismatch,
    WStarError,
)
from .linalg import (
    DEFAULT_TOL,
    AntiUnitary,
    as_matrix,
    block_diag,
    hermitian_eig,
    intertwiner_basis,
    is_hermitian,
    is_projection,
    is_unitary,
    range_isometry,
    scale_of,
)

__all__ = [
    "MultiMatrixAlgebra",
    "AlgebraElement",
    "L2Space",
    "AlgebraHom",
    "l2_standard_form",
    "commutant",
    "bicommutant_check",
    "generated_algebra",
    "corner",
    "corner_vanishing",
    "l2_of_inner_automorphism",
    "spatial_tensor",
    "product",
    "split_homomorphism",
    "image_restriction",
    "positive_cone_member",
    "transpose_permutation",
]


@dataclass(frozen=True)
class MultiMatrixAlgebra:
    """``M_{n_1} + ... + M_{n_k}``; equality is equality of ordered blocks."""

    blocks: tuple

    def __init__(self, blocks: Iterable[int]):
        b = tuple(int(n) for n in blocks)
        if any(n < 1 for n in b):
            raise DimensionMismatch(f"block sizes must be positive, got {b}")
        object.__setattr__(self, "blocks", b)

    def __len__(self):
        return len(self.blocks)

    def __repr__(self):
        return f"MultiMatrixAlgebra({list(self.blocks)})"

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.blocks)

    @property
    def l2_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([n * n for n in self.blocks])]).astype(int)

    def element(self, blocks) -> "AlgebraElement":
        return AlgebraElement(self, blocks)

    def identity(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.eye(n) for n in self.blocks])

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.zeros((n, n)) for n in self.blocks])

    def matrix_unit(self, i: int, r: int, c: int) -> "AlgebraElement":
        blocks = [np.zeros((n, n), complex) for n in self.blocks]
        blocks[i][r, c] = 1.0
        return AlgebraElement(self, blocks)

    def basis(self) -> list:
        """All matrix units, block by block, row-major inside a block."""
        return [
            self.matrix_unit(i, r, c)
            for i, n in enumerate(self.blocks)
            for r in range(n)
            for c in range(n)
        ]

    def central_unit(self, i: int) -> "AlgebraElement":
        blocks = [np.zeros((n, n)) for n in self.blocks]
        blocks[i] = np.eye(self.blocks[i])
        return AlgebraElement(self, blocks)

    def generators(self) -> list:
        """Two elements whose *-closure is the whole algebra.

        A diagonal element with globally distinct entries (its polynomials are
        the diagonal matrix units) and the superdiagonal shift of every block.
        """
        diag, shift = [], []
        t = 1
        for n in self.blocks:
            diag.append(np.diag(np.arange(t, t + n, dtype=float)))
            t += n
            shift.append(np.eye(n, k=1))
        return [AlgebraElement(self, diag), AlgebraElement(self, shift)]

    def from_l2(self, vec) -> "AlgebraElement":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.size != self.dim:
            raise DimensionMismatch(f"vector has length {vec.size}, expected {self.dim}")
        off = self.l2_offsets
        return AlgebraElement(
            self, [vec[off[i]:off[i + 1]].reshape(n, n) for i, n in enumerate(self.blocks)]
        )


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: MultiMatrixAlgebra
    block_data: tuple

    def __init__(self, algebra: MultiMatrixAlgebra, blocks: Sequence):
        if len(blocks) != len(algebra.blocks):
            raise ShapeMismatch(
                f"{len(blocks)} blocks given for an algebra with {len(algebra.blocks)}"
            )
        data = []
        for b, n in zip(blocks, algebra.blocks):
            m = as_matrix(b) if np.size(b) else np.zeros((n, n), complex)
            if m.shape != (n, n):
                raise ShapeMismatch(f"block of shape {m.shape}, expected {(n, n)}")
            data.append(m)
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "block_data", tuple(data))

    def _same(self, other):
        if not isinstance(other, AlgebraElement) or other.algebra != self.algebra:
            raise AlgebraMismatch("elements of different algebras")

    def __add__(self, other):
        self._same(other)
        return AlgebraElement(self.algebra, [a + b for a, b in zip(self.block_data, other.block_data)])

    def __sub__(self, other):
        self._same(other)
        return AlgebraElement(self.algebra, [a - b for a, b in zip(self.block_data, other.block_data)])

    def __neg__(self):
        return AlgebraElement(self.algebra, [-a for a in self.block_data])

    def __mul__(self, scalar):
        return AlgebraElement(self.algebra, [scalar * a for a in self.block_data])

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._same(other)
        return AlgebraElement(self.algebra, [a @ b for a, b in zip(self.block_data, other.block_data)])

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, [a.conj().T for a in self.block_data])

    @property
    def H(self):
        return self.adjoint()

    def norm(self) -> float:
        """Operator norm: the largest singular value over all blocks."""
        return max((float(np.linalg.norm(a, 2)) for a in self.block_data if a.size), default=0.0)

    def frobenius(self) -> float:
        return float(np.sqrt(sum(np.linalg.norm(a) ** 2 for a in self.block_data)))

    def dense(self) -> np.ndarray:
        return block_diag(self.block_data)

    def to_l2(self) -> np.ndarray:
        if not self.block_data:
            return np.zeros(0, complex)
        return np.concatenate([a.reshape(-1) for a in self.block_data])

    def is_projection(self, tol=DEFAULT_TOL) -> bool:
        return all(is_projection(a, tol) for a in self.block_data)

    def is_unitary(self, tol=DEFAULT_TOL) -> bool:
        return all(is_unitary(a, tol) for a in self.block_data)

    def ranks(self, tol=DEFAULT_TOL) -> tuple:
        """Per-block ranks of a projection (its trace, rounded)."""
        if not self.is_projection(tol):
            raise NotProjection("element is not a projection")
        return tuple(int(round(float(np.real(np.trace(a))))) for a in self.block_data)

    def allclose(self, other, tol=DEFAULT_TOL) -> bool:
        self._same(other)
        return (self - other).frobenius() <= tol * scale_of(*self.block_data, *other.block_data)


# --------------------------------------------------------------------------
# standard form


def transpose_permutation(n: int) -> np.ndarray:
    """Permutation matrix P with ``P vec(X) = vec(X^T)`` for row-major vec."""
    idx = np.arange(n * n).reshape(n, n).T.reshape(-1)
    P = np.zeros((n * n, n * n))
    P[np.arange(n * n), idx] = 1.0
    return P


@dataclass(frozen=True, eq=False)
class L2Space:
    """The standard form of a multimatrix algebra (trace inner product)."""

    algebra: MultiMatrixAlgebra
    J: AntiUnitary = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.algebra.dim

    def left(self, a: AlgebraElement) -> np.ndarray:
        _check_alg(a, self.algebra)
        return block_diag([np.kron(x, np.eye(x.shape[0])) for x in a.block_data])

    def right(self, b: AlgebraElement) -> np.ndarray:
        _check_alg(b, self.algebra)
        return block_diag([np.kron(np.eye(x.shape[0]), x.T) for x in b.block_data])

    def inner(self, xi, eta) -> complex:
        return complex(np.vdot(xi, eta))

    def residuals(self) -> dict:
        """J^2 = id, the J(a xi b) = b^* J(xi) a^* identity, and commuting actions.

        The J identity is evaluated on all triples of matrix units.  Every
        operator involved is block diagonal, and a pair of units from
        different blocks gives the zero operator on both sides, so the
        triples are checked block by block with all pairs at once.
        """
        A = self.algebra
        out = {"J_squared": 0.0, "J_bimodule": 0.0, "actions_commute": 0.0}
        if A.dim:
            out["J_squared"] = float(np.abs((self.J @ self.J).matrix - np.eye(A.dim)).max())
        for n in A.blocks:
            units = np.eye(n * n).reshape(n * n, n, n)
            I = np.eye(n)
            L = np.einsum("uij,kl->uikjl", units, I).reshape(n * n, n * n, n * n)
            R = np.einsum("kl,uji->ukilj", I, units).reshape(n * n, n * n, n * n)
            # adjoint of a real matrix unit is its transpose
            adj = np.arange(n * n).reshape(n, n).T.reshape(-1)
            P = transpose_permutation(n)
            LR = np.einsum("aij,bjk->abik", L, R)
            lhs = np.einsum("ij,abjk->abik", P, LR.conj())
            rhs = np.einsum("bij,ajk,kl->abil", L[adj], R[adj], P)
            out["J_bimodule"] = max(out["J_bimodule"], float(np.abs(lhs - rhs).max()))
            RL = np.einsum("bij,ajk->abik", R, L)
            out["actions_commute"] = max(out["actions_commute"], float(np.abs(LR - RL).max()))
        return out


def l2_standard_form(A: MultiMatrixAlgebra) -> L2Space:
    perm = block_diag([transpose_permutation(n) for n in A.blocks])
    return L2Space(A, AntiUnitary(perm, True))


def _check_alg(a, A):
    if not isinstance(a, AlgebraElement) or a.algebra != A:
        raise AlgebraMismatch("element does not belong to this algebra")


# --------------------------------------------------------------------------
# commutants


def _closed_under_star(gens):
    gens = [as_matrix(g) for g in gens]
    if not gens:
        raise DimensionMismatch("need at least one generator")
    N = gens[0].shape[0]
    for g in gens:
        if g.shape != (N, N):
            raise DimensionMismatch("generators must be square of equal size")
    return gens, N


def commutant(generators, tol=DEFAULT_TOL) -> list:
    """Orthonormal basis of ``{x : xg = gx, xg^* = g^*x}``."""
    gens, _ = _closed_under_star(generators)
    return intertwiner_basis(gens, gens, tol, star_closed=True)


def _span_basis(mats, tol):
    """Orthonormal (trace form) basis of the span of ``mats``."""
    if not mats:
        return []
    M = np.stack([m.reshape(-1) for m in mats], axis=1)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    keep = s > tol * max(1.0, float(s[0]) if s.size else 1.0)
    n = mats[0].shape[0]
    return [U[:, k].reshape(n, n) for k in np.nonzero(keep)[0]]


def generated_algebra(generators, tol=DEFAULT_TOL) -> list:
    """Basis of the unital *-algebra generated by the matrices.

    Words in the generators are added degree by degree until the span stops
    growing; in finite dimension that happens after at most N^2 rounds.
    """
    gens, N = _closed_under_star(generators)
    gens = gens + [g.conj().T for g in gens]
    basis = _span_basis([np.eye(N, dtype=complex)] + gens, tol)
    while True:
        new = _span_basis(basis + [b @ g for b in basis for g in gens], tol)
        if len(new) == len(basis):
            return new
        basis = new


def bicommutant_check(generators, tol=DEFAULT_TOL) -> bool:
    """Whether the generated *-algebra equals its bicommutant."""
    alg = generated_algebra(generators, tol)
    first = commutant(generators, tol)
    second = commutant(first, tol)
    if len(second) != len(alg):
        return False
    # containment of alg in A'': project each element onto span(second)
    S = np.stack([s.reshape(-1) for s in second], axis=1)
    for a in alg:
        v = a.reshape(-1)
        resid = v - S @ (S.conj().T @ v)
        if np.linalg.norm(resid) > tol * max(1.0, np.linalg.norm(v)) * 10:
            return False
    return True


# --------------------------------------------------------------------------
# corners


def _require_projection(p: AlgebraElement, tol):
    if not p.is_projection(tol):
        raise NotProjection("argument is not an orthogonal projection")


def corner(A: MultiMatrixAlgebra, p: AlgebraElement, tol=DEFAULT_TOL):
    """``(pAp, U)`` where ``U`` maps ``p L^2A p`` onto ``L^2(pAp)``.

    ``U`` is a ``dim L^2(pAp) x dim L^2A`` co-isometry, ``xi -> iota^* xi iota``
    blockwise, whose restriction to the corner is unitary; blocks where
    ``p`` vanishes are dropped.
    """
    _check_alg(p, A)
    _require_projection(p, tol)
    iotas = corner_isometries(p, tol)
    B = MultiMatrixAlgebra([io.shape[1] for io in iotas if io.shape[1] > 0])
    rows = []
    for i, io in enumerate(iotas):
        if io.shape[1] == 0:
            continue
        part = [np.zeros((io.shape[1] ** 2, n * n), complex) for n in A.blocks]
        part[i] = np.kron(io.conj().T, io.T)
        rows.append(np.hstack(part))
    U = np.vstack(rows) if rows else np.zeros((0, A.dim), complex)
    return B, U


def corner_isometries(p: AlgebraElement, tol=DEFAULT_TOL) -> list:
    return [range_isometry(b, tol) for b in p.block_data]


def compress(p: AlgebraElement, a: AlgebraElement, tol=DEFAULT_TOL) -> AlgebraElement:
    """The element ``iota^* a iota`` of ``pAp`` (zero blocks dropped)."""
    _check_alg(a, p.algebra)
    iotas = corner_isometries(p, tol)
    B = MultiMatrixAlgebra([io.shape[1] for io in iotas if io.shape[1] > 0])
    return AlgebraElement(
        B, [io.conj().T @ x @ io for io, x in zip(iotas, a.block_data) if io.shape[1] > 0]
    )


def corner_vanishing(A: MultiMatrixAlgebra, p: AlgebraElement, q: AlgebraElement, tol=DEFAULT_TOL) -> bool:
    """Whether ``pAq = 0``; cross-checked against ``p L^2A q = 0``."""
    _check_alg(p, A)
    _check_alg(q, A)
    _require_projection(p, tol)
    _require_projection(q, tol)
    # p_i M_n q_i is zero exactly when one of the two factors is zero
    algebraic = all(
        np.linalg.norm(pi) <= tol or np.linalg.norm(qi) <= tol
        for pi, qi in zip(p.block_data, q.block_data)
    )
    L2 = l2_standard_form(A)
    op = L2.left(p) @ L2.right(q)
    spatial = bool(np.linalg.norm(op) <= tol * scale_of(op)) if op.size else True
    if algebraic != spatial:
        raise WStarError("pAq and p L^2A q disagree; numerical breakdown")
    return algebraic


def l2_of_inner_automorphism(A: MultiMatrixAlgebra, u: AlgebraElement, tol=DEFAULT_TOL) -> np.ndarray:
    """Matrix of ``xi -> u xi u^*`` on ``L^2A``."""
    _check_alg(u, A)
    if not u.is_unitary(tol):
        raise NotUnitary("argument is not unitary")
    L2 = l2_standard_form(A)
    W = L2.left(u) @ L2.right(u.adjoint())
    if not is_unitary(W, tol):
        raise NotUnitary("induced operator on L^2A is not unitary")
    # Ad(u) commutes with J:  W J = J W  means  W P conj = P conj W = P conj(W) conj
    P = L2.J.matrix
    if np.linalg.norm(W @ P - P @ W.conj()) > tol * scale_of(W):
        raise WStarError("induced operator does not commute with J")
    return W


# --------------------------------------------------------------------------
# constructions


def spatial_tensor(A: MultiMatrixAlgebra, B: MultiMatrixAlgebra) -> MultiMatrixAlgebra:
    return MultiMatrixAlgebra([n * m for n in A.blocks for m in B.blocks])


def product(algebras: Sequence[MultiMatrixAlgebra]) -> MultiMatrixAlgebra:
    return MultiMatrixAlgebra([n for A in algebras for n in A.blocks])


@dataclass(frozen=True, eq=False)
class AlgebraHom:
    """Unital *-homomorphism ``A -> B`` in multiplicity form.

    ``f(a)_j = W_j (+_i I_{mult[j,i]} (x) a_i) W_j^*`` where ``W_j`` is the
    arrangement unitary of target block ``j`` (identity by default).
    """

    source: MultiMatrixAlgebra
    target: MultiMatrixAlgebra
    mult: np.ndarray
    arrangement: tuple = None

    def __init__(self, source, target, mult, arrangement=None, tol=DEFAULT_TOL):
        k = np.asarray(mult, dtype=int).reshape(len(target.blocks), len(source.blocks))
        if np.any(k < 0):
            raise DimensionMismatch("multiplicities must be non-negative")
        sizes = k @ np.array(source.blocks, dtype=int) if len(source.blocks) else np.zeros(len(target.blocks), int)
        if tuple(int(s) for s in sizes) != target.blocks:
            raise NotUnital(
                f"block sizes {tuple(int(s) for s in sizes)} do not fill target {target.blocks}"
            )
        if arrangement is None:
            arrangement = tuple(np.eye(m, dtype=complex) for m in target.blocks)
        else:
            arrangement = tuple(as_matrix(w) for w in arrangement)
            for w, m in zip(arrangement, target.blocks):
                if w.shape != (m, m) or not is_unitary(w, tol):
                    raise NotUnitary("arrangement must be unitary per target block")
        k.setflags(write=False)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "mult", k)
        object.__setattr__(self, "arrangement", arrangement)

    def __call__(self, a: AlgebraElement) -> AlgebraElement:
        _check_alg(a, self.source)
        out = []
        for j, W in enumerate(self.arrangement):
            parts = [
                np.kron(np.eye(self.mult[j, i]), a.block_data[i])
                for i in range(len(self.source.blocks))
                if self.mult[j, i] > 0
            ]
            out.append(W @ block_diag(parts) @ W.conj().T)
        return AlgebraElement(self.target, out)

    def residual(self) -> float:
        """Largest *-homomorphism defect over pairs of matrix units."""
        basis = self.source.basis()
        imgs = [self(a) for a in basis]
        worst = (self(self.source.identity()) - self.target.identity()).frobenius()
        for a, fa in zip(basis, imgs):
            worst = max(worst, (self(a.adjoint()) - fa.adjoint()).frobenius())
            for b, fb in zip(basis, imgs):
                worst = max(worst, (self(a @ b) - fa @ fb).frobenius())
        return worst


def split_homomorphism(f: AlgebraHom, tol=DEFAULT_TOL):
    """``(kernel, image, z)`` for ``A = zA + (1-z)A`` with ``f`` injective on ``(1-z)A``."""
    if (f(f.source.identity()) - f.target.identity()).frobenius() > tol * scale_of(
        *f.target.identity().block_data
    ):
        raise NotUnital("homomorphism is not unital")
    zero_col = [not np.any(f.mult[:, i]) for i in range(len(f.source.blocks))]
    kernel = MultiMatrixAlgebra([n for n, zc in zip(f.source.blocks, zero_col) if zc])
    image = MultiMatrixAlgebra([n for n, zc in zip(f.source.blocks, zero_col) if not zc])
    z = AlgebraElement(
        f.source,
        [np.eye(n) if zc else np.zeros((n, n)) for n, zc in zip(f.source.blocks, zero_col)],
    )
    return kernel, image, z


def image_restriction(f: AlgebraHom) -> AlgebraHom:
    """The injective part: ``f`` restricted to the blocks outside the kernel."""
    keep = [i for i in range(len(f.source.blocks)) if np.any(f.mult[:, i])]
    image = MultiMatrixAlgebra([f.source.blocks[i] for i in keep])
    return AlgebraHom(image, f.target, f.mult[:, keep], f.arrangement)


def positive_cone_member(x, tol=DEFAULT_TOL, algebra: MultiMatrixAlgebra = None) -> bool:
    """Blockwise Hermitian PSD test; accepts an element or an L^2 vector."""
    if not isinstance(x, AlgebraElement):
        if algebra is None:
            raise DimensionMismatch("an L^2 vector needs its algebra")
        x = algebra.from_l2(x)
    for b in x.block_data:
        if not is_hermitian(b, tol):
            return False
        w, _ = hermitian_eig(b, tol)
        if w.size and w[0] < -tol * scale_of(b):
            return False
    return True
