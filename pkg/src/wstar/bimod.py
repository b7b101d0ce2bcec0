"""Bimodules over multimatrix algebras and their Connes fusion.

A ``B``-``A`` bimodule with multiplicity matrix ``k`` (``B`` has blocks
``m_j``, ``A`` has blocks ``n_i``) is realised on

    X = +_{j,i} C^{m_j} (x) C^{k_ji} (x) C^{n_i}

with cells in row-major ``(j, i)`` order, ``b`` acting as ``b_j (x) 1 (x) 1``
and ``a`` acting on the right as ``1 (x) 1 (x) a_i^T``.  A cell coordinate is
written ``(mu, alpha, nu)``.  An ``A``-module with multiplicity vector ``x``
is the ``A``-``C`` bimodule with the column ``x``.

For ``X`` over ``(B, A)`` and ``Y`` over ``(A, C)`` the fusion has
multiplicity ``k @ l``; the multiplicity space of cell ``(j, h)`` is
``+_i C^{k_ji} (x) C^{l_ih}``, ordered by ``(i, alpha, beta)``.  The
vector-level contraction

    kappa(x, y)[mu, (i, alpha, beta), w] = sum_nu x[mu, alpha, nu] y[nu, beta, w]

is balanced (``kappa(x a, y) = kappa(x, a y)``) and realises the fusion
isometrically; it is the bridge used by the definitional oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, AlgebraHom, MultiMatrixAlgebra, spatial_tensor
from .errors import (
    AlgebraMismatch,
    CapExceeded,
    DimensionMismatch,
    GramNotPSD,
    NotUnital,
    ShapeMismatch,
)
from .linalg import (
    DEFAULT_TOL,
    AntiUnitary,
    as_matrix,
    block_diag,
    hermitian_eig,
    intertwiner_basis,
    is_unitary,
    scale_of,
    unitary_residual,
)
from .modcat import ModuleMorphism, ModuleObject

__all__ = [
    "CC",
    "Bimodule",
    "BimoduleMap",
    "FusionWitness",
    "as_bimodule",
    "as_module",
    "as_bimodule_map",
    "as_module_morphism",
    "fuse",
    "fuse_maps",
    "contract",
    "conj_vector",
    "conj_antiunitary",
    "fuse_oracle",
    "oracle_span_size",
    "associator",
    "left_unitor",
    "right_unitor",
    "pentagon_residual",
    "triangle_residual",
    "conjugate",
    "conjugate_map",
    "double_conjugate",
    "nu_unitary",
    "unit_j",
    "hexagon_residual",
    "unit_residuals",
    "phi_unit_residual",
    "phi_tensor_residual",
    "nu_naturality_residual",
    "direct_sum_distributor",
    "object_bimodule",
    "fuse_with_object",
    "fuse_with_object_map",
    "object_unitor",
    "kron_equivalence",
]

CC = MultiMatrixAlgebra([1])


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class Bimodule:
    left: MultiMatrixAlgebra
    right: MultiMatrixAlgebra
    mult: tuple

    def __init__(self, left: MultiMatrixAlgebra, right: MultiMatrixAlgebra, mult):
        r, s = len(left.blocks), len(right.blocks)
        k = np.asarray(mult, dtype=int)
        if k.size != r * s:
            raise ShapeMismatch(f"mult has {k.size} entries, expected {r}x{s}")
        k = k.reshape(r, s)
        if np.any(k < 0):
            raise DimensionMismatch("multiplicities must be non-negative")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "mult", tuple(tuple(int(v) for v in row) for row in k))

    def __repr__(self):
        return f"Bimodule({list(self.left.blocks)}, {list(self.right.blocks)}, {self.k.tolist()})"

    @property
    def k(self) -> np.ndarray:
        return np.array(self.mult, dtype=int).reshape(len(self.left.blocks), len(self.right.blocks))

    @property
    def shape(self):
        return len(self.left.blocks), len(self.right.blocks)

    def cells(self):
        r, s = self.shape
        return [(j, i) for j in range(r) for i in range(s)]

    def cell_dim(self, j, i) -> int:
        return self.left.blocks[j] * self.mult[j][i] * self.right.blocks[i]

    @property
    def cell_offsets(self) -> dict:
        off, out = 0, {}
        for j, i in self.cells():
            out[(j, i)] = off
            off += self.cell_dim(j, i)
        return out

    @property
    def dim(self) -> int:
        return sum(self.cell_dim(j, i) for j, i in self.cells())

    @property
    def mult_dim(self) -> int:
        """Total multiplicity dimension ``sum k_ji``."""
        return int(self.k.sum())

    def cell_slice(self, j, i) -> slice:
        o = self.cell_offsets[(j, i)]
        return slice(o, o + self.cell_dim(j, i))

    def split(self, v) -> dict:
        """Vector -> ``{(j, i): array (m_j, k_ji, n_i)}``."""
        v = np.asarray(v, dtype=complex).reshape(-1)
        if v.size != self.dim:
            raise DimensionMismatch(f"vector of length {v.size}, expected {self.dim}")
        out = {}
        for j, i in self.cells():
            out[(j, i)] = v[self.cell_slice(j, i)].reshape(
                self.left.blocks[j], self.mult[j][i], self.right.blocks[i]
            )
        return out

    def join(self, parts: dict) -> np.ndarray:
        chunks = [np.asarray(parts[c]).reshape(-1) for c in self.cells()]
        return np.concatenate(chunks) if chunks else np.zeros(0, complex)

    def left_action(self, b: AlgebraElement) -> np.ndarray:
        if b.algebra != self.left:
            raise AlgebraMismatch("left action by an element of the wrong algebra")
        return block_diag(
            [np.kron(b.block_data[j], np.eye(self.mult[j][i] * self.right.blocks[i])) for j, i in self.cells()]
        )

    def right_action(self, a: AlgebraElement) -> np.ndarray:
        if a.algebra != self.right:
            raise AlgebraMismatch("right action by an element of the wrong algebra")
        return block_diag(
            [np.kron(np.eye(self.left.blocks[j] * self.mult[j][i]), a.block_data[i].T) for j, i in self.cells()]
        )

    @classmethod
    def regular(cls, A: MultiMatrixAlgebra) -> "Bimodule":
        """``L^2 A`` as an ``A``-``A`` bimodule."""
        return cls(A, A, np.eye(len(A.blocks), dtype=int))

    @classmethod
    def zero(cls, B: MultiMatrixAlgebra, A: MultiMatrixAlgebra) -> "Bimodule":
        return cls(B, A, np.zeros((len(B.blocks), len(A.blocks)), dtype=int))


@dataclass(frozen=True, eq=False)
class BimoduleMap:
    """A bimodule intertwiner: one ``k'_ji x k_ji`` matrix per cell."""

    source: Bimodule
    target: Bimodule
    cells: tuple

    def __init__(self, source: Bimodule, target: Bimodule, cells):
        if source.left != target.left or source.right != target.right:
            raise AlgebraMismatch("bimodule map between different algebra pairs")
        r, s = source.shape
        if isinstance(cells, dict):
            cells = [[cells.get((j, i)) for i in range(s)] for j in range(r)]
        if len(cells) != r or any(len(row) != s for row in cells):
            raise ShapeMismatch("cell data must be an r x s array of matrices")
        data = []
        for j in range(r):
            row = []
            for i in range(s):
                sh = (target.mult[j][i], source.mult[j][i])
                c = cells[j][i]
                m = np.zeros(sh, complex) if c is None or np.size(c) == 0 else as_matrix(c)
                if m.shape != sh:
                    raise ShapeMismatch(f"cell {(j, i)} has shape {m.shape}, expected {sh}")
                row.append(m)
            data.append(tuple(row))
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "cells", tuple(data))

    def cell(self, j, i) -> np.ndarray:
        return self.cells[j][i]

    def _map(self, fn, *others):
        r, s = self.source.shape
        return [[fn(self.cells[j][i], *(o.cells[j][i] for o in others)) for i in range(s)] for j in range(r)]

    @classmethod
    def identity(cls, X: Bimodule) -> "BimoduleMap":
        return cls(X, X, [[np.eye(X.mult[j][i]) for i in range(X.shape[1])] for j in range(X.shape[0])])

    @classmethod
    def zero(cls, X: Bimodule, Y: Bimodule) -> "BimoduleMap":
        return cls(X, Y, {})

    def _parallel(self, other):
        if self.source != other.source or self.target != other.target:
            raise ShapeMismatch("maps with different endpoints")

    def __add__(self, other):
        self._parallel(other)
        return BimoduleMap(self.source, self.target, self._map(np.add, other))

    def __sub__(self, other):
        self._parallel(other)
        return BimoduleMap(self.source, self.target, self._map(np.subtract, other))

    def __neg__(self):
        return BimoduleMap(self.source, self.target, self._map(np.negative))

    def __mul__(self, scalar):
        return BimoduleMap(self.source, self.target, self._map(lambda c: scalar * c))

    __rmul__ = __mul__

    def __matmul__(self, other: "BimoduleMap") -> "BimoduleMap":
        if other.target != self.source:
            raise ShapeMismatch(f"cannot compose {other.target} into {self.source}")
        return BimoduleMap(other.source, self.target, self._map(lambda a, b: a @ b, other))

    def adjoint(self) -> "BimoduleMap":
        r, s = self.source.shape
        return BimoduleMap(self.target, self.source, [[self.cells[j][i].conj().T for i in range(s)] for j in range(r)])

    @property
    def H(self):
        return self.adjoint()

    def frobenius(self) -> float:
        return float(np.sqrt(sum(np.linalg.norm(c) ** 2 for row in self.cells for c in row)))

    def norm(self) -> float:
        return max((float(np.linalg.norm(c, 2)) for row in self.cells for c in row if c.size), default=0.0)

    def distance(self, other) -> float:
        self._parallel(other)
        return (self - other).frobenius()

    def dense(self) -> np.ndarray:
        X, Y = self.source, self.target
        return block_diag(
            [
                np.kron(np.kron(np.eye(X.left.blocks[j]), self.cells[j][i]), np.eye(X.right.blocks[i]))
                for j, i in X.cells()
            ]
        )

    def apply(self, v) -> np.ndarray:
        parts = self.source.split(v)
        out = {c: np.einsum("ab,mbn->man", self.cells[c[0]][c[1]], parts[c]) for c in self.source.cells()}
        return self.target.join(out)

    def unitary_residual(self) -> float:
        if self.source.mult != self.target.mult:
            return float("inf")
        return max((unitary_residual(c) for row in self.cells for c in row if c.size), default=0.0)

    def is_unitary(self, tol=DEFAULT_TOL) -> bool:
        return self.source.mult == self.target.mult and all(
            is_unitary(c, tol) for row in self.cells for c in row
        )


@dataclass(frozen=True, eq=False)
class FusionWitness:
    """Result of the definitional fusion construction.

    ``basis_map`` has one column per vector of an orthonormal basis of the
    completed pre-inner-product space and one row per coordinate of the
    fast-form fusion; it is unitary when the two descriptions agree.
    """

    bimodule: Bimodule
    basis_map: np.ndarray
    gram_min_eigenvalue: float
    span_size: int
    rank: int

    @property
    def dimension(self) -> int:
        return self.rank

    def unitary_residual(self) -> float:
        """``unitary_residual(basis_map)`` without forming the full products.

        Columns are grouped into connected components of their row supports.
        Cross terms between components vanish, so the Frobenius norms of
        ``V*V - I`` and ``VV* - I`` are assembled exactly from the components.
        """
        V = self.basis_map
        if V.shape[0] != V.shape[1]:
            return float("inf")
        if V.shape[1] == 0:
            return 0.0
        support = V != 0
        big = V.shape[1]
        labels = np.arange(big)
        while True:
            row = np.where(support, labels, big).min(axis=1)
            new = np.where(support, row[:, None], big).min(axis=0)
            new = np.minimum(new, labels)
            if np.array_equal(new, labels):
                break
            labels = new
        row = np.where(support, labels, big).min(axis=1)
        left = right = 0.0
        right += float((row == big).sum())  # uncovered rows: VV* has a zero diagonal entry
        for g in np.unique(labels):
            B = V[np.ix_(np.flatnonzero(row == g), np.flatnonzero(labels == g))]
            left += float(np.linalg.norm(B.conj().T @ B - np.eye(B.shape[1])) ** 2)
            right += float(np.linalg.norm(B @ B.conj().T - np.eye(B.shape[0])) ** 2)
        return max(np.sqrt(left), np.sqrt(right))


# --------------------------------------------------------------------------
# modules as bimodules


def as_bimodule(H: ModuleObject) -> Bimodule:
    return Bimodule(H.algebra, CC, np.array(H.mult, dtype=int).reshape(-1, 1))


def as_module(X: Bimodule) -> ModuleObject:
    if X.right != CC:
        raise AlgebraMismatch("only left modules (right algebra C) convert to module objects")
    return ModuleObject(X.left, X.k[:, 0])


def as_bimodule_map(f: ModuleMorphism) -> BimoduleMap:
    return BimoduleMap(as_bimodule(f.source), as_bimodule(f.target), [[b] for b in f.block_data])


def as_module_morphism(t: BimoduleMap) -> ModuleMorphism:
    return ModuleMorphism(as_module(t.source), as_module(t.target), [row[0] for row in t.cells])


# --------------------------------------------------------------------------
# fast fusion


def _check_composable(X: Bimodule, Y: Bimodule):
    if X.right != Y.left:
        raise AlgebraMismatch(f"cannot fuse: right algebra {X.right} vs left algebra {Y.left}")


def fuse(X: Bimodule, Y: Bimodule) -> Bimodule:
    _check_composable(X, Y)
    return Bimodule(X.left, Y.right, X.k @ Y.k)


def fuse_maps(f: BimoduleMap, g: BimoduleMap) -> BimoduleMap:
    """``f (x) g`` on ``X (x)_A Y``: block diagonal over ``i`` of ``kron(f_ji, g_ih)``."""
    X, Y = f.source, g.source
    _check_composable(X, Y)
    src, tgt = fuse(X, Y), fuse(f.target, g.target)
    r, s = X.shape
    t = Y.shape[1]
    cells = [
        [block_diag([np.kron(f.cells[j][i], g.cells[i][h]) for i in range(s)]) for h in range(t)]
        for j in range(r)
    ]
    return BimoduleMap(src, tgt, cells)


def contract(X: Bimodule, Y: Bimodule, x, y) -> np.ndarray:
    """The balanced bilinear map ``kappa: X x Y -> X (x)_A Y``."""
    _check_composable(X, Y)
    Z = fuse(X, Y)
    xs, ys = X.split(x), Y.split(y)
    r, s = X.shape
    t = Y.shape[1]
    out = {}
    for j in range(r):
        for h in range(t):
            parts = [
                np.einsum("man,nbw->mabw", xs[(j, i)], ys[(i, h)]).reshape(
                    X.left.blocks[j], -1, Y.right.blocks[h]
                )
                for i in range(s)
            ]
            out[(j, h)] = np.concatenate(parts, axis=1) if parts else np.zeros((X.left.blocks[j], 0, Y.right.blocks[h]))
    return Z.join(out)


# --------------------------------------------------------------------------
# definitional fusion


def oracle_span_size(X: Bimodule, Y: Bimodule, family="generators") -> int:
    """Size of the spanning family used by :func:`fuse_oracle`.

    With ``a_i``, ``b_i`` the multiplicities of ``X e_i`` and ``e_i Y`` the
    families have ``n^4 a b`` (full), ``n^2 a b`` (unit) and
    ``ceil(a/n) n b`` (generators) elements per block.
    """
    _check_composable(X, Y)
    total = 0
    for i, n in enumerate(X.right.blocks):
        a = sum(X.left.blocks[j] * X.mult[j][i] for j in range(X.shape[0]))
        b = sum(Y.mult[i][h] * Y.right.blocks[h] for h in range(Y.shape[1]))
        if family == "full":
            total += n**4 * a * b
        elif family == "unit":
            total += n * n * a * b
        else:
            total += -(-a // n) * n * b
    return total


def _block_generators(n: int) -> list:
    if n == 1:
        return [np.eye(1)]
    return [np.diag(np.arange(1.0, n + 1)), np.eye(n, k=1)]


def _copies_basis(lhs, rhs, tol):
    """Intertwiners ``V -> W`` for one copy ``W``; ``Hom(V, W^{+N}) = Hom(V, W)^{+N}``."""
    return intertwiner_basis(lhs, rhs, tol, star_closed=True)


def _right_hom_basis(X: Bimodule, i: int, tol):
    """Right ``A``-module maps ``L^2 M_{n_i} -> X e_i`` as full-length columns.

    Cell ``(j, i)`` carries ``N = m_j k_ji`` copies of the row representation
    ``g -> g^T`` in contiguous slices.  Returns ``(count, dim X, n_i^2)``.
    """
    n = X.right.blocks[i]
    gens = _block_generators(n)
    lhs = [np.kron(np.eye(n), g.T) for g in gens]
    one = _copies_basis(lhs, [g.T for g in gens], tol)
    cols = []
    for j in range(X.shape[0]):
        if not X.cell_dim(j, i):
            continue
        start = X.cell_slice(j, i).start
        for t in range(X.left.blocks[j] * X.mult[j][i]):
            for phi in one:
                col = np.zeros((X.dim, n * n), complex)
                col[start + t * n:start + (t + 1) * n, :] = phi
                cols.append(col)
    if not cols:
        return np.zeros((0, X.dim, n * n), complex)
    return np.stack(cols)


def _left_hom_basis(Y: Bimodule, i: int, tol):
    """Left ``A``-module maps ``L^2 M_{n_i} -> e_i Y``; shape ``(count, dim Y, n_i^2)``.

    Cell ``(i, h)`` is ``C^n (x) C^N`` with ``N = k_ih p_h``, so copy ``t``
    sits at the strided positions ``mu N + t``.
    """
    n = Y.left.blocks[i]
    gens = _block_generators(n)
    lhs = [np.kron(g, np.eye(n)) for g in gens]
    one = _copies_basis(lhs, gens, tol)
    cols = []
    for h in range(Y.shape[1]):
        if not Y.cell_dim(i, h):
            continue
        start = Y.cell_slice(i, h).start
        N = Y.mult[i][h] * Y.right.blocks[h]
        for t in range(N):
            for psi in one:
                col = np.zeros((Y.dim, n * n), complex)
                col[start + t:start + n * N:N, :] = psi
                cols.append(col)
    if not cols:
        return np.zeros((0, Y.dim, n * n), complex)
    return np.stack(cols)


_GENERATOR_SEED = 7


def _right_generators(Phi: np.ndarray, n: int, tol) -> np.ndarray:
    """Orthonormal generators of ``span(Phi)`` as a right Hilbert ``M_n``-module.

    The module inner product is ``<phi, phi'> = lambda^{-1}(phi^* phi')`` and
    ``M_n`` acts by ``phi -> phi lambda(a)``.  Gram-Schmidt in this module
    returns maps ``g`` with ``<g, g'> = delta_{g g'} p_g``, ``p_g`` a projection,
    stopping once the generated submodule has the dimension of ``span(Phi)``.
    """
    count, dim = len(Phi), Phi.shape[1]
    P4 = Phi.reshape(count, dim, n, n)

    def inner(P, R):
        return np.einsum("xrc,xqc->rq", P.conj(), R) / n

    def act(P, a):
        return np.einsum("xpc,pr->xrc", P, a)

    # generic combinations have full-rank module norm, so about ceil(a/n)
    # of them generate; the seed only fixes which generating set is found
    rng = np.random.default_rng(_GENERATOR_SEED)
    gens, covered = [], 0
    for s in range(count):
        c = rng.normal(size=count) + 1j * rng.normal(size=count)
        phi = np.tensordot(c / np.linalg.norm(c), P4, axes=1)
        for _ in range(2):  # re-orthogonalise once for stability
            for g in gens:
                phi = phi - act(g, inner(g, phi))
        w, U = np.linalg.eigh(inner(phi, phi))
        keep = w > tol
        if not keep.any():
            continue
        root_inv = (U[:, keep] / np.sqrt(w[keep])) @ U[:, keep].conj().T
        gens.append(act(phi, root_inv))
        covered += n * int(keep.sum())
        if covered >= count:
            break
    return np.stack(gens).reshape(len(gens), dim, n * n)


def fuse_oracle(X: Bimodule, Y: Bimodule, tol=DEFAULT_TOL, cap=4096, family="generators") -> FusionWitness:
    """Connes fusion from its definition, compared with the fast form.

    The pre-Hilbert space is spanned by ``phi (x) xi (x) psi`` with ``phi`` a
    right module map ``L^2A -> X``, ``psi`` a left module map ``L^2A -> Y``
    and ``xi`` in ``L^2A``, with the inner product

        <phi (x) xi (x) psi, phi' (x) xi' (x) psi'> =
            <xi, lambda^{-1}(phi^* phi') xi' rho^{-1}(psi^* psi')>.

    ``family`` selects the spanning family:

    ``"full"``
        every ``phi``, every matrix unit ``xi``, every ``psi`` (small inputs only);
    ``"unit"``
        balancing moves ``xi`` into ``psi``, so ``xi = 1_i`` per block suffices;
    ``"generators"``
        additionally ``phi lambda(a) (x) 1 (x) psi ~ phi (x) 1 (x) psi rho(a)``,
        so ``phi`` only runs over orthonormal generators of ``Hom(L^2A, X)``
        as a Hilbert right ``A``-module, built from seeded random combinations.

    After quotienting the null space of the Gram matrix, the orthonormal
    basis is sent into the fast-form space by
    ``phi (x) xi (x) psi -> kappa(phi(xi), psi(1))``.
    """
    _check_composable(X, Y)
    Z = fuse(X, Y)
    if family not in ("full", "unit", "generators"):
        raise ValueError(f"unknown spanning family {family!r}")
    full_span = family == "full"
    if X.dim + Y.dim > cap:
        raise CapExceeded(f"total dimension {X.dim + Y.dim} exceeds cap {cap}")
    grams, images = [], []
    for i, n in enumerate(X.right.blocks):
        Phi = _right_hom_basis(X, i, tol)
        Psi = _left_hom_basis(Y, i, tol)
        if len(Phi) == 0 or len(Psi) == 0:
            continue
        if family == "generators":
            Phi = _right_generators(Phi, n, tol)
        S, U = len(Phi), len(Psi)
        # lambda^{-1}(phi_s^* phi_t) = partial trace over the second factor / n
        P = Phi.reshape(S, X.dim, n, n).transpose(0, 2, 1, 3).reshape(S * n, X.dim * n)
        lam = (P.conj() @ P.T).reshape(S, n, S, n).transpose(0, 2, 1, 3) / n
        # rho^{-1}(psi_u^* psi_v) = (partial trace over the first factor / n)^T
        Q = Psi.reshape(U, Y.dim, n, n).transpose(0, 3, 1, 2).reshape(U * n, Y.dim * n)
        rho = (Q.conj() @ Q.T).reshape(U, n, U, n).transpose(0, 2, 3, 1) / n
        unit = np.eye(n).reshape(-1)
        phi1 = Phi @ unit  # (s, dim X)
        psi1 = Psi @ unit
        if full_span:
            # <xi_e, a xi_f b> = Tr(xi_e^* a xi_f b) on matrix units e = (p, q), f = (r, w)
            G = np.einsum("stpr,uvwq->spqutrwv", lam, rho, optimize=True)
            size = S * n * n * U
            grams.append(G.reshape(size, size))
            cols = []
            for s in range(S):
                for e in range(n * n):
                    x = Phi[s] @ np.eye(n * n)[e]
                    for u in range(U):
                        cols.append(contract(X, Y, x, psi1[u]))
            images.append(np.stack(cols, axis=1))
            continue
        # Tr(lam_st rho_uv) with index order (s, u) x (t, v)
        G = np.einsum("strq,uvqr->sutv", lam, rho, optimize=True)
        off = lam.copy()
        off[np.arange(S), np.arange(S)] = 0
        if family == "generators" and np.abs(off).max(initial=0.0) <= tol * max(1.0, np.abs(lam).max()):
            # orthonormal generators: the Gram matrix is block diagonal in s
            for s in range(S):
                grams.append(G[s, :, s, :])
                images.append(np.stack([contract(X, Y, phi1[s], psi1[u]) for u in range(U)], axis=1))
            continue
        grams.append(G.reshape(S * U, S * U))
        images.append(np.stack([contract(X, Y, phi1[s], psi1[u]) for s in range(S) for u in range(U)], axis=1))
    if not grams:
        return FusionWitness(Z, np.zeros((Z.dim, 0), complex), 0.0, 0, 0)
    grams = [(G + G.conj().T) / 2 for G in grams]
    eigs = [hermitian_eig(G, tol) for G in grams]
    lam_max = max(float(w[-1]) for w, _ in eigs)
    lam_min = min(float(w[0]) for w, _ in eigs)
    if lam_min < -tol * max(1.0, lam_max) * 10:
        raise GramNotPSD(f"Gram matrix has eigenvalue {lam_min:.3e}")
    cut = tol * lam_max
    cols = []
    for (w, U), T in zip(eigs, images):
        keep = w > cut
        V = U[:, keep] / np.sqrt(w[keep])
        cols.append(T @ V)
    basis_map = np.concatenate(cols, axis=1)
    return FusionWitness(Z, basis_map, lam_min, sum(G.shape[0] for G in grams), basis_map.shape[1])


# --------------------------------------------------------------------------
# associators and unitors


def _perm(src_keys, tgt_keys) -> np.ndarray:
    pos = {k: p for p, k in enumerate(src_keys)}
    M = np.zeros((len(tgt_keys), len(src_keys)))
    for t, k in enumerate(tgt_keys):
        M[t, pos[k]] = 1.0
    return M


def associator(X: Bimodule, Y: Bimodule, Z: Bimodule) -> BimoduleMap:
    """``(X (x) Y) (x) Z -> X (x) (Y (x) Z)``, a permutation on each cell."""
    _check_composable(X, Y)
    _check_composable(Y, Z)
    k, l, p = X.k, Y.k, Z.k
    src, tgt = fuse(fuse(X, Y), Z), fuse(X, fuse(Y, Z))
    r, s = k.shape
    t, u = l.shape[1], p.shape[1]
    cells = {}
    for j in range(r):
        for g in range(u):
            skeys = [
                (h, i, a, b, c)
                for h in range(t)
                for i in range(s)
                for a in range(k[j, i])
                for b in range(l[i, h])
                for c in range(p[h, g])
            ]
            tkeys = [
                (h, i, a, b, c)
                for i in range(s)
                for a in range(k[j, i])
                for h in range(t)
                for b in range(l[i, h])
                for c in range(p[h, g])
            ]
            cells[(j, g)] = _perm(skeys, tkeys)
    return BimoduleMap(src, tgt, cells)


def left_unitor(X: Bimodule) -> BimoduleMap:
    """``L^2 B (x) X -> X``; the identity in multiplicity coordinates."""
    return BimoduleMap(fuse(Bimodule.regular(X.left), X), X, BimoduleMap.identity(X).cells)


def right_unitor(X: Bimodule) -> BimoduleMap:
    """``X (x) L^2 A -> X``."""
    return BimoduleMap(fuse(X, Bimodule.regular(X.right)), X, BimoduleMap.identity(X).cells)


def _id(X):
    return BimoduleMap.identity(X)


def pentagon_residual(X, Y, Z, W) -> float:
    a = associator
    lhs = a(X, Y, fuse(Z, W)) @ a(fuse(X, Y), Z, W)
    rhs = fuse_maps(_id(X), a(Y, Z, W)) @ a(X, fuse(Y, Z), W) @ fuse_maps(a(X, Y, Z), _id(W))
    return lhs.distance(rhs)


def triangle_residual(X, Y) -> float:
    L = Bimodule.regular(X.right)
    lhs = fuse_maps(_id(X), left_unitor(Y)) @ associator(X, L, Y)
    rhs = fuse_maps(right_unitor(X), _id(Y))
    return lhs.distance(rhs)


# --------------------------------------------------------------------------
# conjugation


def conjugate(X: Bimodule) -> Bimodule:
    return Bimodule(X.right, X.left, X.k.T)


def conj_antiunitary(X: Bimodule) -> AntiUnitary:
    """``C_X: X -> conj(X)``, ``(j, i, mu, alpha, nu) -> (i, j, nu, alpha, mu)`` conjugated."""
    Xb = conjugate(X)
    P = np.zeros((Xb.dim, X.dim))
    for j, i in X.cells():
        m, kk, n = X.left.blocks[j], X.mult[j][i], X.right.blocks[i]
        if m * kk * n == 0:
            continue
        src = np.arange(m * kk * n).reshape(m, kk, n) + X.cell_offsets[(j, i)]
        tgt = np.arange(n * kk * m).reshape(n, kk, m) + Xb.cell_offsets[(i, j)]
        P[tgt.reshape(-1), src.transpose(2, 1, 0).reshape(-1)] = 1.0
    return AntiUnitary(P, True)


def conj_vector(X: Bimodule, x) -> np.ndarray:
    return conj_antiunitary(X)(x)


def conjugate_map(f: BimoduleMap) -> BimoduleMap:
    """``C_Y f C_X^{-1}``: cell ``(i, j)`` is the complex conjugate of cell ``(j, i)``."""
    r, s = f.source.shape
    cells = [[f.cells[j][i].conj() for j in range(r)] for i in range(s)]
    return BimoduleMap(conjugate(f.source), conjugate(f.target), cells)


def double_conjugate(X: Bimodule) -> BimoduleMap:
    """``phi_X: X -> conj(conj(X))``."""
    return BimoduleMap(X, conjugate(conjugate(X)), _id(X).cells)


def nu_unitary(X: Bimodule, Y: Bimodule) -> BimoduleMap:
    """``conj(Y) (x) conj(X) -> conj(X (x) Y)``, swapping ``(beta, alpha)`` per ``i``."""
    _check_composable(X, Y)
    k, l = X.k, Y.k
    src = fuse(conjugate(Y), conjugate(X))
    tgt = conjugate(fuse(X, Y))
    r, s = k.shape
    t = l.shape[1]
    cells = {}
    for h in range(t):
        for j in range(r):
            skeys = [(i, a, b) for i in range(s) for b in range(l[i, h]) for a in range(k[j, i])]
            tkeys = [(i, a, b) for i in range(s) for a in range(k[j, i]) for b in range(l[i, h])]
            cells[(h, j)] = _perm(skeys, tkeys)
    return BimoduleMap(src, tgt, cells)


def unit_j(A: MultiMatrixAlgebra) -> BimoduleMap:
    """``j: L^2A -> conj(L^2A)``, the composite of ``J`` with ``C_{L^2A}``."""
    L = Bimodule.regular(A)
    return BimoduleMap(L, conjugate(L), _id(L).cells)


def hexagon_residual(x: Bimodule, y: Bimodule, z: Bimodule) -> float:
    """Compatibility of ``nu`` with the associator for ``(x, y, z)``.

    With ``n(a, b) = nu_unitary(b, a): conj(a) (x) conj(b) -> conj(b (x) a)``,

        n(x, z(x)y) o (1 (x) n(y, z)) o alpha
            = conj(alpha_{z,y,x}^{-1}) o n(y(x)x, z) o (n(x, y) (x) 1).
    """
    xb, yb, zb = conjugate(x), conjugate(y), conjugate(z)
    lhs = nu_unitary(fuse(z, y), x) @ fuse_maps(_id(xb), nu_unitary(z, y)) @ associator(xb, yb, zb)
    rhs = (
        conjugate_map(associator(z, y, x).adjoint())
        @ nu_unitary(z, fuse(y, x))
        @ fuse_maps(nu_unitary(y, x), _id(zb))
    )
    return lhs.distance(rhs)


def unit_residuals(x: Bimodule) -> tuple:
    """Both unit diagrams for ``nu`` against ``j`` and the unitors."""
    A = x.left
    if x.right != A:
        raise AlgebraMismatch("unit diagrams need an A-A bimodule")
    xb = conjugate(x)
    j = unit_j(A)
    left = conjugate_map(right_unitor(x)) @ nu_unitary(x, Bimodule.regular(A)) @ fuse_maps(j, _id(xb))
    right = conjugate_map(left_unitor(x)) @ nu_unitary(Bimodule.regular(A), x) @ fuse_maps(_id(xb), j)
    return left.distance(left_unitor(xb)), right.distance(right_unitor(xb))


def phi_unit_residual(A: MultiMatrixAlgebra) -> float:
    """``phi_1 = conj(j) o j``."""
    L = Bimodule.regular(A)
    return double_conjugate(L).distance(conjugate_map(unit_j(A)) @ unit_j(A))


def phi_tensor_residual(x: Bimodule, y: Bimodule) -> float:
    """``phi_{x(x)y} = conj(nu) o nu o (phi_x (x) phi_y)``."""
    xb, yb = conjugate(x), conjugate(y)
    rhs = (
        conjugate_map(nu_unitary(x, y))
        @ nu_unitary(yb, xb)
        @ fuse_maps(double_conjugate(x), double_conjugate(y))
    )
    return double_conjugate(fuse(x, y)).distance(rhs)


def nu_naturality_residual(f: BimoduleMap, g: BimoduleMap) -> float:
    """``nu o (conj g (x) conj f) = conj(f (x) g) o nu``."""
    lhs = nu_unitary(f.target, g.target) @ fuse_maps(conjugate_map(g), conjugate_map(f))
    rhs = conjugate_map(fuse_maps(f, g)) @ nu_unitary(f.source, g.source)
    return lhs.distance(rhs)


# --------------------------------------------------------------------------
# direct sums, objects, tensorator


def direct_sum_distributor(X: Bimodule, objects: Sequence[Bimodule]) -> BimoduleMap:
    """``X (x) (+_k Y_k) -> +_k (X (x) Y_k)`` for right-``C`` modules ``Y_k``."""
    from .modcat import direct_sum

    mods = [as_module(Y) for Y in objects]
    S, _ = direct_sum(mods)
    src = fuse(X, as_bimodule(S))
    tgt_mod, _ = direct_sum([as_module(fuse(X, Y)) for Y in objects])
    tgt = as_bimodule(tgt_mod)
    k = X.k
    r, s = k.shape
    cells = {}
    for j in range(r):
        skeys = [(i, a, q, b) for i in range(s) for a in range(k[j, i]) for q, Y in enumerate(mods) for b in range(Y.mult[i])]
        tkeys = [(i, a, q, b) for q, Y in enumerate(mods) for i in range(s) for a in range(k[j, i]) for b in range(Y.mult[i])]
        cells[(j, 0)] = _perm(skeys, tkeys)
    return BimoduleMap(src, tgt, cells)


def object_bimodule(action: AlgebraHom, c: ModuleObject) -> Bimodule:
    """An ``A``-object ``c`` of ``D-Mod`` as an ``A``-``D`` bimodule.

    ``action: A -> End(c)`` has target blocks ``c.mult`` (zero blocks
    dropped) and multiplicity ``mu``; block ``b`` of ``c`` carries
    ``+_i C^{n_i} (x) C^{mu_bi}``, so the bimodule multiplicity is ``mu^T``
    spread back over all blocks of ``D``.
    """
    idx = [b for b, x in enumerate(c.mult) if x > 0]
    if action.target.blocks != tuple(c.mult[b] for b in idx):
        raise NotUnital("action target must be End(c) with its zero blocks dropped")
    mu = np.zeros((len(c.mult), len(action.source.blocks)), dtype=int)
    for row, b in enumerate(idx):
        mu[b] = action.mult[row]
    return Bimodule(action.source, c.algebra, mu.T)


def fuse_with_object(H: Bimodule, action: AlgebraHom, c: ModuleObject) -> ModuleObject:
    """``H (x)_A c`` for a ``C``-``A`` bimodule ``H``; an object of ``D-Mod``."""
    if H.left != CC:
        raise AlgebraMismatch("H must be a right A-module (left algebra C)")
    Xc = object_bimodule(action, c)
    return ModuleObject(c.algebra, fuse(H, Xc).k[0])


def fuse_with_object_map(t: BimoduleMap, action: AlgebraHom, c: ModuleObject) -> ModuleMorphism:
    Xc = object_bimodule(action, c)
    m = fuse_maps(t, _id(Xc))
    return ModuleMorphism(
        ModuleObject(c.algebra, m.source.k[0]), ModuleObject(c.algebra, m.target.k[0]), list(m.cells[0])
    )


def object_unitor(action: AlgebraHom, c: ModuleObject) -> ModuleMorphism:
    """``L^2A (x)_A c -> c`` with ``L^2A`` a right ``A``-module."""
    A = action.source
    L = Bimodule(CC, A, np.array(A.blocks, dtype=int).reshape(1, -1))
    obj = fuse_with_object(L, action, c)
    if obj.mult != c.mult:
        raise NotUnital("action is not unital")
    return ModuleMorphism(obj, c, [np.eye(x) for x in c.mult])


def kron_equivalence(H: ModuleObject, K: ModuleObject) -> ModuleObject:
    """``H (x) K`` as a module over ``A (x) B``; multiplicities multiply."""
    AB = spatial_tensor(H.algebra, K.algebra)
    return ModuleObject(AB, [x * y for x in H.mult for y in K.mult])
