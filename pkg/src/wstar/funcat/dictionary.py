"""Functors between module categories and the bimodules representing them.

A functor ``A-Mod -> B-Mod`` is stored as the ``B``-``A`` bimodule ``X`` and
acts by ``c -> X (x)_A c``.  ``bimodule_from_functor`` goes the other way
for an arbitrary black box: it evaluates the box on ``L^2 A`` and on right
multiplications, and rebuilds ``X`` together with an explicit frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..algebra import AlgebraHom, MultiMatrixAlgebra
from ..bimod import (
    CC,
    Bimodule,
    BimoduleMap,
    as_bimodule,
    as_bimodule_map,
    as_module,
    as_module_morphism,
    fuse,
    fuse_maps,
)
from ..errors import (
    AlgebraMismatch,
    InconsistentAction,
    NotAdditive,
    NotOrthogonal,
    NotUnital,
    ShapeMismatch,
    WStarError,
)
from ..linalg import DEFAULT_TOL, block_diag, intertwiner_basis, range_isometry, scale_of
from ..modcat import ModuleMorphism, ModuleObject, direct_sum, hom_basis

__all__ = [
    "Functor",
    "NatTransform",
    "identity_functor",
    "compose",
    "apply_functor",
    "functor_box",
    "bimodule_from_functor",
    "extract_bimodule",
    "Extraction",
    "nat_hom_basis",
    "reconstruct_functor",
    "expansion",
    "matrix_element_residual",
    "riesz_roundtrip",
    "faithful",
    "dominant",
]


@dataclass(frozen=True)
class Functor:
    """``X (x)_A - : A-Mod -> B-Mod`` for a ``B``-``A`` bimodule ``X``."""

    bimodule: Bimodule

    @property
    def source(self) -> MultiMatrixAlgebra:
        return self.bimodule.right

    @property
    def target(self) -> MultiMatrixAlgebra:
        return self.bimodule.left

    def __call__(self, H):
        return apply_functor(self, H)


@dataclass(frozen=True, eq=False)
class NatTransform:
    source: Functor
    target: Functor
    map: BimoduleMap

    def __post_init__(self):
        if self.map.source != self.source.bimodule or self.map.target != self.target.bimodule:
            raise ShapeMismatch("natural transformation map does not match its functors")

    def component(self, c: ModuleObject) -> ModuleMorphism:
        """``alpha_c = alpha (x) id_c``."""
        return as_module_morphism(fuse_maps(self.map, BimoduleMap.identity(as_bimodule(c))))

    def __matmul__(self, other: "NatTransform") -> "NatTransform":
        return NatTransform(other.source, self.target, self.map @ other.map)

    def adjoint(self) -> "NatTransform":
        return NatTransform(self.target, self.source, self.map.adjoint())

    def norm(self) -> float:
        return self.map.norm()


def identity_functor(A: MultiMatrixAlgebra) -> Functor:
    return Functor(Bimodule.regular(A))


def compose(G: Functor, F: Functor) -> Functor:
    """``G o F``, represented by ``X_G (x) X_F``."""
    if G.source != F.target:
        raise AlgebraMismatch("functors are not composable")
    return Functor(fuse(G.bimodule, F.bimodule))


def apply_functor(F: Functor, H):
    """Image of an object or morphism: ``X (x) H`` resp. ``id_X (x) f``."""
    X = F.bimodule
    if isinstance(H, ModuleObject):
        if H.algebra != X.right:
            raise AlgebraMismatch("object is not over the functor's source algebra")
        return as_module(fuse(X, as_bimodule(H)))
    if isinstance(H, ModuleMorphism):
        if H.source.algebra != X.right:
            raise AlgebraMismatch("morphism is not over the functor's source algebra")
        return as_module_morphism(fuse_maps(BimoduleMap.identity(X), as_bimodule_map(H)))
    raise TypeError(f"cannot apply a functor to {type(H).__name__}")


def functor_box(F: Functor) -> Callable:
    """``apply_functor(F, .)`` as an opaque callable."""
    return lambda H: apply_functor(F, H)


# --------------------------------------------------------------------------
# functor -> bimodule


class Extraction(NamedTuple):
    bimodule: Bimodule
    frame: ModuleMorphism  # standard realisation of X -> F(L^2 A), unitary
    residual: float  # intertwining defect of the frame for the right action


def _right_mult(A: MultiMatrixAlgebra, i: int, r: int, c: int) -> ModuleMorphism:
    """Right multiplication by ``E_rc`` in block ``i`` as an endomorphism of ``L^2A``.

    On row-major ``vec`` this is ``1 (x) E_rc^T``; the multiplicity factor of
    the regular module is the column index, so the block is ``E_cr``.
    """
    reg = ModuleObject.regular(A)
    blocks = [np.zeros((n, n)) for n in A.blocks]
    blocks[i][c, r] = 1.0
    return ModuleMorphism(reg, reg, blocks)


def _probe(box, A: MultiMatrixAlgebra, B: MultiMatrixAlgebra, tol, rng):
    """Additivity, *-preservation and multiplicativity on a small probe set."""
    reg = ModuleObject.regular(A)
    simples = [ModuleObject.simple(A, i) for i in range(len(A.blocks))]
    S, _ = direct_sum(simples + [reg])
    img = box(S)
    parts = [box(s) for s in simples + [reg]]
    if not isinstance(img, ModuleObject) or img.algebra != B:
        raise NotAdditive("box must send modules to modules over one algebra")
    if any(p.algebra != B for p in parts):
        raise NotAdditive("box changes target algebra between objects")
    if list(img.mult) != list(np.sum([p.mult for p in parts], axis=0)):
        raise NotAdditive("box does not preserve direct sums")
    if not box(ModuleObject.zero(A)).is_zero():
        raise NotAdditive("box does not send 0 to 0")

    def rand(H, K):
        return ModuleMorphism(
            H, K, [rng.normal(size=(y, x)) + 1j * rng.normal(size=(y, x)) for x, y in zip(H.mult, K.mult)]
        )

    f, g = rand(reg, reg), rand(reg, reg)
    Ff, Fg = box(f), box(g)
    checks = [
        (box(f + g), Ff + Fg),
        (box(f * 2.5), Ff * 2.5),
        (box(f.adjoint()), Ff.adjoint()),
        (box(f @ g), Ff @ Fg),
        (box(ModuleMorphism.identity(reg)), ModuleMorphism.identity(box(reg))),
    ]
    for lhs, rhs in checks:
        if lhs.source != rhs.source or lhs.target != rhs.target:
            raise NotAdditive("box is inconsistent on morphism endpoints")
        if lhs.distance(rhs) > tol * 10 * scale_of(*rhs.block_data, *lhs.block_data):
            raise NotAdditive("box failed an additivity / * / composition probe")


def extract_bimodule(box: Callable, A: MultiMatrixAlgebra, tol=DEFAULT_TOL, seed=0) -> Extraction:
    """Rebuild the bimodule ``F(L^2 A)`` of a black-box functor with a frame.

    ``k_ji`` is the rank of ``F(right mult by E_11^(i))`` on block ``j``;
    the frame sends the standard basis vector ``(j, i, alpha, nu)`` to
    ``F(right mult by E_1nu^(i)) e_alpha`` with ``e_alpha`` an orthonormal
    basis of that range.
    """
    reg = ModuleObject.regular(A)
    FL = box(reg)
    B = FL.algebra
    _probe(box, A, B, tol, np.random.default_rng(seed))
    r, s = len(B.blocks), len(A.blocks)
    k = np.zeros((r, s), dtype=int)
    ranges = {}
    for i in range(s):
        P = box(_right_mult(A, i, 0, 0))
        for j in range(r):
            io = range_isometry(P.block_data[j], tol * 10)
            ranges[(j, i)] = io
            k[j, i] = io.shape[1]
    X = Bimodule(B, A, k)
    std = as_module(fuse(X, as_bimodule(reg)))
    if std.mult != FL.mult:
        raise NotAdditive("ranks of the block units do not add up to F(L^2A)")
    moves = {(i, nu): box(_right_mult(A, i, 0, nu)) for i in range(s) for nu in range(A.blocks[i])}
    frame_blocks = []
    for j in range(r):
        cols = []
        for i in range(s):
            io = ranges[(j, i)]
            for a in range(io.shape[1]):
                for nu in range(A.blocks[i]):
                    cols.append(moves[(i, nu)].block_data[j] @ io[:, a])
        frame_blocks.append(np.stack(cols, axis=1) if cols else np.zeros((FL.mult[j], 0)))
    frame = ModuleMorphism(std, FL, frame_blocks)
    # the frame must carry the standard right action (on nu) to F(right mult)
    resid = 0.0
    for i in range(s):
        n = A.blocks[i]
        for rr in range(n):
            for cc in range(n):
                Fa = box(_right_mult(A, i, rr, cc))
                Sa = apply_functor(Functor(X), _right_mult(A, i, rr, cc))
                resid = max(resid, (Fa @ frame).distance(frame @ Sa))
    if not frame.is_unitary(tol * 10):
        raise NotAdditive("frame built from the box is not unitary")
    return Extraction(X, frame, resid)


def bimodule_from_functor(box: Callable, A: MultiMatrixAlgebra, tol=DEFAULT_TOL) -> Bimodule:
    return extract_bimodule(box, A, tol).bimodule


def nat_hom_basis(F: Functor, G: Functor, tol=DEFAULT_TOL) -> list:
    """Natural transformations ``F -> G`` as bimodule intertwiners, solved numerically."""
    X, Y = F.bimodule, G.bimodule
    if X.left != Y.left or X.right != Y.right:
        raise AlgebraMismatch("functors with different endpoints")
    if X.dim == 0 or Y.dim == 0:
        return []
    lhs = [X.left_action(g) for g in X.left.generators()] + [X.right_action(g) for g in X.right.generators()]
    rhs = [Y.left_action(g) for g in Y.left.generators()] + [Y.right_action(g) for g in Y.right.generators()]
    return intertwiner_basis(lhs, rhs, tol, star_closed=True)


# --------------------------------------------------------------------------
# reconstruction


def _check_orthogonal(gens):
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            if hom_basis(gens[a], gens[b])[0]:
                raise NotOrthogonal(f"generators {a} and {b} are not orthogonal")


def reconstruct_functor(images: Sequence, tol=DEFAULT_TOL) -> Functor:
    """Functor from its values ``(c_i, F(c_i), action_i)`` on orthogonal generators.

    ``action_i: End(c_i) -> End(F(c_i))`` (zero blocks dropped on both
    sides) records how ``End(c_i)`` acts on ``F(c_i)``.  On the simple module
    of block ``a`` of ``c_i`` the functor gives
    ``<c_i, S_a> (x)_{End(c_i)} F(c_i)``, whose multiplicity on block ``j``
    is the multiplicity of the ``a``-th block of ``End(c_i)`` inside the
    ``j``-th block of ``End(F(c_i))``.
    """
    if not images:
        raise ShapeMismatch("need at least one generator image")
    gens = [c for c, _, _ in images]
    A = gens[0].algebra
    B = images[0][1].algebra
    _check_orthogonal(gens)
    k = np.zeros((len(B.blocks), len(A.blocks)), dtype=int)
    for c, Fc, action in images:
        if not isinstance(action, AlgebraHom):
            raise InconsistentAction("action must be an AlgebraHom")
        src = [a for a, x in enumerate(c.mult) if x > 0]
        tgt = [j for j, y in enumerate(Fc.mult) if y > 0]
        if action.source.blocks != tuple(c.mult[a] for a in src) or action.target.blocks != tuple(
            Fc.mult[j] for j in tgt
        ):
            raise InconsistentAction("action must go End(c) -> End(F(c))")
        if action.residual() > tol * 10 * max(1.0, action.target.dim):
            raise InconsistentAction("action is not a *-homomorphism")
        for row, j in enumerate(tgt):
            for col, a in enumerate(src):
                k[j, a] = action.mult[row, col]
    F = Functor(Bimodule(B, A, k))
    for c, Fc, _ in images:
        if apply_functor(F, c).mult != Fc.mult:
            raise InconsistentAction("reconstructed functor disagrees with a provided image")
    return F


def expansion(x: ModuleObject, generators: Sequence[ModuleObject]) -> ModuleMorphism:
    """Unitary ``+_i c_i (x)_{End(c_i)} <c_i, x> -> x`` for orthogonal generators.

    ``c_i`` is the ``A``-``End(c_i)`` bimodule with a single copy on each
    supported block and ``<c_i, x>`` the ``End(c_i)``-``C`` bimodule carrying
    ``x_a`` on the block coming from ``a``; their fusion multiplicities are
    those of ``x`` on the support of ``c_i``.
    """
    _check_orthogonal(list(generators))
    A = x.algebra
    total = np.zeros(len(A.blocks), dtype=int)
    for c in generators:
        sup = [a for a, v in enumerate(c.mult) if v > 0]
        E = MultiMatrixAlgebra([c.mult[a] for a in sup])
        cb = np.zeros((len(A.blocks), len(sup)), dtype=int)
        for col, a in enumerate(sup):
            cb[a, col] = 1
        inner = Bimodule(E, CC, np.array([x.mult[a] for a in sup], dtype=int).reshape(-1, 1))
        total += fuse(Bimodule(A, E, cb), inner).k[:, 0]
    S = ModuleObject(A, total)
    if S.mult != x.mult:
        raise NotOrthogonal("generators do not generate x")
    return ModuleMorphism(S, x, [np.eye(v) for v in x.mult])


def matrix_element_residual(F: Functor, x: ModuleObject) -> float:
    """``F(x) = +_{i,j} <c_i, x> (x) X_ij (x) d_j`` with simple generators.

    ``X_ij = <d_j, F(c_i)>`` is measured by evaluating the functor on the
    simple ``c_i``; returns the largest multiplicity discrepancy.
    """
    A, B = F.source, F.target
    Xij = np.array(
        [[apply_functor(F, ModuleObject.simple(A, i)).mult[j] for j in range(len(B.blocks))] for i in range(len(A.blocks))],
        dtype=int,
    )
    two_sided = np.array(x.mult, dtype=int) @ Xij if len(A.blocks) else np.zeros(len(B.blocks), int)
    direct = np.array(apply_functor(F, x).mult, dtype=int)
    return float(np.abs(two_sided - direct).max(initial=0))


# --------------------------------------------------------------------------
# Riesz representation


def riesz_roundtrip(x: ModuleObject, tol=DEFAULT_TOL):
    """``x -> <-, x> -> x``: representable functor, its bimodule, and back.

    The functor ``w -> <w, x> = conj(w) (x)_A x`` is linear on the conjugate
    category; its inputs are modules of ``A`` read through ``w -> conj(w)``.
    The extracted ``C``-``A`` bimodule is conjugated back to an ``A``-module.
    Returns ``(recovered, unitary recovered -> x)``.
    """
    A = x.algebra
    xb = as_bimodule(x)

    def box(H):
        if isinstance(H, ModuleObject):
            return as_module(fuse(Bimodule(CC, A, np.array(H.mult).reshape(1, -1)), xb))
        # a morphism of conj(w), given by its conjugate blocks
        src = Bimodule(CC, A, np.array(H.source.mult).reshape(1, -1))
        tgt = Bimodule(CC, A, np.array(H.target.mult).reshape(1, -1))
        m = fuse_maps(BimoduleMap(src, tgt, [list(H.block_data)]), BimoduleMap.identity(xb))
        one = ModuleObject(CC, [m.source.mult[0][0]])
        two = ModuleObject(CC, [m.target.mult[0][0]])
        return ModuleMorphism(one, two, [m.cells[0][0]])

    ext = extract_bimodule(box, A, tol)
    X = ext.bimodule  # C-A bimodule
    recovered = ModuleObject(A, X.k[0])
    # The frame is C-linear from (i, alpha, nu) to the coordinates (i, mu, beta)
    # of conj(L^2A) (x) x; on block i it is kron-structured, and reading it through
    # the conjugation of the C-A bimodule gives a unitary recovered -> x.
    W = ext.frame.block_data[0]
    blocks = []
    off_src = off_tgt = 0
    for i, n in enumerate(A.blocks):
        a, b = recovered.mult[i], x.mult[i]
        Wi = W[off_tgt:off_tgt + n * b, off_src:off_src + a * n]
        T = Wi.reshape(n, b, a, n)  # (mu, beta) x (alpha, nu)
        u = np.einsum("mbam->ba", T) / n
        if np.linalg.norm(T - np.einsum("ba,mn->mban", u, np.eye(n))) > tol * 10 * max(1.0, np.sqrt(n * b)):
            raise WStarError("frame of the representable functor is not block diagonal")
        blocks.append(u)
        off_src += a * n
        off_tgt += n * b
    return recovered, ModuleMorphism(recovered, x, blocks)


def faithful(F: Functor) -> bool:
    return bool(np.all(F.bimodule.k.sum(axis=0) > 0))


def dominant(F: Functor) -> bool:
    return bool(np.all(F.bimodule.k.sum(axis=1) > 0))
