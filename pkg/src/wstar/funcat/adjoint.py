"""The adjoint involution on functors and its coherence unitaries.

``F^dagger`` is represented by the conjugate bimodule.  That is only the
implementation; the contract is the natural unitary

    <F c, d>  ->  <c, F^dagger d>

returned by :func:`verify_adjunction`, whose naturality is checked on matrix
units of ``End(c)`` and ``End(d)`` with pushforwards and pullbacks computed in
the corner model.

``phi`` and ``nu`` come in two forms.  The structural form is the bimodule
data of :mod:`wstar.bimod`.  The definitional form evaluates the composite of
adjunction unitaries and modular conjugations at the regular modules, and
reads the bimodule cells off the result.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..algebra import MultiMatrixAlgebra
from ..bimod import (
    Bimodule,
    BimoduleMap,
    as_bimodule,
    as_bimodule_map,
    as_module_morphism,
    associator,
    conjugate,
    conjugate_map,
    double_conjugate,
    fuse,
    fuse_maps,
    hexagon_residual,
    nu_unitary,
)
from ..errors import AlgebraMismatch, ShapeMismatch
from ..linalg import DEFAULT_TOL, AntiUnitary, unitary_residual
from ..modcat import ModuleMorphism, ModuleObject, hom_basis
from .dictionary import Functor, NatTransform, apply_functor, compose
from .inner import J_corner, connecting_unitary, inner_pullback, inner_pushforward

__all__ = [
    "adjoint",
    "adjoint_nat",
    "adjunction_fusion",
    "Adjunction",
    "verify_adjunction",
    "nat_square_residual",
    "double_adjoint_residual",
    "phi",
    "nu",
    "phi_definitional",
    "nu_definitional",
    "Coherence",
    "coherence_residuals",
]


def adjoint(F: Functor) -> Functor:
    return Functor(conjugate(F.bimodule))


def adjoint_nat(alpha: NatTransform) -> NatTransform:
    """``alpha^dagger: F^dagger -> G^dagger`` for ``alpha: F -> G``."""
    return NatTransform(adjoint(alpha.source), adjoint(alpha.target), conjugate_map(alpha.map))


def _I(X):
    return BimoduleMap.identity(X)


def adjunction_fusion(F: Functor, c: ModuleObject, d: ModuleObject) -> BimoduleMap:
    """``conj(X c) (x) d -> conj(c) (x) (conj(X) (x) d)`` in fusion coordinates."""
    X = F.bimodule
    if c.algebra != X.right or d.algebra != X.left:
        raise AlgebraMismatch("objects do not match the functor's endpoints")
    y, z = as_bimodule(c), as_bimodule(d)
    step = fuse_maps(nu_unitary(X, y).adjoint(), _I(z))
    return associator(conjugate(y), conjugate(X), z) @ step


def _adjunction_corner(F, c, d):
    Fc, Fd = apply_functor(F, c), apply_functor(adjoint(F), d)
    M = adjunction_fusion(F, c, d).cells[0][0]
    return connecting_unitary(c, Fd).T @ M @ connecting_unitary(Fc, d)


class Adjunction(NamedTuple):
    unitary: np.ndarray  # corner coordinates <F c, d> -> <c, F^dagger d>
    unitary_residual: float
    naturality_residual: float

    @property
    def residual(self) -> float:
        return max(self.unitary_residual, self.naturality_residual)

    def ok(self, tol=DEFAULT_TOL) -> bool:
        return self.residual <= tol


def verify_adjunction(F: Functor, c: ModuleObject, d: ModuleObject) -> Adjunction:
    """The adjunction unitary and its naturality on all matrix units of ``End(c)``, ``End(d)``."""
    Fd = adjoint(F)
    U = _adjunction_corner(F, c, d)
    ures = unitary_residual(U) if U.size else 0.0
    Fc, Gd = apply_functor(F, c), apply_functor(Fd, d)
    nat = 0.0
    if U.size:
        _, Ec = hom_basis(c, c)
        for g in Ec:
            lhs = U @ inner_pullback(apply_functor(F, g), d)
            rhs = inner_pullback(g, Gd) @ U
            nat = max(nat, float(np.abs(lhs - rhs).max()))
        _, Ed = hom_basis(d, d)
        for f in Ed:
            lhs = U @ inner_pushforward(f, Fc)
            rhs = inner_pushforward(apply_functor(Fd, f), c) @ U
            nat = max(nat, float(np.abs(lhs - rhs).max()))
    return Adjunction(U, ures, nat)


def nat_square_residual(alpha: NatTransform, c: ModuleObject, d: ModuleObject) -> float:
    """``adj_G o (alpha_c)_* = (alpha^dagger_d)_* o adj_F`` on ``<F c, d>``."""
    F, G = alpha.source, alpha.target
    ad = adjoint_nat(alpha)
    lhs = _adjunction_corner(G, c, d) @ inner_pullback(alpha.component(c), d)
    rhs = inner_pushforward(ad.component(d), c) @ _adjunction_corner(F, c, d)
    if lhs.size == 0:
        return 0.0
    return float(np.abs(lhs - rhs).max())


def double_adjoint_residual(alpha: NatTransform) -> float:
    """``alpha^{dagger dagger} o phi_F = phi_G o alpha``."""
    lhs = adjoint_nat(adjoint_nat(alpha)).map @ phi(alpha.source)
    rhs = phi(alpha.target) @ alpha.map
    return lhs.distance(rhs)


# --------------------------------------------------------------------------
# structural coherences


def phi(F: Functor) -> BimoduleMap:
    """``phi_F: F -> F^{dagger dagger}``."""
    return double_conjugate(F.bimodule)


def nu(F: Functor, G: Functor) -> BimoduleMap:
    """``nu_{F,G}: F^dagger o G^dagger -> (G o F)^dagger`` for ``F: A -> B``, ``G: B -> C``."""
    if G.source != F.target:
        raise AlgebraMismatch("functors are not composable")
    return nu_unitary(G.bimodule, F.bimodule)


# --------------------------------------------------------------------------
# definitional coherences


def _regular(A: MultiMatrixAlgebra) -> ModuleObject:
    return ModuleObject(A, A.blocks)


def _cells_from_regular(X: Bimodule, Y: Bimodule, m: ModuleMorphism):
    """Read a bimodule map ``X -> Y`` off its component at ``L^2 A``.

    On ``X (x) L^2 A`` a cell ``T_ji`` of a bimodule map acts as
    ``T_ji (x) I_{n_i}`` inside block ``j``; the cells are recovered by a
    partial trace and the residual measures the failure of that shape.
    """
    A = X.right
    n = A.blocks
    kx, ky = X.k, Y.k
    cells = {}
    resid = 0.0
    for j in range(len(X.left.blocks)):
        M = m.block_data[j]
        r0 = c0 = 0
        for i in range(len(n)):
            p, q = ky[j, i] * n[i], kx[j, i] * n[i]
            if M.shape[0] and M.shape[1]:
                # off-diagonal blocks (different i) must vanish
                off = M[r0:r0 + p, :].copy()
                off[:, c0:c0 + q] = 0
                resid = max(resid, float(np.abs(off).max(initial=0.0)))
            sub = M[r0:r0 + p, c0:c0 + q].reshape(ky[j, i], n[i], kx[j, i], n[i])
            T = np.einsum("aibi->ab", sub) / n[i]
            cells[(j, i)] = T
            if sub.size:
                resid = max(resid, float(np.abs(sub - np.einsum("ab,ij->aibj", T, np.eye(n[i]))).max()))
            r0, c0 = r0 + p, c0 + q
    return BimoduleMap(X, Y, cells), resid


def _pullback_from_corner(M, a1, a2, b):
    """Invert ``g -> g_*`` on ``<a1, b> -> <a2, b>``: block ``i`` is ``conj(g_i) (x) I``."""
    Mf = connecting_unitary(a2, b) @ M @ connecting_unitary(a1, b).T
    blocks, resid, r0, c0 = [], 0.0, 0, 0
    for i in range(len(b.mult)):
        p, q, nb = a2.mult[i] * b.mult[i], a1.mult[i] * b.mult[i], b.mult[i]
        sub = Mf[r0:r0 + p, c0:c0 + q].reshape(a2.mult[i], nb, a1.mult[i], nb)
        gbar = np.einsum("aibi->ab", sub) / nb if nb else np.zeros((a2.mult[i], a1.mult[i]))
        if sub.size:
            resid = max(resid, float(np.abs(sub - np.einsum("ab,ij->aibj", gbar, np.eye(nb))).max()))
        blocks.append(gbar.conj())
        r0, c0 = r0 + p, c0 + q
    if Mf.size:
        mask = np.ones_like(Mf, dtype=bool)
        r0 = c0 = 0
        for i in range(len(b.mult)):
            p, q = a2.mult[i] * b.mult[i], a1.mult[i] * b.mult[i]
            mask[r0:r0 + p, c0:c0 + q] = False
            r0, c0 = r0 + p, c0 + q
        resid = max(resid, float(np.abs(Mf[mask]).max(initial=0.0)))
    return ModuleMorphism(a1, a2, blocks), resid


def _pushforward_from_corner(M, a, b1, b2):
    """Invert ``f -> f_*`` on ``<a, b1> -> <a, b2>``: block ``i`` is ``I (x) f_i``."""
    Mf = connecting_unitary(a, b2) @ M @ connecting_unitary(a, b1).T
    blocks, resid, r0, c0 = [], 0.0, 0, 0
    mask = np.ones_like(Mf, dtype=bool)
    for i in range(len(a.mult)):
        na = a.mult[i]
        p, q = na * b2.mult[i], na * b1.mult[i]
        sub = Mf[r0:r0 + p, c0:c0 + q].reshape(na, b2.mult[i], na, b1.mult[i])
        f = np.einsum("iaib->ab", sub) / na if na else np.zeros((b2.mult[i], b1.mult[i]))
        if sub.size:
            resid = max(resid, float(np.abs(sub - np.einsum("ij,ab->iajb", np.eye(na), f)).max()))
        blocks.append(f)
        mask[r0:r0 + p, c0:c0 + q] = False
        r0, c0 = r0 + p, c0 + q
    if Mf.size:
        resid = max(resid, float(np.abs(Mf[mask]).max(initial=0.0)))
    return ModuleMorphism(b1, b2, blocks), resid


class Definitional(NamedTuple):
    map: BimoduleMap
    residual: float  # failure of the composite to have the expected shape


def phi_definitional(F: Functor) -> Definitional:
    """``phi_F`` from ``<Fc,d> -> <c,F'd> -J-> <F'd,c> -> <d,F''c> -J^{-1}-> <F''c,d>``.

    ``c = L^2 A`` and ``d = L^2 B``; the composite is the pullback along
    ``(phi_F)_c`` and the bimodule cells are read off from it.
    """
    X = F.bimodule
    Fd, Fdd = adjoint(F), adjoint(adjoint(F))
    c, d = _regular(X.right), _regular(X.left)
    u1 = AntiUnitary(_adjunction_corner(F, c, d), False)
    J1 = J_corner(c, apply_functor(Fd, d))
    u2 = AntiUnitary(_adjunction_corner(Fd, d, c), False)
    J2 = J_corner(apply_functor(Fdd, c), d).inverse()
    comp = J2 @ u2 @ J1 @ u1
    if comp.conjugate:
        raise ShapeMismatch("the phi composite is not linear")
    g, r1 = _pullback_from_corner(comp.matrix, apply_functor(F, c), apply_functor(Fdd, c), d)
    T, r2 = _cells_from_regular(X, conjugate(conjugate(X)), g)
    return Definitional(T, max(r1, r2))


def nu_definitional(F: Functor, G: Functor) -> Definitional:
    """``nu_{F,G}`` from ``<c,F'G'd> -> <Fc,G'd> -> <GFc,d> -> <c,(GF)'d>``.

    The middle object ``G(F c)`` is carried to ``(G o F) c`` by the associator;
    the composite is the pushforward along ``(nu_{F,G})_d`` precomposed with
    the associator ``(F'G')d = F'(G'd)``.
    """
    X, Y = F.bimodule, G.bimodule
    if G.source != F.target:
        raise AlgebraMismatch("functors are not composable")
    GF = compose(G, F)
    c, d = _regular(X.right), _regular(Y.left)
    Fc = apply_functor(F, c)
    Gd = apply_functor(adjoint(G), d)
    a1 = _adjunction_corner(F, c, Gd).conj().T
    a2 = _adjunction_corner(G, Fc, d).conj().T
    yc = as_bimodule(c)
    assoc = associator(Y, X, yc).adjoint()  # Y (X c) -> (Y X) c
    re = inner_pullback(as_module_morphism(assoc), d)
    a3 = _adjunction_corner(GF, c, d)
    comp = a3 @ re @ a2 @ a1
    FdGd = apply_functor(adjoint(F), Gd)
    GFd = apply_functor(adjoint(GF), d)
    f, r1 = _pushforward_from_corner(comp, c, FdGd, GFd)
    # undo the associator (X' Y') d -> X' (Y' d) to land on a bimodule map at d
    Xb, Yb = conjugate(X), conjugate(Y)
    al = as_module_morphism(associator(Xb, Yb, as_bimodule(d)))
    f = f @ al
    src = fuse(Xb, Yb)
    tgt = conjugate(fuse(Y, X))
    T, r2 = _cells_from_regular(src, tgt, f)
    return Definitional(T, max(r1, r2))


# --------------------------------------------------------------------------
# coherence lemma


class Coherence(NamedTuple):
    phi_dagger: float  # phi_{F^dagger} = (phi_F)^dagger
    nu_interchange: float
    phi_composite: float  # phi_{F o G} = (nu_{G,F})^dagger nu_{F^dagger,G^dagger} (phi_F o phi_G)
    definitional: float  # structural forms against definitional ones

    @property
    def residual(self) -> float:
        return max(self)


def coherence_residuals(F: Functor, G: Functor, H: Functor, definitional: bool = True) -> Coherence:
    """The three coherence identities for ``F: A -> B``, ``G: B -> C``, ``H: C -> D``.

    ``phi_{F o G}`` is taken for the composable pair ``(G, F)`` as ``G o F``.
    """
    X, Y, Z = F.bimodule, G.bimodule, H.bimodule
    r1 = phi(adjoint(F)).distance(adjoint_nat(NatTransform(F, adjoint(adjoint(F)), phi(F))).map)
    r2 = hexagon_residual(X, Y, Z)
    # for the pair (G, F): phi_{GF} = (nu_{F,G})^dagger nu_{G',F'} (phi_G o phi_F)
    rhs = (
        conjugate_map(nu(F, G))
        @ nu(adjoint(G), adjoint(F))
        @ fuse_maps(phi(G), phi(F))
    )
    r3 = phi(compose(G, F)).distance(rhs)
    r4 = 0.0
    if definitional:
        for T, D in (
            (phi(F), phi_definitional(F)),
            (phi(G), phi_definitional(G)),
            (nu(F, G), nu_definitional(F, G)),
            (nu(G, H), nu_definitional(G, H)),
        ):
            r4 = max(r4, T.distance(D.map), D.residual)
    return Coherence(r1, r2, r3, r4)
