"""The Hilb-valued inner product ``<a, b>`` of two modules.

Two independent realisations are built:

* **corner**: ``p_b L^2(End(a + b)) p_a``; coordinates ``(i, beta, alpha)``
  with ``beta`` a row in the ``b``-range and ``alpha`` a column in the
  ``a``-range of block ``i``.
* **fusion**: ``conj(a) (x)_A b``; coordinates ``(i, alpha, beta)``.

``End(b)`` acts on the left and ``End(a)`` on the right.  The connecting
unitary between the two is blockwise transposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..algebra import AlgebraElement, commutant, l2_standard_form
from ..bimod import (
    Bimodule,
    BimoduleMap,
    as_bimodule,
    as_bimodule_map,
    associator,
    conj_antiunitary,
    conjugate,
    conjugate_map,
    double_conjugate,
    fuse,
    fuse_maps,
    left_unitor,
    nu_unitary,
)
from ..errors import AlgebraMismatch, ShapeMismatch
from ..linalg import DEFAULT_TOL, AntiUnitary, unitary_residual
from ..modcat import ModuleMorphism, ModuleObject, direct_sum, endomorphism_algebra, hom_basis

__all__ = [
    "HilbBimodule",
    "hilb_inner_product",
    "via_corner",
    "via_fusion",
    "connecting_unitary",
    "InnerComparison",
    "compare_models",
    "J_corner",
    "J_fusion",
    "inner_pushforward",
    "inner_pullback",
    "pushforward_fusion",
    "pullback_fusion",
    "inner_direct_sum_unitary",
    "self_identification",
    "transport_unitary",
    "conjugation_transport",
]


@dataclass(frozen=True, eq=False)
class HilbBimodule:
    """A concrete Hilbert space with commuting actions of ``End(b)`` and ``End(a)``."""

    a: ModuleObject
    b: ModuleObject
    dimension: int
    labels: tuple
    left: Callable = field(repr=False)  # f in End(b) -> matrix
    right: Callable = field(repr=False)  # g in End(a) -> matrix
    model: str = "corner"

    def actions_commute(self) -> float:
        _, Lb = hom_basis(self.b, self.b)
        _, Ra = hom_basis(self.a, self.a)
        worst = 0.0
        for f in Lb:
            lf = self.left(f)
            for g in Ra:
                rg = self.right(g)
                worst = max(worst, float(np.abs(lf @ rg - rg @ lf).max(initial=0.0)))
        return worst

    def mutual_commutants(self, tol=DEFAULT_TOL) -> bool:
        """Whether the two action images are each other's commutants."""
        if self.dimension == 0:
            return True
        _, Lb = hom_basis(self.b, self.b)
        _, Ra = hom_basis(self.a, self.a)
        L = [self.left(f) for f in Lb]
        R = [self.right(g) for g in Ra]
        ok = True
        for ops, others in ((L, R), (R, L)):
            comm = commutant(ops, tol)
            span = _span_dim(others, tol)
            if len(comm) != span:
                ok = False
                continue
            # the other algebra must sit inside the commutant
            C = np.stack([c.reshape(-1) for c in comm], axis=1)
            for o in others:
                v = o.reshape(-1)
                if np.linalg.norm(v - C @ (C.conj().T @ v)) > tol * 10 * max(1.0, np.linalg.norm(v)):
                    ok = False
        return ok


def _span_dim(mats, tol):
    nz = [m for m in mats if m.size]
    if not nz:
        return 0
    M = np.stack([m.reshape(-1) for m in nz], axis=1)
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def _same(a, b):
    if a.algebra != b.algebra:
        raise AlgebraMismatch("objects over different algebras")


# --------------------------------------------------------------------------
# corner model


class _Ambient(NamedTuple):
    E: object  # MultiMatrixAlgebra End(s)
    idx: list  # algebra blocks kept in E
    offsets: list  # start of each summand inside each block


def _ambient(objs: Sequence[ModuleObject]) -> _Ambient:
    s, _ = direct_sum(list(objs))
    E, idx = endomorphism_algebra(s)
    offsets = []
    for i in idx:
        o, acc = [], 0
        for c in objs:
            o.append(acc)
            acc += c.mult[i]
        offsets.append(o)
    return _Ambient(E, idx, offsets)


def _corner_coords(amb: _Ambient, objs, row_obj: int, col_obj: int) -> np.ndarray:
    """Rows ``(t, r, c)`` of ``L^2 E`` spanning ``p_row L^2 E p_col``, in corner order."""
    out = []
    for t, i in enumerate(amb.idx):
        r0, c0 = amb.offsets[t][row_obj], amb.offsets[t][col_obj]
        for r in range(objs[row_obj].mult[i]):
            for c in range(objs[col_obj].mult[i]):
                out.append((t, r0 + r, c0 + c))
    return np.array(out, dtype=int).reshape(-1, 3)


def _flat(amb: _Ambient, coords: np.ndarray) -> np.ndarray:
    n = np.array(amb.E.blocks, dtype=int)
    off = np.array(amb.E.l2_offsets, dtype=int)
    t, r, c = coords.T
    return off[t] + r * n[t] + c


def _compressed(x: AlgebraElement, rows: np.ndarray, cols: np.ndarray, side: str) -> np.ndarray:
    """``V_rows^* L(x) V_cols`` (or with ``R(x)``) without forming the full operator.

    On ``L^2 M_n`` the left action is ``kron(x, I)`` and the right action
    ``kron(I, x^T)``, so a matrix entry between ``(t, r, c)`` and
    ``(t', r', c')`` is ``x_t[r, r'] [c = c']`` resp. ``x_t[c', c] [r = r']``.
    """
    out = np.zeros((len(rows), len(cols)), complex)
    if not (len(rows) and len(cols)):
        return out
    tr, rr, cr = (v[:, None] for v in rows.T)
    tc, rc, cc = (v[None, :] for v in cols.T)
    if side == "left":
        mask, ri, ci = (tr == tc) & (cr == cc), rr, rc
    else:
        mask, ri, ci = (tr == tc) & (rr == rc), cc, cr
    p, q = np.nonzero(mask)
    t = rows[p, 0]
    ri = np.broadcast_to(ri, mask.shape)[p, q]
    ci = np.broadcast_to(ci, mask.shape)[p, q]
    for s, blk in enumerate(x.block_data):
        sel = t == s
        out[p[sel], q[sel]] = blk[ri[sel], ci[sel]]
    return out


def _embed(amb: _Ambient, objs, f: ModuleMorphism, row_obj: int, col_obj: int) -> AlgebraElement:
    """``f: objs[col] -> objs[row]`` as an element of ``End(+ objs)``."""
    blocks = []
    for t, i in enumerate(amb.idx):
        n = amb.E.blocks[t]
        m = np.zeros((n, n), complex)
        r0, c0 = amb.offsets[t][row_obj], amb.offsets[t][col_obj]
        blk = f.block_data[i]
        m[r0:r0 + blk.shape[0], c0:c0 + blk.shape[1]] = blk
        blocks.append(m)
    return AlgebraElement(amb.E, blocks)


def _projection(amb, objs, k):
    return _embed(amb, objs, ModuleMorphism.identity(objs[k]), k, k)


def _corner_support(amb, objs, row_obj, col_obj) -> np.ndarray:
    """Diagonal of ``L(p_row) R(p_col)`` on ``L^2 E``; both factors are diagonal."""
    pr, pc = _projection(amb, objs, row_obj), _projection(amb, objs, col_obj)
    parts = [
        np.kron(np.diag(a).real, np.ones(len(a))) * np.kron(np.ones(len(a)), np.diag(b).real)
        for a, b in zip(pr.block_data, pc.block_data)
    ]
    return np.concatenate(parts) if parts else np.zeros(0)


def via_corner(a: ModuleObject, b: ModuleObject) -> HilbBimodule:
    _same(a, b)
    objs = [a, b]
    amb = _ambient(objs)
    coords = _corner_coords(amb, objs, 1, 0)
    support = np.flatnonzero(_corner_support(amb, objs, 1, 0) > 0.5)
    if not np.array_equal(np.sort(_flat(amb, coords)), support):
        raise ShapeMismatch("corner coordinates do not span p_b L^2 p_a")
    labels = tuple((amb.idx[t], r - amb.offsets[t][1], c) for t, r, c in coords)

    def left(f):
        return _compressed(_embed(amb, objs, f, 1, 1), coords, coords, "left")

    def right(g):
        return _compressed(_embed(amb, objs, g, 0, 0), coords, coords, "right")

    return HilbBimodule(a, b, len(coords), labels, left, right, "corner")


hilb_inner_product = via_corner


# --------------------------------------------------------------------------
# fusion model


def via_fusion(a: ModuleObject, b: ModuleObject) -> HilbBimodule:
    _same(a, b)
    ab, bb = as_bimodule(a), as_bimodule(b)
    ca = conjugate(ab)
    Z = fuse(ca, bb)
    labels = tuple((i, al, be) for i in range(len(a.mult)) for al in range(a.mult[i]) for be in range(b.mult[i]))

    def left(f):
        return fuse_maps(BimoduleMap.identity(ca), as_bimodule_map(f)).cells[0][0]

    def right(g):
        return fuse_maps(conjugate_map(as_bimodule_map(g.adjoint())), BimoduleMap.identity(bb)).cells[0][0]

    return HilbBimodule(a, b, Z.dim, labels, left, right, "fusion")


def connecting_unitary(a: ModuleObject, b: ModuleObject) -> np.ndarray:
    """Corner ``(i, beta, alpha)`` -> fusion ``(i, alpha, beta)``."""
    src = [(i, al, be) for i in range(len(a.mult)) for be in range(b.mult[i]) for al in range(a.mult[i])]
    tgt = {(i, al, be): p for p, (i, al, be) in enumerate(
        (i, al, be) for i in range(len(a.mult)) for al in range(a.mult[i]) for be in range(b.mult[i])
    )}
    U = np.zeros((len(src), len(src)))
    for p, key in enumerate(src):
        U[tgt[key], p] = 1.0
    return U


class InnerComparison(NamedTuple):
    corner_dim: int
    fusion_dim: int
    formula_dim: int
    unitary: np.ndarray
    residual: float


def compare_models(a: ModuleObject, b: ModuleObject) -> InnerComparison:
    """Both realisations, the connecting unitary, and its intertwining residual."""
    C, F = via_corner(a, b), via_fusion(a, b)
    U = connecting_unitary(a, b)
    resid = unitary_residual(U) if U.size else 0.0
    _, Lb = hom_basis(b, b)
    _, Ra = hom_basis(a, a)
    for f in Lb:
        resid = max(resid, float(np.abs(U @ C.left(f) - F.left(f) @ U).max(initial=0.0)))
    for g in Ra:
        resid = max(resid, float(np.abs(U @ C.right(g) - F.right(g) @ U).max(initial=0.0)))
    formula = int(sum(x * y for x, y in zip(a.mult, b.mult)))
    return InnerComparison(C.dimension, F.dimension, formula, U, resid)


# --------------------------------------------------------------------------
# modular conjugations


def J_corner(a: ModuleObject, b: ModuleObject) -> AntiUnitary:
    """``J_{a,b}: <a,b> -> <b,a>`` from the modular conjugation of ``L^2 End(a + b)``.

    ``J`` moves ``p_b L^2 p_a`` to ``p_a L^2 p_b``; the swap ``End(a+b) = End(b+a)``
    then identifies that with the corner coordinates of ``<b, a>``.
    """
    objs = [a, b]
    amb = _ambient(objs)
    src_rows = _flat(amb, _corner_coords(amb, objs, 1, 0))
    tgt_rows = _flat(amb, _corner_coords(amb, objs, 0, 1))
    J = l2_standard_form(amb.E).J
    return AntiUnitary(J.matrix[np.ix_(tgt_rows, src_rows)], True)


def J_fusion(a: ModuleObject, b: ModuleObject) -> AntiUnitary:
    """``conj(a) (x) b -> conj(b) (x) a``: ``C^{-1} o nu(conj b, a) o (1 (x) phi_b)``."""
    ab, bb = as_bimodule(a), as_bimodule(b)
    lin = nu_unitary(conjugate(bb), ab) @ fuse_maps(BimoduleMap.identity(conjugate(ab)), double_conjugate(bb))
    Cinv = conj_antiunitary(fuse(conjugate(bb), ab)).inverse()
    return Cinv @ AntiUnitary(lin.cells[0][0], False)


# --------------------------------------------------------------------------
# functoriality


def inner_pushforward(f: ModuleMorphism, a: ModuleObject) -> np.ndarray:
    """``f_*: <a, b1> -> <a, b2>``, left multiplication inside ``L^2 End(a + b1 + b2)``."""
    _same(a, f.source)
    objs = [a, f.source, f.target]
    amb = _ambient(objs)
    return _compressed(
        _embed(amb, objs, f, 2, 1), _corner_coords(amb, objs, 2, 0), _corner_coords(amb, objs, 1, 0), "left"
    )


def inner_pullback(g: ModuleMorphism, b: ModuleObject) -> np.ndarray:
    """``g_*: <a1, b> -> <a2, b>``, right multiplication by ``g^*``."""
    _same(b, g.source)
    objs = [g.source, g.target, b]
    amb = _ambient(objs)
    return _compressed(
        _embed(amb, objs, g.adjoint(), 0, 1), _corner_coords(amb, objs, 2, 1), _corner_coords(amb, objs, 2, 0), "right"
    )


def pushforward_fusion(f: BimoduleMap, a: Bimodule) -> BimoduleMap:
    """``id_{conj a} (x) f`` for bimodules (the fusion form of ``f_*``)."""
    return fuse_maps(BimoduleMap.identity(conjugate(a)), f)


def pullback_fusion(g: BimoduleMap, b: Bimodule) -> BimoduleMap:
    """``conj(g) (x) id_b``, the fusion form of ``g_*``."""
    return fuse_maps(conjugate_map(g), BimoduleMap.identity(b))


def inner_direct_sum_unitary(a: ModuleObject, bs: Sequence[ModuleObject]) -> np.ndarray:
    """``<a, +_k b_k> -> +_k <a, b_k>`` in corner coordinates."""
    S, _ = direct_sum(list(bs))
    src = []
    for i in range(len(a.mult)):
        for k, bk in enumerate(bs):
            for be in range(bk.mult[i]):
                for al in range(a.mult[i]):
                    src.append((k, i, be, al))
    tgt = [
        (k, i, be, al)
        for k, bk in enumerate(bs)
        for i in range(len(a.mult))
        for be in range(bk.mult[i])
        for al in range(a.mult[i])
    ]
    pos = {key: p for p, key in enumerate(tgt)}
    U = np.zeros((len(tgt), len(src)))
    for p, key in enumerate(src):
        U[pos[key], p] = 1.0
    return U


def self_identification(x: ModuleObject):
    """``(<x,x> -> L^2 End(x), residual)``; the residual compares ``J_{x,x}`` with ``J``."""
    E, _ = endomorphism_algebra(x)
    d = via_corner(x, x).dimension
    U = np.eye(d)
    J_E = l2_standard_form(E).J
    Jxx = J_corner(x, x)
    resid = float(np.abs(U @ Jxx.matrix - J_E.matrix @ U).max(initial=0.0)) if d else 0.0
    return U, resid


def transport_unitary(X: Bimodule, c1: ModuleObject, c2: ModuleObject) -> np.ndarray:
    """``<c1, c2> -> <X c1, X c2>`` for an invertible bimodule ``X`` (fusion model).

    ``conj(c1) (x) c2 = conj(c1) (x) (L^2A (x) c2) = conj(c1) (x) ((conj(X) (x) X) (x) c2)``
    is carried to ``conj(X (x) c1) (x) (X (x) c2)`` by associators and ``nu``.
    """
    k = X.k
    if not (k.shape[0] == k.shape[1] and np.array_equal(k.T @ k, np.eye(k.shape[1], dtype=int))):
        raise ShapeMismatch("transport needs an invertible bimodule (permutation multiplicities)")
    y1, y2 = as_bimodule(c1), as_bimodule(c2)
    Xb = conjugate(X)
    I = BimoduleMap.identity
    ev = BimoduleMap(Bimodule.regular(X.right), fuse(Xb, X), I(Bimodule.regular(X.right)).cells)
    step1 = fuse_maps(I(conjugate(y1)), fuse_maps(ev, I(y2)) @ left_unitor(y2).adjoint())
    # conj(y1) (x) ((Xb (x) X) (x) y2) -> conj(y1) (x) (Xb (x) (X (x) y2))
    step2 = fuse_maps(I(conjugate(y1)), associator(Xb, X, y2))
    # -> (conj(y1) (x) Xb) (x) (X y2)
    step3 = associator(conjugate(y1), Xb, fuse(X, y2)).adjoint()
    step4 = fuse_maps(nu_unitary(X, y1), I(fuse(X, y2)))
    return (step4 @ step3 @ step2 @ step1).cells[0][0]


def conjugation_transport(c1: ModuleObject, c2: ModuleObject) -> AntiUnitary:
    """The antiunitary ``<c1, c2> -> <conj c1, conj c2>``: entrywise conjugation."""
    d = int(sum(x * y for x, y in zip(c1.mult, c2.mult)))
    return AntiUnitary(np.eye(d), True)
