"""Vertical and horizontal positive cones of natural transformations.

A transformation ``theta: F^dagger F => G^dagger G`` between functors
``A-Mod -> B_1-Mod`` and ``A-Mod -> B_2-Mod`` is the bimodule map
``conj(X) (x) X -> conj(Y) (x) Y``.  For a module ``c`` it acts on
``L^2 End(F c) = +_j M_{(k c)_j}`` by

    W_j'[(a, alpha', g), (a', beta', g')]
        = sum theta^{(a, a')}[(j', alpha', beta'), (j, alpha, beta)] Z_j[(a, alpha, g), (a', beta, g')]

where ``g, g'`` run over the multiplicity of ``c``.  At ``c = (n, ..., n)``
this is ``Phi (x) id_{M_n}`` for the map ``Phi`` of multimatrix algebras
obtained at ``n = 1``, so the horizontal cone is complete positivity of
``Phi``.  :func:`horizontal_cone_member` decides it with Choi matrices,
:func:`horizontal_cone_levels` by testing positivity on probe states.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..bimod import (
    Bimodule,
    BimoduleMap,
    conjugate,
    conjugate_map,
    double_conjugate,
    fuse,
    fuse_maps,
    nu_unitary,
)
from ..errors import NotHorizontallySelfAdjoint, ShapeMismatch
from ..linalg import DEFAULT_TOL, is_psd, psd_min_eigenvalue, scale_of
from .dictionary import NatTransform

__all__ = [
    "vertical_cone_member",
    "HorizontalMap",
    "horizontal_self_adjoint_residual",
    "is_horizontally_self_adjoint",
    "choi_matrices",
    "stabilization_level",
    "horizontal_cone_member",
    "horizontal_cone_levels",
    "amplified",
    "ConeReport",
    "cone_report",
]


def _as_map(theta):
    return theta.map if isinstance(theta, NatTransform) else theta


def vertical_cone_member(alpha, tol=DEFAULT_TOL) -> bool:
    """Positivity in ``End(F) = + M_{k_ji}``: every cell Hermitian PSD."""
    if isinstance(alpha, NatTransform) and alpha.source != alpha.target:
        raise ShapeMismatch("vertical cone needs an endomorphism F => F")
    T = _as_map(alpha)
    if T.source != T.target:
        raise ShapeMismatch("vertical cone needs an endomorphism")
    return all(is_psd(T.cells[j][i], tol) for j, i in T.source.cells())


class HorizontalMap(NamedTuple):
    """``theta: conj(X) (x)_{B1} X -> conj(Y) (x)_{B2} Y`` with the factors kept."""

    X: Bimodule
    Y: Bimodule
    map: BimoduleMap

    @classmethod
    def build(cls, X: Bimodule, Y: Bimodule, cells) -> "HorizontalMap":
        if X.right != Y.right:
            raise ShapeMismatch("X and Y must share the right algebra")
        return cls(X, Y, BimoduleMap(fuse(conjugate(X), X), fuse(conjugate(Y), Y), cells))

    @classmethod
    def identity(cls, X: Bimodule) -> "HorizontalMap":
        Z = fuse(conjugate(X), X)
        return cls(X, X, BimoduleMap.identity(Z))

    def __neg__(self):
        return HorizontalMap(self.X, self.Y, -self.map)

    def __add__(self, other):
        return HorizontalMap(self.X, self.Y, self.map + other.map)

    def __mul__(self, s):
        return HorizontalMap(self.X, self.Y, self.map * s)

    __rmul__ = __mul__


def _check(theta: HorizontalMap):
    X, Y, T = theta
    if T.source != fuse(conjugate(X), X) or T.target != fuse(conjugate(Y), Y):
        raise ShapeMismatch("theta does not run conj(X) (x) X -> conj(Y) (x) Y")


def horizontal_self_adjoint_residual(theta: HorizontalMap) -> float:
    """Distance between ``conj(theta)`` and ``theta`` transported through ``nu`` and ``phi``."""
    _check(theta)
    X, Y, T = theta
    Xb, Yb = conjugate(X), conjugate(Y)
    into = fuse_maps(BimoduleMap.identity(Xb), double_conjugate(X).adjoint()) @ nu_unitary(Xb, X).adjoint()
    out = nu_unitary(Yb, Y) @ fuse_maps(BimoduleMap.identity(Yb), double_conjugate(Y))
    return conjugate_map(T).distance(out @ T @ into)


def is_horizontally_self_adjoint(theta: HorizontalMap, tol=DEFAULT_TOL) -> bool:
    return horizontal_self_adjoint_residual(theta) <= tol * max(1.0, theta.map.norm())


def _offsets(k: np.ndarray):
    """``off[j][a] = sum_{a' < a} k[j, a']`` and block sizes ``K_j``."""
    off = np.zeros_like(k)
    off[:, 1:] = np.cumsum(k, axis=1)[:, :-1]
    return off, k.sum(axis=1)


def _components(theta: HorizontalMap):
    """``T[j'][j]`` of shape ``(L, L, K, K)``: ``Phi`` on matrix units of block ``j``."""
    X, Y, T = theta
    k, l = X.k, Y.k
    offK, K = _offsets(k)
    offL, L = _offsets(l)
    r, s = k.shape
    t = l.shape[0]
    comp = [[np.zeros((L[jp], L[jp], K[j], K[j]), complex) for j in range(r)] for jp in range(t)]
    for a in range(s):
        for ap in range(s):
            cell = T.cells[a][ap]
            src, o = [], 0
            for j in range(r):
                for al in range(k[j, a]):
                    for be in range(k[j, ap]):
                        src.append((j, offK[j, a] + al, offK[j, ap] + be, o))
                        o += 1
            tgt, o = [], 0
            for jp in range(t):
                for al in range(l[jp, a]):
                    for be in range(l[jp, ap]):
                        tgt.append((jp, offL[jp, a] + al, offL[jp, ap] + be, o))
                        o += 1
            for jp, R, S, p in tgt:
                for j, R0, S0, q in src:
                    comp[jp][j][R, S, R0, S0] = cell[p, q]
    return comp


def choi_matrices(theta: HorizontalMap) -> dict:
    """``{(j', j): C}`` with ``C[(r, r'), (s, s')] = Phi(E_rs)[r', s']``."""
    _check(theta)
    out = {}
    for jp, row in enumerate(_components(theta)):
        for j, T4 in enumerate(row):
            L, K = T4.shape[0], T4.shape[2]
            out[(jp, j)] = np.einsum("RSrs->rRsS", T4).reshape(K * L, K * L)
    return out


def stabilization_level(theta: HorizontalMap) -> int:
    """Total multiplicity dimension of ``X``; bounds every block size ``K_j``."""
    return int(theta.X.k.sum())


def horizontal_cone_member(theta: HorizontalMap, tol=DEFAULT_TOL) -> bool:
    """Choi certificate: every component ``j -> j'`` has a PSD Choi matrix."""
    if not is_horizontally_self_adjoint(theta, tol):
        raise NotHorizontallySelfAdjoint("theta is not horizontally self-adjoint")
    return all(is_psd(C, tol) for C in choi_matrices(theta).values())


def _amplify(T4, V):
    L, n = T4.shape[0], V.shape[1]
    Z = np.einsum("rg,sh->rgsh", V, V.conj())
    return np.einsum("RSrs,rgsh->RgSh", T4, Z).reshape(L * n, L * n)


def amplified(theta: HorizontalMap, j: int, v: np.ndarray, n: int) -> list:
    """``(Phi (x) id_n)(v v^*)`` for ``v`` in block ``j`` of level ``n``; one matrix per ``j'``."""
    comp = _components(theta)
    K = int(theta.X.k[j].sum())
    V = np.asarray(v, complex).reshape(K, n)
    return [_amplify(row[j], V) for row in comp]


def _probes(K: int, n: int, rng, n_random: int):
    d = K * n
    for e in np.eye(d):
        yield e
    if n >= K:
        # maximally entangled vector on the first K copies
        v = np.zeros((K, n))
        v[np.arange(K), np.arange(K)] = 1.0
        yield v.reshape(-1)
    else:
        v = np.zeros((K, n))
        v[np.arange(n), np.arange(n)] = 1.0
        yield v.reshape(-1)
    for _ in range(n_random):
        yield rng.normal(size=d) + 1j * rng.normal(size=d)


def horizontal_cone_levels(theta: HorizontalMap, N: int, tol=DEFAULT_TOL, seed=0, n_random=4) -> bool:
    """Positivity of ``Phi (x) id_n`` on probe states for every ``n <= N``."""
    if not is_horizontally_self_adjoint(theta, tol):
        raise NotHorizontallySelfAdjoint("theta is not horizontally self-adjoint")
    rng = np.random.default_rng(seed)
    comp = _components(theta)
    r = theta.X.shape[0]
    for n in range(1, N + 1):
        for j in range(r):
            K = int(theta.X.k[j].sum())
            if K == 0:
                continue
            for v in _probes(K, n, rng, n_random):
                v = v / np.linalg.norm(v)
                for jp in range(len(comp)):
                    T4 = comp[jp][j]
                    if T4.shape[0] == 0:
                        continue
                    W = _amplify(T4, v.reshape(K, n))
                    W = (W + W.conj().T) / 2
                    if psd_min_eigenvalue(W, tol) < -tol * scale_of(W):
                        return False
    return True


class ConeReport(NamedTuple):
    self_adjoint: bool
    self_adjoint_residual: float
    choi_member: bool
    choi_min_eigenvalue: float
    levels_member: bool
    level: int
    vertical_member: bool


def cone_report(theta: HorizontalMap, N: int = None, tol=DEFAULT_TOL, seed=0) -> ConeReport:
    """Self-adjointness and both membership tests, reported separately."""
    res = horizontal_self_adjoint_residual(theta)
    sa = res <= tol * max(1.0, theta.map.norm())
    N = stabilization_level(theta) if N is None else N
    chois = choi_matrices(theta)
    mins = [psd_min_eigenvalue((C + C.conj().T) / 2, tol) for C in chois.values() if C.size]
    cm = all(is_psd(C, tol) for C in chois.values())
    lv = horizontal_cone_levels(theta, N, tol, seed) if sa else False
    vm = theta.map.source == theta.map.target and vertical_cone_member(theta.map, tol)
    return ConeReport(sa, res, cm, min(mins) if mins else 0.0, lv, N, vm)
