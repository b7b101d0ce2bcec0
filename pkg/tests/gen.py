"""Seeded random fixtures and hypothesis strategies shared by the test suite."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from wstar.algebra import AlgebraElement, MultiMatrixAlgebra
from wstar.bimod import Bimodule, BimoduleMap
from wstar.modcat import ModuleMorphism, ModuleObject


def cmat(rng, rows, cols):
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def unitary(rng, n):
    q, r = np.linalg.qr(cmat(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def algebra(rng, max_blocks=3, max_size=3, max_dim=None):
    while True:
        blocks = rng.integers(1, max_size + 1, size=rng.integers(1, max_blocks + 1))
        A = MultiMatrixAlgebra(blocks.tolist())
        if max_dim is None or A.dim <= max_dim:
            return A


def element(rng, A):
    return AlgebraElement(A, [cmat(rng, n, n) for n in A.blocks])


def mult_vector(rng, A, hi=2, nonzero=False):
    while True:
        v = rng.integers(0, hi + 1, size=len(A.blocks))
        if not nonzero or v.any():
            return v.tolist()


def module(rng, A, hi=2, nonzero=False):
    return ModuleObject(A, mult_vector(rng, A, hi, nonzero))


def morphism(rng, H, K):
    return ModuleMorphism(H, K, [cmat(rng, y, x) for x, y in zip(H.mult, K.mult)])


def isometry(rng, H, K):
    """A random isometry ``H -> K`` (requires ``H.mult <= K.mult`` blockwise)."""
    return ModuleMorphism(H, K, [unitary(rng, y)[:, :x] for x, y in zip(H.mult, K.mult)])


def bimodule(rng, B, A, hi=2, max_dim=None):
    while True:
        k = rng.integers(0, hi + 1, size=(len(B.blocks), len(A.blocks)))
        X = Bimodule(B, A, k)
        if max_dim is None or X.dim <= max_dim:
            return X


def bimodule_map(rng, X, Y):
    return BimoduleMap(X, Y, [[cmat(rng, Y.mult[j][i], X.mult[j][i]) for i in range(len(X.right.blocks))]
                              for j in range(len(X.left.blocks))])


# hypothesis ---------------------------------------------------------------

block_lists = st.lists(st.integers(1, 3), min_size=1, max_size=3)
algebras = block_lists.map(MultiMatrixAlgebra)
seeds = st.integers(0, 2**32 - 1)


@st.composite
def modules(draw, A=None, hi=2):
    A = draw(algebras) if A is None else A
    return ModuleObject(A, draw(st.lists(st.integers(0, hi), min_size=len(A.blocks), max_size=len(A.blocks))))


@st.composite
def bimodules(draw, B=None, A=None, hi=2):
    B = draw(algebras) if B is None else B
    A = draw(algebras) if A is None else A
    row = st.lists(st.integers(0, hi), min_size=len(A.blocks), max_size=len(A.blocks))
    return Bimodule(B, A, draw(st.lists(row, min_size=len(B.blocks), max_size=len(B.blocks))))


def theta_from_kraus(X, Y, terms):
    """Cells of ``Phi(Z) = sum eps V Z V^*`` as a map ``conj(X) (x) X -> conj(Y) (x) Y``.

    ``terms`` holds ``(eps, jp, j, Vs)`` with ``Vs[a]`` of shape ``(l[jp, a], k[j, a])``;
    ``Phi`` must respect the corners of the shared right algebra, which
    block-diagonal Kraus operators do.
    """
    k, l = X.k, Y.k
    r, s = k.shape
    t = l.shape[0]
    cells = []
    for a in range(s):
        row = []
        for ap in range(s):
            src = {(j, al, be): q for q, (j, al, be) in enumerate(
                (j, al, be) for j in range(r) for al in range(k[j, a]) for be in range(k[j, ap]))}
            tgt = {(jp, al, be): p for p, (jp, al, be) in enumerate(
                (jp, al, be) for jp in range(t) for al in range(l[jp, a]) for be in range(l[jp, ap]))}
            C = np.zeros((len(tgt), len(src)), complex)
            for eps, jp, j, Vs in terms:
                blk = eps * np.einsum("Aa,Bb->ABab", Vs[a], Vs[ap].conj())
                for A_ in range(l[jp, a]):
                    for B_ in range(l[jp, ap]):
                        for a_ in range(k[j, a]):
                            for b_ in range(k[j, ap]):
                                C[tgt[(jp, A_, B_)], src[(j, a_, b_)]] += blk[A_, B_, a_, b_]
            row.append(C)
        cells.append(row)
    return cells


def kraus_terms(rng, X, Y, count, signs):
    k, l = X.k, Y.k
    out = []
    for _ in range(count):
        jp, j = int(rng.integers(l.shape[0])), int(rng.integers(k.shape[0]))
        Vs = [cmat(rng, l[jp, a], k[j, a]) for a in range(k.shape[1])]
        out.append((float(rng.choice(signs)), jp, j, Vs))
    return out
