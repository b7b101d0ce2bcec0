import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from wstar.algebra import AlgebraHom, MultiMatrixAlgebra
from wstar.bimod import CC, Bimodule, fuse
from wstar.errors import AlgebraMismatch, InconsistentAction, NotAdditive, NotOrthogonal
from wstar.funcat import (
    Functor,
    NatTransform,
    adjoint,
    apply_functor,
    bimodule_from_functor,
    compose,
    dominant,
    expansion,
    extract_bimodule,
    faithful,
    functor_box,
    identity_functor,
    matrix_element_residual,
    nat_hom_basis,
    reconstruct_functor,
    riesz_roundtrip,
)
from wstar.modcat import ModuleMorphism, ModuleObject, endomorphism_algebra

M = MultiMatrixAlgebra
TOL = 1e-9


def doubling_box(H):
    """``H -> H + H``, written without the package's fusion."""
    if isinstance(H, ModuleObject):
        return ModuleObject(H.algebra, [2 * x for x in H.mult])
    return ModuleMorphism(doubling_box(H.source), doubling_box(H.target), [np.kron(np.eye(2), b) for b in H.block_data])


def forgetful(H):
    """Restriction ``A-Mod -> Hilb`` to the underlying Hilbert space, written by hand."""
    if isinstance(H, ModuleObject):
        return ModuleObject(CC, [H.dim])
    blocks = [np.kron(np.eye(n), b) for n, b in zip(H.source.algebra.blocks, H.block_data)]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), complex)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r, c = r + b.shape[0], c + b.shape[1]
    return ModuleMorphism(forgetful(H.source), forgetful(H.target), [out])


def squaring_box(H):
    """Not additive: multiplicities are squared."""
    if isinstance(H, ModuleObject):
        return ModuleObject(H.algebra, [x * x for x in H.mult])
    S, T = squaring_box(H.source), squaring_box(H.target)
    return ModuleMorphism(S, T, [np.zeros((y, x)) for x, y in zip(S.mult, T.mult)])


@st.composite
def functors(draw, hi=2):
    A, B = draw(gen.algebras), draw(gen.algebras)
    return Functor(draw(gen.bimodules(B, A, hi)))


class TestApply:
    def test_identity(self):
        A = M([2, 1])
        H = ModuleObject(A, [1, 3])
        assert apply_functor(identity_functor(A), H) == H

    def test_example(self):
        # k = [[1, 2]] sends (x0, x1) to x0 + 2 x1
        F = Functor(Bimodule(M([3]), M([1, 2]), [[1, 2]]))
        assert apply_functor(F, ModuleObject(M([1, 2]), [2, 1])).mult == (4,)

    def test_mismatch(self):
        F = Functor(Bimodule(M([3]), M([1, 2]), [[1, 2]]))
        with pytest.raises(AlgebraMismatch):
            apply_functor(F, ModuleObject(M([2]), [1]))
        with pytest.raises(TypeError):
            apply_functor(F, 3)

    @settings(max_examples=30, deadline=None)
    @given(st.data(), gen.seeds)
    def test_functorial(self, data, seed):
        F = data.draw(functors())
        rng = np.random.default_rng(seed)
        H = data.draw(gen.modules(F.source))
        f, g = gen.morphism(rng, H, H), gen.morphism(rng, H, H)
        lhs = apply_functor(F, f @ g)
        rhs = apply_functor(F, f) @ apply_functor(F, g)
        assert lhs.distance(rhs) <= 1e-9 * max(1.0, lhs.norm())
        assert apply_functor(F, f.adjoint()).distance(apply_functor(F, f).adjoint()) <= 1e-12 * max(1, f.norm())

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_composition_is_fusion(self, data):
        F = data.draw(functors())
        G = Functor(data.draw(gen.bimodules(None, F.target)))
        H = data.draw(gen.modules(F.source))
        assert apply_functor(compose(G, F), H) == apply_functor(G, apply_functor(F, H))
        assert compose(G, F).bimodule == fuse(G.bimodule, F.bimodule)


class TestExtraction:
    def test_regular(self):
        A = M([2, 1])
        ext = extract_bimodule(functor_box(identity_functor(A)), A)
        assert ext.bimodule == Bimodule.regular(A)
        assert ext.frame.is_unitary() and ext.residual <= TOL

    def test_doubling(self):
        A = M([2, 3])
        X = bimodule_from_functor(doubling_box, A)
        assert X.mult == ((2, 0), (0, 2))

    def test_forgetful(self):
        A = M([2, 3])
        ext = extract_bimodule(forgetful, A)
        # restriction to scalars is C^{n_i} on each block
        assert ext.bimodule == Bimodule(CC, A, [[2, 3]])
        assert ext.residual <= TOL

    def test_not_additive(self):
        with pytest.raises(NotAdditive):
            extract_bimodule(squaring_box, M([2, 1]))

    @settings(max_examples=30, deadline=None)
    @given(functors())
    def test_round_trip(self, F):
        ext = extract_bimodule(functor_box(F), F.source)
        assert ext.bimodule == F.bimodule
        assert ext.frame.is_unitary()
        assert ext.residual <= TOL


class TestNaturalTransformations:
    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_dimension(self, data):
        F = data.draw(functors())
        G = Functor(data.draw(gen.bimodules(F.target, F.source)))
        n = int((F.bimodule.k * G.bimodule.k).sum())
        assert len(nat_hom_basis(F, G)) == n

    def test_components_natural(self):
        rng = np.random.default_rng(0)
        X = Bimodule(M([2]), M([1, 2]), [[1, 2]])
        Y = Bimodule(M([2]), M([1, 2]), [[2, 1]])
        t = NatTransform(Functor(X), Functor(Y), gen.bimodule_map(rng, X, Y))
        H, K = ModuleObject(X.right, [1, 2]), ModuleObject(X.right, [2, 1])
        f = gen.morphism(rng, H, K)
        lhs = t.component(K) @ apply_functor(t.source, f)
        rhs = apply_functor(t.target, f) @ t.component(H)
        assert lhs.distance(rhs) <= 1e-9 * max(1.0, lhs.norm())


def _images(F, gens):
    out = []
    for c in gens:
        Fc = apply_functor(F, c)
        E, src = endomorphism_algebra(c)
        EF, tgt = endomorphism_algebra(Fc)
        out.append((c, Fc, AlgebraHom(E, EF, F.bimodule.k[np.ix_(tgt, src)])))
    return out


@st.composite
def orthogonal_generators(draw, A):
    s = len(A.blocks)
    labels = draw(st.lists(st.integers(0, s - 1), min_size=s, max_size=s))
    gens = []
    for g in sorted(set(labels)):
        mult = [draw(st.integers(1, 2)) if labels[i] == g else 0 for i in range(s)]
        gens.append(ModuleObject(A, mult))
    return gens


class TestReconstruction:
    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_reconstruct(self, data):
        F = data.draw(functors())
        gens = data.draw(orthogonal_generators(F.source))
        assert reconstruct_functor(_images(F, gens)).bimodule == F.bimodule

    def test_rejects_overlap(self):
        F = identity_functor(M([1, 1]))
        gens = [ModuleObject(F.source, [1, 1]), ModuleObject(F.source, [1, 0])]
        with pytest.raises(NotOrthogonal):
            reconstruct_functor(_images(F, gens))

    def test_rejects_wrong_image(self):
        F = identity_functor(M([2]))
        c = ModuleObject(F.source, [2])
        Fc = ModuleObject(F.source, [4])
        with pytest.raises(InconsistentAction):
            reconstruct_functor([(c, Fc, AlgebraHom(M([2]), M([2]), [[1]]))])

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_expansion(self, data):
        A = data.draw(gen.algebras)
        gens = data.draw(orthogonal_generators(A))
        x = data.draw(gen.modules(A))
        assert expansion(x, gens).is_unitary()

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_matrix_elements(self, data):
        F = data.draw(functors())
        assert matrix_element_residual(F, data.draw(gen.modules(F.source))) == 0


class TestRiesz:
    @settings(max_examples=30, deadline=None)
    @given(gen.modules())
    def test_round_trip(self, x):
        recovered, u = riesz_roundtrip(x)
        assert recovered == x
        assert u.is_unitary()


class TestFaithfulDominant:
    def test_examples(self):
        I = identity_functor(M([2, 1]))
        assert faithful(I) and dominant(I)
        F = Functor(Bimodule(M([2]), M([1, 2]), [[1, 0]]))
        assert not faithful(F) and not dominant(adjoint(F))

    @settings(max_examples=40, deadline=None)
    @given(functors())
    def test_duality(self, F):
        assert faithful(F) == dominant(adjoint(F))
        assert dominant(F) == faithful(adjoint(F))
