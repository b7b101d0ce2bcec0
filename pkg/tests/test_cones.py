import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from wstar.algebra import MultiMatrixAlgebra
from wstar.bimod import CC, Bimodule, BimoduleMap, fuse, conjugate
from wstar.errors import NotHorizontallySelfAdjoint, ShapeMismatch
from wstar.funcat import (
    Functor,
    HorizontalMap,
    NatTransform,
    amplified,
    choi_matrices,
    cone_report,
    horizontal_cone_levels,
    horizontal_cone_member,
    horizontal_self_adjoint_residual,
    is_horizontally_self_adjoint,
    stabilization_level,
    vertical_cone_member,
)
from wstar.linalg import hermitian_eig

M = MultiMatrixAlgebra
C2 = Bimodule(CC, CC, [[2]])


def cell_map(X, Y, cells):
    return HorizontalMap.build(X, Y, cells)


def transpose_theta():
    # conj(C^2) (x) C^2 = M_2 with coordinates (alpha, beta); transpose swaps them
    P = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            P[2 * b + a, 2 * a + b] = 1
    return cell_map(C2, C2, [[P]])


def offdiag_theta():
    # Phi(Z) = Z_12 E_12 + Z_21 E_21: PSD cell (a projection), not even positive
    P = np.diag([0.0, 1, 1, 0])
    return cell_map(C2, C2, [[P]])


@st.composite
def kraus_fixtures(draw, signs=(1.0, -1.0)):
    A = draw(gen.algebras)
    X = draw(gen.bimodules(None, A, 2))
    Y = draw(gen.bimodules(None, A, 2))
    rng = np.random.default_rng(draw(gen.seeds))
    terms = gen.kraus_terms(rng, X, Y, int(rng.integers(1, 4)), signs)
    return cell_map(X, Y, gen.theta_from_kraus(X, Y, terms))


class TestVertical:
    def test_examples(self):
        X = Bimodule(M([2]), M([1, 2]), [[2, 1]])
        I = BimoduleMap.identity(X)
        assert vertical_cone_member(I)
        assert not vertical_cone_member(-I)
        swap = BimoduleMap(X, X, [[np.array([[0.0, 1], [1, 0]]), np.eye(1)]])
        assert not vertical_cone_member(swap)
        F = Functor(X)
        assert vertical_cone_member(NatTransform(F, F, I))

    def test_not_endo(self):
        X, Y = Bimodule(CC, CC, [[1]]), Bimodule(CC, CC, [[2]])
        with pytest.raises(ShapeMismatch):
            vertical_cone_member(BimoduleMap.zero(X, Y))


class TestHorizontal:
    def test_identity(self):
        X = Bimodule(M([2]), M([1, 2]), [[2, 1]])
        theta = HorizontalMap.identity(X)
        assert horizontal_cone_member(theta)
        assert horizontal_cone_levels(theta, stabilization_level(theta))
        assert not horizontal_cone_member(-theta)
        assert not horizontal_cone_levels(-theta, 1)

    def test_transpose(self):
        theta = transpose_theta()
        assert is_horizontally_self_adjoint(theta)
        # positive at level one
        assert horizontal_cone_levels(theta, 1)
        C = choi_matrices(theta)[(0, 0)]
        w, _ = hermitian_eig(C)
        np.testing.assert_allclose(w, [-1, 1, 1, 1], atol=1e-12)
        assert stabilization_level(theta) == 2
        assert not horizontal_cone_member(theta)
        assert not horizontal_cone_levels(theta, 2)
        r = cone_report(theta)
        assert not r.choi_member and not r.levels_member and not r.vertical_member
        assert abs(r.choi_min_eigenvalue + 1) < 1e-12

    def test_vertical_not_horizontal(self):
        theta = offdiag_theta()
        r = cone_report(theta)
        assert r.self_adjoint and r.vertical_member
        assert not r.choi_member and not r.levels_member

    def test_amplified_transpose(self):
        # (T (x) id_2) of the maximally entangled state is the swap / 2
        v = np.array([1, 0, 0, 1]) / np.sqrt(2)
        (W,) = amplified(transpose_theta(), 0, v, 2)
        w, _ = hermitian_eig((W + W.conj().T) / 2)
        np.testing.assert_allclose(w, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)

    def test_not_self_adjoint(self):
        P = np.zeros((4, 4))
        P[1, 0] = 1  # Z_11 -> E_12
        theta = cell_map(C2, C2, [[P]])
        assert horizontal_self_adjoint_residual(theta) > 0.5
        with pytest.raises(NotHorizontallySelfAdjoint):
            horizontal_cone_member(theta)
        with pytest.raises(NotHorizontallySelfAdjoint):
            horizontal_cone_levels(theta, 2)

    def test_shape(self):
        X, Y = Bimodule(CC, M([2]), [[1]]), Bimodule(CC, M([1]), [[1]])
        with pytest.raises(ShapeMismatch):
            HorizontalMap.build(X, Y, [])
        bad = HorizontalMap(C2, C2, BimoduleMap.identity(Bimodule(CC, CC, [[3]])))
        with pytest.raises(ShapeMismatch):
            choi_matrices(bad)

    def test_kraus_choi(self):
        # Choi matrix of V . V^* is the rank-one vec(V) vec(V)^*
        rng = np.random.default_rng(0)
        X, Y = Bimodule(CC, CC, [[2]]), Bimodule(CC, CC, [[3]])
        V = gen.cmat(rng, 3, 2)
        theta = cell_map(X, Y, gen.theta_from_kraus(X, Y, [(1.0, 0, 0, [V])]))
        C = choi_matrices(theta)[(0, 0)]
        v = V.T.reshape(-1)  # (r, R) ordering
        np.testing.assert_allclose(C, np.outer(v, v.conj()), atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(kraus_fixtures(signs=(1.0,)))
    def test_completely_positive(self, theta):
        assert is_horizontally_self_adjoint(theta)
        assert horizontal_cone_member(theta)
        assert horizontal_cone_levels(theta, stabilization_level(theta))

    @settings(max_examples=60, deadline=None)
    @given(kraus_fixtures())
    def test_certificates_agree(self, theta):
        assert is_horizontally_self_adjoint(theta)
        N = stabilization_level(theta)
        assert horizontal_cone_member(theta) == horizontal_cone_levels(theta, N)

    @settings(max_examples=30, deadline=None)
    @given(kraus_fixtures(signs=(1.0,)), kraus_fixtures(signs=(1.0,)))
    def test_cone_is_convex(self, s, t):
        if s.X == t.X and s.Y == t.Y:
            assert horizontal_cone_member(s + t * 0.5)
