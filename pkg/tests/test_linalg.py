import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from wstar.errors import DimensionMismatch, NoConvergence, NotHermitian, NotProjection
from wstar.linalg import (
    AntiUnitary,
    hermitian_eig,
    intertwiner_basis,
    is_psd,
    jacobi_eig,
    nullspace,
    polar_decompose,
    range_isometry,
    unitary_residual,
)

TOL = 1e-9


def hermitian(rng, n):
    M = gen.cmat(rng, n, n)
    return (M + M.conj().T) / 2


class TestHermitianEig:
    def test_identity(self):
        w, U = hermitian_eig(np.eye(2))
        assert np.allclose(w, [1, 1])
        assert unitary_residual(U) < TOL

    def test_diagonal_sorted(self):
        w, _ = hermitian_eig(np.diag([3.0, -1.0]))
        assert np.allclose(w, [-1, 3])

    def test_pauli_x(self):
        # lambda^2 - 1 = 0
        w, U = hermitian_eig(np.array([[0, 1], [1, 0]]))
        np.testing.assert_allclose(w, [-1, 1], atol=1e-14)
        M = np.array([[0, 1], [1, 0]])
        assert np.linalg.norm(M @ U - U @ np.diag(w)) < TOL

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            hermitian_eig(np.array([[0, 1], [0, 0]]))

    def test_not_square(self):
        with pytest.raises(NotHermitian):
            hermitian_eig(np.zeros((2, 3)))

    def test_empty(self):
        w, U = hermitian_eig(np.zeros((0, 0)))
        assert w.shape == (0,) and U.shape == (0, 0)

    def test_sweep_cap(self):
        rng = np.random.default_rng(3)
        H = hermitian(rng, 12)
        with pytest.raises(NoConvergence):
            jacobi_eig(H, 0.0, max_sweeps=1)

    @pytest.mark.parametrize("n", [1, 2, 5, 12, 40])
    def test_jacobi_matches_lapack(self, n):
        rng = np.random.default_rng(n)
        H = hermitian(rng, n)
        wj, _ = hermitian_eig(H, method="jacobi")
        wl, _ = hermitian_eig(H, method="lapack")
        np.testing.assert_allclose(wj, wl, atol=1e-10)

    def test_tiny_coupling_no_overflow(self):
        # theta = (a_qq - a_pp) / 2|a_pq| is huge here
        H = np.array([[1e300, 1e-300], [1e-300, -1e300]], dtype=complex)
        with np.errstate(over="raise"):
            w, U = hermitian_eig(H, method="jacobi")
        np.testing.assert_allclose(w, [-1e300, 1e300])
        assert unitary_residual(U) < TOL

    def test_degenerate_spectrum(self):
        rng = np.random.default_rng(0)
        U = gen.unitary(rng, 6)
        H = U @ np.diag([1, 1, 1, 2, 2, -3.0]) @ U.conj().T
        w, V = hermitian_eig(H)
        np.testing.assert_allclose(w, [-3, 1, 1, 1, 2, 2], atol=1e-12)
        assert unitary_residual(V) < TOL

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), gen.seeds)
    def test_reconstruction(self, n, seed):
        H = hermitian(np.random.default_rng(seed), n)
        w, U = hermitian_eig(H)
        assert np.all(np.diff(w) >= 0)
        assert unitary_residual(U) < TOL
        assert np.linalg.norm(U @ np.diag(w) @ U.conj().T - H) < 1e-8


class TestPolar:
    def test_unitary(self):
        U = gen.unitary(np.random.default_rng(1), 3)
        v, p = polar_decompose(U)
        assert np.allclose(v, U) and np.allclose(p, np.eye(3))

    def test_zero(self):
        v, p = polar_decompose(np.zeros((2, 2)))
        assert not v.any() and not p.any()

    def test_rank_deficient(self):
        # p = sqrt(M^* M) = diag(2, 0)
        v, p = polar_decompose(np.diag([2.0, 0.0]))
        np.testing.assert_allclose(v, np.diag([1, 0]), atol=1e-12)
        np.testing.assert_allclose(p, np.diag([2, 0]), atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), gen.seeds)
    def test_recompose(self, r, c, seed):
        rng = np.random.default_rng(seed)
        M = gen.cmat(rng, r, c) @ gen.cmat(rng, c, c)
        v, p = polar_decompose(M)
        assert np.linalg.norm(v @ p - M) < 1e-8 * max(1, np.linalg.norm(M))
        assert is_psd(p, 1e-8)
        # v^*v is the support projection of p
        s = v.conj().T @ v
        assert np.linalg.norm(s @ s - s) < 1e-8
        assert np.linalg.norm(s @ p - p) < 1e-8 * max(1, np.linalg.norm(p))


class TestRangeIsometry:
    def test_full(self):
        io = range_isometry(np.eye(3))
        assert io.shape == (3, 3) and unitary_residual(io) < TOL

    def test_zero(self):
        assert range_isometry(np.zeros((2, 2))).shape == (2, 0)

    def test_rank_one(self):
        io = range_isometry(np.full((2, 2), 0.5))
        assert io.shape == (2, 1)
        v = io[:, 0] / io[0, 0] * abs(io[0, 0])  # strip the phase
        np.testing.assert_allclose(v, [2**-0.5, 2**-0.5], atol=1e-12)

    def test_not_projection(self):
        with pytest.raises(NotProjection):
            range_isometry(np.diag([1.0, 2.0]))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), gen.seeds, st.data())
    def test_identities(self, n, seed, data):
        rng = np.random.default_rng(seed)
        k = data.draw(st.integers(0, n))
        U = gen.unitary(rng, n)
        p = U[:, :k] @ U[:, :k].conj().T
        io = range_isometry(p)
        assert io.shape == (n, k)
        assert np.linalg.norm(io @ io.conj().T - p) <= TOL
        assert np.linalg.norm(io.conj().T @ io - np.eye(k)) <= TOL


class TestIntertwiners:
    def test_trivial_constraints(self):
        assert len(intertwiner_basis([np.eye(2)], [np.eye(2)])) == 4

    def test_full_matrix_algebra(self):
        gens = [np.eye(2, k=1), np.diag([1.0, 2.0])]
        basis = intertwiner_basis(gens, gens, star_closed=True)
        assert len(basis) == 1
        b = basis[0] / basis[0][0, 0]
        np.testing.assert_allclose(b, np.eye(2), atol=1e-12)

    def test_diagonal_generator(self):
        g = np.diag([1.0, 2.0])
        basis = intertwiner_basis([g], [g])
        assert len(basis) == 2
        for b in basis:
            assert abs(b[0, 1]) < 1e-12 and abs(b[1, 0]) < 1e-12

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            intertwiner_basis([np.eye(2)], [np.eye(2), np.eye(2)])
        with pytest.raises(DimensionMismatch):
            intertwiner_basis([np.eye(2), np.eye(3)], [np.eye(2), np.eye(2)])

    @pytest.mark.parametrize("star", [False, True])
    def test_orthonormal_and_solving(self, star):
        rng = np.random.default_rng(5)
        g = gen.cmat(rng, 3, 3)
        L = [np.kron(np.eye(2), g)]
        R = [np.kron(g, np.eye(2))]
        basis = intertwiner_basis(L, R, star_closed=star)
        G = np.array([[np.vdot(a, b) for b in basis] for a in basis])
        np.testing.assert_allclose(G, np.eye(len(basis)), atol=1e-9)
        for x in basis:
            assert np.linalg.norm(x @ L[0] - R[0] @ x) < 1e-8

    @settings(max_examples=15, deadline=None)
    @given(st.integers(2, 5))
    def test_generators_of_mn_give_scalars(self, n):
        gens = [np.diag(np.arange(1.0, n + 1)), np.eye(n, k=1)]
        assert len(intertwiner_basis(gens, gens, star_closed=True)) == 1


class TestAntiUnitary:
    def test_compose_flags(self):
        rng = np.random.default_rng(2)
        U, V = gen.unitary(rng, 3), gen.unitary(rng, 3)
        a, b = AntiUnitary(U, True), AntiUnitary(V, False)
        xi = gen.cmat(rng, 3, 1)[:, 0]
        np.testing.assert_allclose((a @ b)(xi), a(b(xi)), atol=1e-12)
        np.testing.assert_allclose((a @ a)(xi), a(a(xi)), atol=1e-12)
        assert not (a @ a).conjugate and (a @ b).conjugate

    def test_inverse(self):
        U = gen.unitary(np.random.default_rng(4), 4)
        a = AntiUnitary(U, True)
        assert (a @ a.inverse()).is_identity()

    def test_nullspace(self):
        Q = np.diag([0.0, 1.0, 0.0])
        N = nullspace(Q)
        assert N.shape == (3, 2)
