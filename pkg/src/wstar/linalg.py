"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy`` complex arrays.  The Hermitian eigensolver is a
cyclic Jacobi method with round-robin (parallel) ordering, so each round of
``n/2`` disjoint rotations is applied as a handful of vectorised updates.
Above ``JACOBI_MAX_N`` the LAPACK solver is used instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NoConvergence,
    NotHermitian,
    NotProjection,
    NotUnitary,
)

DEFAULT_TOL = 1e-9
JACOBI_MAX_N = 64
MAX_SWEEPS = 100
# Jacobi keeps rotating until the off-diagonal mass is at roundoff level; one
# sweep past eps*|M| is nearly free because convergence is quadratic.
_JACOBI_FLOOR = 1e-14

__all__ = [
    "DEFAULT_TOL",
    "AntiUnitary",
    "as_matrix",
    "scale_of",
    "within",
    "is_hermitian",
    "is_unitary",
    "is_projection",
    "unitary_residual",
    "hermitian_eig",
    "jacobi_eig",
    "psd_min_eigenvalue",
    "is_psd",
    "polar_decompose",
    "range_isometry",
    "intertwiner_basis",
    "nullspace",
    "block_diag",
]


def as_matrix(M) -> np.ndarray:
    a = np.asarray(M, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def scale_of(*mats) -> float:
    """max(1, largest Frobenius norm) -- the relative part of every predicate."""
    s = 1.0
    for m in mats:
        if np.size(m):
            s = max(s, float(np.linalg.norm(m)))
    return s


def within(residual: float, tol: float, *inputs) -> bool:
    return residual <= tol * scale_of(*inputs)


def is_hermitian(M, tol=DEFAULT_TOL) -> bool:
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        return False
    return within(float(np.linalg.norm(M - M.conj().T)), tol, M)


def unitary_residual(U) -> float:
    """max(|U*U - I|, |UU* - I|); infinite for non-square input."""
    U = as_matrix(U)
    if U.shape[0] != U.shape[1]:
        return float("inf")
    n = U.shape[0]
    if n == 0:
        return 0.0
    eye = np.eye(n)
    return max(
        float(np.linalg.norm(U.conj().T @ U - eye)),
        float(np.linalg.norm(U @ U.conj().T - eye)),
    )


def is_unitary(U, tol=DEFAULT_TOL) -> bool:
    return unitary_residual(U) <= tol * max(1.0, np.sqrt(as_matrix(U).shape[0]))


def is_projection(p, tol=DEFAULT_TOL) -> bool:
    p = as_matrix(p)
    if p.shape[0] != p.shape[1]:
        return False
    r = max(
        float(np.linalg.norm(p @ p - p)), float(np.linalg.norm(p - p.conj().T))
    )
    return within(r, tol, p)


def block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    blocks = [as_matrix(b) if np.size(b) else np.zeros(np.shape(b), complex) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


# --------------------------------------------------------------------------
# semilinear maps


@dataclass(frozen=True, eq=False)
class AntiUnitary:
    """The map ``xi -> matrix @ conj(xi)`` (or ``matrix @ xi`` when linear).

    Composition tracks the conjugation flag by XOR, which keeps every
    composite in the normal form ``(matrix, flag)``.
    """

    matrix: np.ndarray
    conjugate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_matrix(self.matrix))

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=complex)
        return self.matrix @ (xi.conj() if self.conjugate else xi)

    def __matmul__(self, other: "AntiUnitary") -> "AntiUnitary":
        inner = other.matrix.conj() if self.conjugate else other.matrix
        return AntiUnitary(self.matrix @ inner, self.conjugate ^ other.conjugate)

    def inverse(self) -> "AntiUnitary":
        # (M conj)^{-1} = conj(M^*) conj  since  M conj(conj(M^*) conj(y)) = M M^* y
        inv = self.matrix.conj().T
        return AntiUnitary(inv.conj() if self.conjugate else inv, self.conjugate)

    def bar(self) -> "AntiUnitary":
        """The same map read between the complex-conjugate spaces."""
        return AntiUnitary(self.matrix.conj(), self.conjugate)

    def residual_unitary(self) -> float:
        return unitary_residual(self.matrix)

    def is_identity(self, tol=DEFAULT_TOL) -> bool:
        n = self.matrix.shape[0]
        return (not self.conjugate) and within(
            float(np.linalg.norm(self.matrix - np.eye(n))), tol
        )


# --------------------------------------------------------------------------
# Hermitian eigenproblem


@lru_cache(maxsize=None)
def _round_robin(n: int):
    """Pairings (p, q) for the n-1 rounds of a round-robin tournament."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        if pairs:
            p = np.array([a for a, _ in pairs], dtype=np.intp)
            q = np.array([b for _, b in pairs], dtype=np.intp)
            rounds.append((p, q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_norm(A: np.ndarray) -> float:
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def jacobi_eig(H: np.ndarray, threshold: float, max_sweeps: int = MAX_SWEEPS):
    """Cyclic Jacobi on a Hermitian matrix; returns unsorted (diag, V)."""
    A = np.array(H, dtype=complex)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    if n < 2:
        return np.real(np.diag(A)).copy(), V
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        if _off_norm(A) <= threshold:
            return np.real(np.diag(A)).copy(), V
        for p, q in rounds:
            apq = A[p, q]
            mag = np.abs(apq)
            active = mag > 0
            if not np.any(active):
                continue
            app = np.real(A[p, p])
            aqq = np.real(A[q, q])
            safe = np.where(active, mag, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            # sqrt(theta^2 + 1) = |theta| sqrt(1 + theta^-2) avoids overflow for large theta
            at = np.abs(theta)
            root = np.where(at > 1.0, at * np.sqrt(1.0 + 1.0 / np.maximum(at, 1.0) ** 2), np.sqrt(at * at + 1.0))
            t = np.sign(theta) / (at + root)
            t = np.where(theta == 0, 1.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ph = np.where(active, apq / safe, 1.0)
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            # G restricted to (p, q) = [[c, s], [-s conj(ph), c conj(ph)]]
            g_pp, g_pq = c, s
            g_qp, g_qq = -s * ph.conj(), c * ph.conj()
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = Ap * g_pp + Aq * g_qp
            A[:, q] = Ap * g_pq + Aq * g_qq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = np.conj(g_pp)[:, None] * Ap + np.conj(g_qp)[:, None] * Aq
            A[q, :] = np.conj(g_pq)[:, None] * Ap + np.conj(g_qq)[:, None] * Aq
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = Vp * g_pp + Vq * g_qp
            V[:, q] = Vp * g_pq + Vq * g_qq
    if _off_norm(A) <= threshold:
        return np.real(np.diag(A)).copy(), V
    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")


def hermitian_eig(M, tol=DEFAULT_TOL, method="auto", max_sweeps=MAX_SWEEPS):
    """Eigenvalues (ascending) and a unitary of eigenvectors of Hermitian ``M``.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_N``).
    """
    M = as_matrix(M)
    n, m = M.shape
    if n != m:
        raise NotHermitian(f"matrix is not square: {M.shape}")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), complex)
    norm = float(np.linalg.norm(M))
    if np.linalg.norm(M - M.conj().T) > tol * max(1.0, norm):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    H = (M + M.conj().T) / 2
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        threshold = min(tol, _JACOBI_FLOOR) * norm
        w, V = jacobi_eig(H, threshold, max_sweeps)
        order = np.argsort(w, kind="stable")
        return w[order], V[:, order]
    if method == "lapack":
        w, V = np.linalg.eigh(H)
        return w, V.astype(complex)
    raise ValueError(f"unknown method {method!r}")


def psd_min_eigenvalue(M, tol=DEFAULT_TOL) -> float:
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    w, _ = hermitian_eig(M, tol)
    return float(w[0])


def is_psd(M, tol=DEFAULT_TOL) -> bool:
    """Hermitian with spectrum >= -eps*max(1, |M|)."""
    M = as_matrix(M)
    if M.size == 0:
        return True
    if not is_hermitian(M, tol):
        return False
    return psd_min_eigenvalue(M, tol) >= -tol * scale_of(M)


def polar_decompose(M, tol=DEFAULT_TOL):
    """``M = v @ p`` with ``p = sqrt(M^* M)`` and ``v`` vanishing on ker(p)."""
    M = as_matrix(M)
    _, W = hermitian_eig(M.conj().T @ M, tol)
    # |M w_k| is accurate to roundoff in M, sqrt of the eigenvalue only to its root
    sigma = np.linalg.norm(M @ W, axis=0)
    p = (W * sigma) @ W.conj().T
    cut = tol * scale_of(M)
    inv = np.where(sigma > cut, 1.0 / np.where(sigma > cut, sigma, 1.0), 0.0)
    v = M @ (W * inv) @ W.conj().T
    return v, p


def range_isometry(p, tol=DEFAULT_TOL) -> np.ndarray:
    """An isometry ``iota`` with ``iota iota^* = p`` and ``iota^* iota = 1``."""
    p = as_matrix(p)
    if not is_projection(p, tol):
        raise NotProjection("input is not an orthogonal projection")
    if p.shape[0] == 0:
        return np.zeros((0, 0), complex)
    w, U = hermitian_eig(p, tol)
    return U[:, w > 0.5]


def nullspace(Q, tol=DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of a PSD matrix."""
    Q = as_matrix(Q)
    if Q.shape[0] == 0:
        return np.zeros((0, 0), complex)
    w, U = hermitian_eig(Q, tol)
    cut = tol * max(1.0, float(np.max(np.abs(w))))
    return U[:, w <= cut]


_REDUCTION_RNG_SEED = 20240917


def _constraint_gram(Ls, Rs, a_idx, b_idx):
    """Gram matrix of x -> (x L_k - R_k x) restricted to unknowns E_ab."""
    nu = len(a_idx)
    Q = np.zeros((nu, nu), dtype=complex)
    same_a = a_idx[:, None] == a_idx[None, :]
    same_b = b_idx[:, None] == b_idx[None, :]
    A1, A2 = np.meshgrid(a_idx, a_idx, indexing="ij")
    B1, B2 = np.meshgrid(b_idx, b_idx, indexing="ij")
    for L, R in zip(Ls, Rs):
        LL = L @ L.conj().T
        RR = R.conj().T @ R
        Q += np.where(same_a, LL[B2, B1], 0.0)
        Q -= R[A1, A2] * L[B1, B2].conj()
        Q -= R[A2, A1].conj() * L[B2, B1]
        Q += np.where(same_b, RR[A1, A2], 0.0)
    return Q


def intertwiner_basis(lhs, rhs, tol=DEFAULT_TOL, star_closed=False):
    """Basis of ``{x : V -> W | x @ lhs[k] == rhs[k] @ x for all k}``.

    The constraints are vectorised and the kernel is extracted from their Gram
    matrix.  With ``star_closed=True`` the pairs ``(lhs[k]^*, rhs[k]^*)`` are
    adjoined and a generic Hermitian combination is diagonalised first: an
    intertwiner must map its eigenspaces to the matching ones, which shrinks
    the unknowns to matching eigenvalue clusters before the remaining
    constraints are imposed.

    Returns a list of ``dim W x dim V`` matrices, orthonormal in the trace
    inner product.
    """
    if len(lhs) != len(rhs):
        raise DimensionMismatch("lhs and rhs must have the same length")
    Ls = [as_matrix(L) for L in lhs]
    Rs = [as_matrix(R) for R in rhs]
    if not Ls:
        raise DimensionMismatch("need at least one constraint pair (pass the identity)")
    dV, dW = Ls[0].shape[0], Rs[0].shape[0]
    for L, R in zip(Ls, Rs):
        if L.shape != (dV, dV) or R.shape != (dW, dW):
            raise DimensionMismatch("constraint matrices must be square and equally sized")
    if dV == 0 or dW == 0:
        return []
    if star_closed:
        Ls = Ls + [L.conj().T for L in Ls]
        Rs = Rs + [R.conj().T for R in Rs]
        rng = np.random.default_rng(_REDUCTION_RNG_SEED)
        coef = rng.uniform(0.5, 1.5, size=(len(Ls), 2))
        hV = sum(c0 * (L + L.conj().T) + c1 * 1j * (L - L.conj().T) for (c0, c1), L in zip(coef, Ls))
        hW = sum(c0 * (R + R.conj().T) + c1 * 1j * (R - R.conj().T) for (c0, c1), R in zip(coef, Rs))
        lamV, UV = hermitian_eig(hV, tol)
        lamW, UW = hermitian_eig(hW, tol)
        scale = max(1.0, float(np.max(np.abs(lamV), initial=0)), float(np.max(np.abs(lamW), initial=0)))
        # clusters are merged generously: merging only adds unknowns
        close = np.abs(lamW[:, None] - lamV[None, :]) <= 1e-6 * scale
        a_idx, b_idx = np.nonzero(close)
        Lt = [UV.conj().T @ L @ UV for L in Ls]
        Rt = [UW.conj().T @ R @ UW for R in Rs]
    else:
        a_idx, b_idx = np.divmod(np.arange(dW * dV), dV)
        UV, UW, Lt, Rt = np.eye(dV), np.eye(dW), Ls, Rs
    if len(a_idx) == 0:
        return []
    Q = _constraint_gram(Lt, Rt, a_idx, b_idx)
    Q = (Q + Q.conj().T) / 2
    N = nullspace(Q, tol)
    basis = []
    for col in N.T:
        xt = np.zeros((dW, dV), dtype=complex)
        xt[a_idx, b_idx] = col
        basis.append(UW @ xt @ UV.conj().T)
    return basis
