"""The category ``A-Mod`` of finite-dimensional modules over a multimatrix algebra.

An object is its multiplicity vector ``x``: the Hilbert space
``H = +_i C^{n_i} (x) C^{x_i}`` with ``a`` acting as ``kron(a_i, I_{x_i})``.
A morphism is one ``y_i x x_i`` matrix per block, acting as
``kron(I_{n_i}, f_i)``, so composition, adjoint and norm are blockwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import AlgebraElement, MultiMatrixAlgebra
from .errors import (
    AlgebraMismatch,
    DimensionMismatch,
    NotFaithful,
    NotIsometry,
    NotOrthogonal,
    NotProjection,
    NotUnitary,
    ProjectionsDontSum,
    ShapeMismatch,
)
from .linalg import (
    DEFAULT_TOL,
    as_matrix,
    block_diag,
    is_projection,
    is_unitary,
    range_isometry,
    scale_of,
)

__all__ = [
    "ModuleObject",
    "ModuleMorphism",
    "Presentation",
    "Partition",
    "GramSchmidtResult",
    "CSBResult",
    "hom_basis",
    "direct_sum",
    "split_idempotent",
    "csb_isomorphism",
    "csb_chain",
    "gram_schmidt",
    "stable_equivalent",
    "central_decomposition",
    "embed_into_power",
    "hilb_scale",
    "hilb_unitor",
    "completion_from_presentation",
    "presentation_of",
    "endomorphism_algebra",
]


@dataclass(frozen=True)
class ModuleObject:
    algebra: MultiMatrixAlgebra
    mult: tuple

    def __init__(self, algebra: MultiMatrixAlgebra, mult):
        m = tuple(int(v) for v in np.asarray(mult, dtype=int).reshape(-1)) if len(algebra.blocks) else ()
        if len(m) != len(algebra.blocks):
            raise ShapeMismatch(f"mult has length {len(m)}, algebra has {len(algebra.blocks)} blocks")
        if any(v < 0 for v in m):
            raise DimensionMismatch("multiplicities must be non-negative")
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "mult", m)

    def __repr__(self):
        return f"ModuleObject({list(self.algebra.blocks)}, {list(self.mult)})"

    @property
    def dim(self) -> int:
        return sum(n * x for n, x in zip(self.algebra.blocks, self.mult))

    @property
    def support(self) -> frozenset:
        return frozenset(i for i, x in enumerate(self.mult) if x > 0)

    @property
    def faithful(self) -> bool:
        return all(x > 0 for x in self.mult)

    def is_zero(self) -> bool:
        return not any(self.mult)

    def action(self, a: AlgebraElement) -> np.ndarray:
        if a.algebra != self.algebra:
            raise AlgebraMismatch("element of a different algebra")
        return block_diag([np.kron(b, np.eye(x)) for b, x in zip(a.block_data, self.mult)])

    @classmethod
    def regular(cls, algebra: MultiMatrixAlgebra) -> "ModuleObject":
        """``L^2 A`` as a left module: multiplicity ``n_i`` on block ``i``."""
        return cls(algebra, algebra.blocks)

    @classmethod
    def zero(cls, algebra: MultiMatrixAlgebra) -> "ModuleObject":
        return cls(algebra, [0] * len(algebra.blocks))

    @classmethod
    def simple(cls, algebra: MultiMatrixAlgebra, i: int) -> "ModuleObject":
        m = [0] * len(algebra.blocks)
        m[i] = 1
        return cls(algebra, m)


def _same_algebra(*objs):
    A = objs[0].algebra
    for o in objs[1:]:
        if o.algebra != A:
            raise AlgebraMismatch(f"objects over {A} and {o.algebra}")
    return A


@dataclass(frozen=True, eq=False)
class ModuleMorphism:
    source: ModuleObject
    target: ModuleObject
    block_data: tuple

    def __init__(self, source: ModuleObject, target: ModuleObject, blocks: Sequence):
        _same_algebra(source, target)
        if len(blocks) != len(source.mult):
            raise ShapeMismatch("one block per algebra block is required")
        data = []
        for b, x, y in zip(blocks, source.mult, target.mult):
            m = np.zeros((y, x), complex) if np.size(b) == 0 else as_matrix(b)
            if m.shape != (y, x):
                raise ShapeMismatch(f"block of shape {m.shape}, expected {(y, x)}")
            data.append(m)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "block_data", tuple(data))

    @classmethod
    def identity(cls, H: ModuleObject) -> "ModuleMorphism":
        return cls(H, H, [np.eye(x) for x in H.mult])

    @classmethod
    def zero(cls, H: ModuleObject, K: ModuleObject) -> "ModuleMorphism":
        return cls(H, K, [np.zeros((y, x)) for x, y in zip(H.mult, K.mult)])

    def _parallel(self, other):
        if self.source != other.source or self.target != other.target:
            raise ShapeMismatch("morphisms with different endpoints")

    def __add__(self, other):
        self._parallel(other)
        return ModuleMorphism(self.source, self.target, [a + b for a, b in zip(self.block_data, other.block_data)])

    def __sub__(self, other):
        self._parallel(other)
        return ModuleMorphism(self.source, self.target, [a - b for a, b in zip(self.block_data, other.block_data)])

    def __neg__(self):
        return ModuleMorphism(self.source, self.target, [-a for a in self.block_data])

    def __mul__(self, scalar):
        return ModuleMorphism(self.source, self.target, [scalar * a for a in self.block_data])

    __rmul__ = __mul__

    def __matmul__(self, other: "ModuleMorphism") -> "ModuleMorphism":
        """Composition ``self o other``."""
        if other.target != self.source:
            raise ShapeMismatch("morphisms are not composable")
        return ModuleMorphism(other.source, self.target, [a @ b for a, b in zip(self.block_data, other.block_data)])

    def adjoint(self) -> "ModuleMorphism":
        return ModuleMorphism(self.target, self.source, [a.conj().T for a in self.block_data])

    @property
    def H(self):
        return self.adjoint()

    def norm(self) -> float:
        return max((float(np.linalg.norm(a, 2)) for a in self.block_data if a.size), default=0.0)

    def frobenius(self) -> float:
        return float(np.sqrt(sum(np.linalg.norm(a) ** 2 for a in self.block_data)))

    def dense(self) -> np.ndarray:
        """The operator on the underlying Hilbert spaces."""
        return block_diag(
            [np.kron(np.eye(n), b) for n, b in zip(self.source.algebra.blocks, self.block_data)]
        )

    def distance(self, other) -> float:
        self._parallel(other)
        return (self - other).frobenius()

    def allclose(self, other, tol=DEFAULT_TOL) -> bool:
        return self.distance(other) <= tol * scale_of(*self.block_data, *other.block_data)

    def is_isometry(self, tol=DEFAULT_TOL) -> bool:
        r = (self.adjoint() @ self).distance(ModuleMorphism.identity(self.source))
        return r <= tol * max(1.0, np.sqrt(self.source.dim))

    def is_unitary(self, tol=DEFAULT_TOL) -> bool:
        return self.source.mult == self.target.mult and all(is_unitary(b, tol) for b in self.block_data)

    def is_projection(self, tol=DEFAULT_TOL) -> bool:
        return self.source == self.target and all(is_projection(b, tol) for b in self.block_data)


def hom_basis(H: ModuleObject, K: ModuleObject):
    """``(dimension, basis)``; the basis consists of matrix units block by block."""
    _same_algebra(H, K)
    basis = []
    for i, (x, y) in enumerate(zip(H.mult, K.mult)):
        for r in range(y):
            for c in range(x):
                blocks = [np.zeros((yy, xx), complex) for xx, yy in zip(H.mult, K.mult)]
                blocks[i][r, c] = 1.0
                basis.append(ModuleMorphism(H, K, blocks))
    return len(basis), basis


def direct_sum(objects: Sequence[ModuleObject], algebra: MultiMatrixAlgebra = None):
    """``(S, [iota_k])`` with ``iota_k^* iota_l = delta_kl`` and ``sum iota_k iota_k^* = id``."""
    if not objects:
        if algebra is None:
            raise DimensionMismatch("empty direct sum needs an algebra")
        return ModuleObject.zero(algebra), []
    A = _same_algebra(*objects)
    total = np.sum([o.mult for o in objects], axis=0) if len(A.blocks) else []
    S = ModuleObject(A, total)
    iotas = []
    offset = np.zeros(len(A.blocks), dtype=int)
    for o in objects:
        blocks = []
        for i, x in enumerate(o.mult):
            b = np.zeros((S.mult[i], x))
            b[offset[i]:offset[i] + x, :] = np.eye(x)
            blocks.append(b)
        iotas.append(ModuleMorphism(o, S, blocks))
        offset = offset + np.array(o.mult, dtype=int)
    return S, iotas


def split_idempotent(p: ModuleMorphism, tol=DEFAULT_TOL):
    """``(y, iota)`` with ``iota iota^* = p`` and ``iota^* iota = id_y``."""
    if p.source != p.target:
        raise NotProjection("an idempotent must be an endomorphism")
    isos = [range_isometry(b, tol) for b in p.block_data]
    y = ModuleObject(p.source.algebra, [io.shape[1] for io in isos])
    return y, ModuleMorphism(y, p.source, isos)


class CSBResult(NamedTuple):
    unitary: ModuleMorphism
    steps: int


def csb_chain(f: ModuleMorphism, g: ModuleMorphism, tol=DEFAULT_TOL) -> CSBResult:
    """Back-and-forth construction of a unitary from isometries ``f: H->K``, ``g: K->H``.

    ``H_0 = H``, ``H_{n+1} = g(K_n)``, ``K_{n+1} = f(H_n)``.  With
    ``H^n = H_n - H_{n+1}`` the unitary is ``f`` on ``H_inf + H^0 + H^2 + ...``
    and ``g^*`` on ``H^1 + H^3 + ...``.  ``steps`` is the first ``n`` at which
    both chains stop shrinking.
    """
    H, K = f.source, f.target
    if g.source != K or g.target != H:
        raise ShapeMismatch("need f: H -> K and g: K -> H")
    if not f.is_isometry(tol) or not g.is_isometry(tol):
        raise NotIsometry("both maps must be isometries")
    if H.mult != K.mult:
        # isometries both ways force equal multiplicities; reaching here is a bug
        raise NotIsometry("isometries both ways but multiplicities differ")
    unitary_blocks = []
    steps = 0
    for fi, gi, x in zip(f.block_data, g.block_data, H.mult):
        PH = [np.eye(x, dtype=complex)]
        PK = [np.eye(x, dtype=complex)]
        while True:
            nh = gi @ PK[-1] @ gi.conj().T
            nk = fi @ PH[-1] @ fi.conj().T
            same = (
                abs(np.trace(nh) - np.trace(PH[-1])) < 0.5
                and abs(np.trace(nk) - np.trace(PK[-1])) < 0.5
            )
            if same:
                break
            PH.append(nh)
            PK.append(nk)
        steps = max(steps, len(PH) - 1)
        even = PH[-1].copy()
        odd = np.zeros_like(even)
        for n in range(len(PH) - 1):
            layer = PH[n] - PH[n + 1]
            if n % 2 == 0:
                even += layer
            else:
                odd += layer
        unitary_blocks.append(fi @ even + gi.conj().T @ odd)
    u = ModuleMorphism(H, K, unitary_blocks)
    if not u.is_unitary(tol):
        raise NotUnitary("chain construction did not produce a unitary")
    return CSBResult(u, steps)


def csb_isomorphism(f: ModuleMorphism, g: ModuleMorphism, tol=DEFAULT_TOL) -> ModuleMorphism:
    return csb_chain(f, g, tol).unitary


@dataclass(frozen=True)
class Partition:
    """Blocks owned by each generator, and the unsupported remainder ``D``."""

    parts: tuple
    remainder: tuple


class GramSchmidtResult(NamedTuple):
    generators: list
    partition: Partition
    projections: list


def gram_schmidt(generators: Sequence[ModuleObject]) -> GramSchmidtResult:
    """Orthogonalise by support subtraction in list order.

    Generator ``i`` keeps the blocks of its support not already claimed by an
    earlier one, with multiplicities unchanged; ``projections[i]`` is the
    projection of ``c_i`` onto that subobject.
    """
    if not generators:
        raise DimensionMismatch("need at least one generator")
    A = _same_algebra(*generators)
    claimed = set()
    outs, parts, projs = [], [], []
    for c in generators:
        mine = sorted(c.support - claimed)
        claimed |= c.support
        mult = [x if i in mine else 0 for i, x in enumerate(c.mult)]
        outs.append(ModuleObject(A, mult))
        parts.append(tuple(mine))
        projs.append(
            ModuleMorphism(c, c, [np.eye(x) if i in mine else np.zeros((x, x)) for i, x in enumerate(c.mult)])
        )
    remainder = tuple(i for i in range(len(A.blocks)) if i not in claimed)
    return GramSchmidtResult(outs, Partition(tuple(parts), remainder), projs)


def stable_equivalent(c: ModuleObject, d: ModuleObject) -> bool:
    _same_algebra(c, d)
    return c.support == d.support


def central_decomposition(objects: Sequence[ModuleObject]):
    """``(p_i, q, C_i, D)`` for mutually orthogonal objects.

    ``p_i`` is the central support of ``c_i``, ``q = 1 - sum p_i``, and
    ``C_i``/``D`` are the corresponding summand algebras.
    """
    if not objects:
        raise DimensionMismatch("need at least one object")
    A = _same_algebra(*objects)
    for a in range(len(objects)):
        for b in range(a + 1, len(objects)):
            if hom_basis(objects[a], objects[b])[0]:
                raise NotOrthogonal(f"Hom(c_{a}, c_{b}) is nonzero")

    def indicator(blocks):
        return AlgebraElement(A, [np.eye(n) if i in blocks else np.zeros((n, n)) for i, n in enumerate(A.blocks)])

    ps = [indicator(c.support) for c in objects]
    used = set().union(*(c.support for c in objects))
    rest = [i for i in range(len(A.blocks)) if i not in used]
    q = indicator(set(rest))
    Cs = [MultiMatrixAlgebra([A.blocks[i] for i in sorted(c.support)]) for c in objects]
    D = MultiMatrixAlgebra([A.blocks[i] for i in rest])
    return ps, q, Cs, D


def embed_into_power(K: ModuleObject, H: ModuleObject):
    """``(copies, v)`` with ``v: K -> H^{+copies}`` a coordinate isometry."""
    A = _same_algebra(K, H)
    if not H.faithful:
        raise NotFaithful("the target module must have every multiplicity positive")
    copies = max((ceil(k / h) for k, h in zip(K.mult, H.mult)), default=0)
    P = ModuleObject(A, [copies * h for h in H.mult])
    blocks = [np.eye(p, k) for k, p in zip(K.mult, P.mult)]
    return copies, ModuleMorphism(K, P, blocks)


def hilb_scale(n: int, c: ModuleObject) -> ModuleObject:
    """``C^n (x) c``."""
    if n < 0:
        raise DimensionMismatch("Hilbert space dimension must be non-negative")
    return ModuleObject(c.algebra, [n * x for x in c.mult])


def hilb_unitor(c: ModuleObject) -> ModuleMorphism:
    """``C (x) c -> c``; the identity in multiplicity coordinates."""
    return ModuleMorphism(hilb_scale(1, c), c, [np.eye(x) for x in c.mult])


@dataclass(frozen=True, eq=False)
class Presentation:
    """An endomorphism algebra of a generator with projections onto summands."""

    algebra: MultiMatrixAlgebra
    projections: tuple

    def __init__(self, algebra, projections):
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "projections", tuple(projections))


def completion_from_presentation(P: Presentation, tol=DEFAULT_TOL):
    """``(category, images)``: the module category and where each ``p_i`` goes.

    The image of summand ``i`` has multiplicity ``rank((p_i)_b)`` on block ``b``.
    """
    A = P.algebra
    total = A.zero()
    for p in P.projections:
        if p.algebra != A:
            raise AlgebraMismatch("projection over a different algebra")
        if not p.is_projection(tol):
            raise NotProjection("presentation entries must be projections")
        total = total + p
    if not total.allclose(A.identity(), tol):
        raise ProjectionsDontSum("projections do not sum to the identity")
    images = [ModuleObject(A, p.ranks(tol)) for p in P.projections]
    return A, images


def endomorphism_algebra(c: ModuleObject):
    """``(End(c), blocks)``: the algebra of nonzero multiplicities and their indices."""
    idx = [i for i, x in enumerate(c.mult) if x > 0]
    return MultiMatrixAlgebra([c.mult[i] for i in idx]), idx


def presentation_of(objects: Sequence[ModuleObject]):
    """Presentation of the subcategory generated by ``objects``.

    Returns ``(Presentation, blocks)`` where the algebra is ``End(+ c_i)``
    with its zero blocks dropped and ``blocks`` lists the algebra blocks they
    come from.
    """
    S, iotas = direct_sum(objects)
    E, idx = endomorphism_algebra(S)
    projs = []
    for io in iotas:
        pr = io @ io.adjoint()
        projs.append(AlgebraElement(E, [pr.block_data[i] for i in idx]))
    return Presentation(E, projs), idx
