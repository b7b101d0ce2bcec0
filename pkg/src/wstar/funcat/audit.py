"""Line-oriented audit reports for the bi-involutive structure and the dictionary.

Each report line reads ``<diagram-id> residual=<float> pass|fail``; the
header records the seed used for any random probe data.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..algebra import MultiMatrixAlgebra
from ..bimod import (
    Bimodule,
    BimoduleMap,
    as_bimodule,
    as_module_morphism,
    associator,
    conjugate,
    fuse,
    fuse_maps,
    hexagon_residual,
    nu_naturality_residual,
    phi_tensor_residual,
    phi_unit_residual,
    unit_residuals,
)
from ..errors import AlgebraMismatch, WStarError
from ..linalg import DEFAULT_TOL
from ..modcat import ModuleMorphism, ModuleObject
from .adjoint import adjoint, verify_adjunction
from .dictionary import Functor, apply_functor, compose, extract_bimodule, functor_box

__all__ = ["Report", "biinvolutive_audit", "vn2_wstarcat_roundtrip"]


@dataclass
class Report:
    title: str
    seed: int
    tol: float
    entries: list = field(default_factory=list)  # (id, residual, passed, count)
    data: dict = field(default_factory=dict)  # computed values carried alongside

    def add(self, diagram: str, residual: float, count: int = 1, passed: bool = None):
        residual = float(residual)
        if passed is None:
            passed = residual <= self.tol
        self.entries.append((diagram, residual, bool(passed), int(count)))

    @property
    def passed(self) -> bool:
        return all(p for _, _, p, _ in self.entries)

    def lines(self) -> list:
        out = [f"# {self.title} seed={self.seed} tol={self.tol:.3e}"]
        for d, r, p, _ in self.entries:
            out.append(f"{d} residual={r:.3e} {'pass' if p else 'fail'}")
        return out

    def __str__(self):
        return "\n".join(self.lines())

    def to_document(self) -> dict:
        return {
            "kind": "report",
            "title": self.title,
            "seed": self.seed,
            "tol": self.tol,
            "passed": self.passed,
            "entries": [
                {"id": d, "residual": r, "pass": p, "count": n} for d, r, p, n in self.entries
            ],
            "data": self.data,
        }


def _random_endo(X: Bimodule, rng) -> BimoduleMap:
    cells = {}
    for j, i in X.cells():
        m = X.mult[j][i]
        cells[(j, i)] = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return BimoduleMap(X, X, cells)


def biinvolutive_audit(
    A: MultiMatrixAlgebra, sample: Sequence[Bimodule], tol=DEFAULT_TOL, seed=0
) -> Report:
    """Hexagon, unit diagrams, ``phi_1`` and ``phi_{x (x) y}`` on the sample; max residual per diagram."""
    if not sample:
        raise WStarError("audit sample is empty")
    for X in sample:
        if X.left != A or X.right != A:
            raise AlgebraMismatch("sample bimodules must be A-A bimodules")
    rng = np.random.default_rng(seed)
    rep = Report("biinvolutive", seed, tol)
    triples = list(itertools.product(sample, repeat=3))
    rep.add("hexagon", max(hexagon_residual(x, y, z) for x, y, z in triples), len(triples))
    units = [unit_residuals(x) for x in sample]
    rep.add("unit-left", max(u[0] for u in units), len(sample))
    rep.add("unit-right", max(u[1] for u in units), len(sample))
    rep.add("phi-unit", phi_unit_residual(A))
    pairs = list(itertools.product(sample, repeat=2))
    rep.add("phi-tensor", max(phi_tensor_residual(x, y) for x, y in pairs), len(pairs))
    # naturality of nu on seeded random endomorphisms, scaled to the inputs
    worst = 0.0
    for x, y in pairs:
        f, g = _random_endo(x, rng), _random_endo(y, rng)
        scale = max(1.0, f.norm() * g.norm())
        worst = max(worst, nu_naturality_residual(f, g) / scale)
    rep.add("nu-naturality", worst, len(pairs))
    return rep


def _random_morphism(H: ModuleObject, rng) -> ModuleMorphism:
    return ModuleMorphism(
        H, H, [rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)) for m in H.mult]
    )


def _mult_gap(X: Bimodule, Y: Bimodule) -> float:
    """Total multiplicity discrepancy; 1 if the endpoints differ."""
    if X.left != Y.left or X.right != Y.right:
        return 1.0
    return float(np.abs(X.k - Y.k).sum())


def vn2_wstarcat_roundtrip(
    A: MultiMatrixAlgebra, B: MultiMatrixAlgebra, X: Bimodule, Y: Bimodule = None, tol=DEFAULT_TOL, seed=0
) -> Report:
    """Dictionary round trip, composition against fusion, and adjoint against conjugate.

    ``Y`` is a bimodule over ``(C, B)`` used for the composition check; it
    defaults to ``conj(X)``.
    """
    if X.left != B or X.right != A:
        raise AlgebraMismatch("X must be a B-A bimodule")
    Y = conjugate(X) if Y is None else Y
    if Y.right != B:
        raise AlgebraMismatch("Y must have right algebra B")
    rng = np.random.default_rng(seed)
    rep = Report("vn2-wstarcat", seed, tol)
    F, G = Functor(X), Functor(Y)

    ex = extract_bimodule(functor_box(F), A, tol, seed)
    rep.add("dictionary-mult", _mult_gap(ex.bimodule, X))
    rep.add("dictionary-frame", ex.residual)

    c = ModuleObject.regular(A)
    f = _random_morphism(c, rng)
    GF = compose(G, F)
    yc = as_bimodule(c)
    a = as_module_morphism(associator(Y, X, yc))  # (Y X) c -> Y (X c)
    two_step = apply_functor(G, apply_functor(F, f))
    one_step = apply_functor(GF, f)
    resid = (a @ one_step).distance(two_step @ a) / max(1.0, f.norm())
    same = apply_functor(G, apply_functor(F, c)).mult == apply_functor(GF, c).mult
    rep.add("composition-objects", 0.0 if same else 1.0)
    rep.add("composition-morphisms", resid)

    d = ModuleObject.regular(B)
    adj = verify_adjunction(F, c, d)
    rep.add("adjoint-unitary", adj.unitary_residual)
    rep.add("adjoint-naturality", adj.naturality_residual)
    exd = extract_bimodule(functor_box(adjoint(F)), B, tol, seed)
    rep.add("adjoint-conjugate", _mult_gap(exd.bimodule, conjugate(X)))
    return rep
