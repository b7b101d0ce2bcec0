"""Finite-dimensional W*-categories: multimatrix algebras, their module and
bimodule categories, Connes fusion, the Hilb-valued inner product, adjoint
functors with their coherences, and positive cones.
"""

from . import algebra, bimod, errors, funcat, linalg, modcat
from .algebra import AlgebraElement, AlgebraHom, MultiMatrixAlgebra, l2_standard_form
from .bimod import CC, Bimodule, BimoduleMap, fuse, fuse_maps, fuse_oracle
from .errors import WStarError
from .funcat import Functor, NatTransform, adjoint, hilb_inner_product, verify_adjunction
from .modcat import ModuleMorphism, ModuleObject

__version__ = "0.1.0"

__all__ = [
    "algebra",
    "bimod",
    "errors",
    "funcat",
    "linalg",
    "modcat",
    "MultiMatrixAlgebra",
    "AlgebraElement",
    "AlgebraHom",
    "l2_standard_form",
    "ModuleObject",
    "ModuleMorphism",
    "CC",
    "Bimodule",
    "BimoduleMap",
    "fuse",
    "fuse_maps",
    "fuse_oracle",
    "Functor",
    "NatTransform",
    "adjoint",
    "hilb_inner_product",
    "verify_adjunction",
    "WStarError",
]
