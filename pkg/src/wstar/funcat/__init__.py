"""Functors between module categories, the Hilb-valued inner product, adjoints and cones."""

from .adjoint import *  # noqa: F401,F403
from .adjoint import __all__ as _adjoint_all
from .audit import *  # noqa: F401,F403
from .audit import __all__ as _audit_all
from .cones import *  # noqa: F401,F403
from .cones import __all__ as _cones_all
from .dictionary import *  # noqa: F401,F403
from .dictionary import __all__ as _dictionary_all
from .inner import *  # noqa: F401,F403
from .inner import __all__ as _inner_all

# the submodule attribute would otherwise shadow the function
from .adjoint import adjoint  # noqa: E402

__all__ = [*_dictionary_all, *_inner_all, *_adjoint_all, *_cones_all, *_audit_all]
