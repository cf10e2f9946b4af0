"""Numerical laboratory for flat SU(n) connections on a nodally degenerating curve."""

from nodal_moduli.alcove import AlcovePoint, MultiplicityPattern
from nodal_moduli.lie_core import GroupElement, LieAlgebraElement, TorusElement

__all__ = [
    "AlcovePoint",
    "GroupElement",
    "LieAlgebraElement",
    "MultiplicityPattern",
    "TorusElement",
]

__version__ = "0.1.0"
