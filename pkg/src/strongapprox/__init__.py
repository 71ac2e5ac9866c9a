"""Desk-scale workbench for strong approximation with a removed codimension-two subset.

Integral points of bounded height on ``SL2`` and on norm-one quaternion groups,
local densities, a combinatorial sieve, almost-prime searches, Pell-torus orbit
selection, and a certificate-producing solver with an independent verifier.
"""

from .errors import WorkbenchError
from .groups import GroupElement, GroupSpec, Model
from .polynomial import RegularFunction

__all__ = ["GroupElement", "GroupSpec", "Model", "RegularFunction", "WorkbenchError"]
__version__ = "0.1.0"
