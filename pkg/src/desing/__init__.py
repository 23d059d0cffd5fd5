"""Exact resolution of singularities for affine marked ideals.

The engine works over the rationals with exact arithmetic throughout,
produces verifiable blow-up traces, and ships a calculus of explicit
complexity bounds for every stage of the construction.
"""

__version__ = "0.1.0"

from .poly import Polynomial, parse_poly, format_poly, NEG_INF  # noqa: F401
from .ideals import Ideal, MarkedIdeal, DerivationFrame  # noqa: F401
