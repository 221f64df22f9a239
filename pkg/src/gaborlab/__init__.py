"""Gabor frames over finite abelian groups, with the operator-algebra engine
(twisted group algebras, center-valued dimensions, basic construction,
bimodule bounded-vector comparison) needed to certify their duality theory."""

__version__ = "0.1.0"
