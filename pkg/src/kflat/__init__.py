"""Quantitative index pairings between quasi-representations and almost flat bundles.

Modules
-------
numerics   matrix utilities: polar parts, windings, Bott index
groups     finitely presented groups (free, free abelian) and group algebras
covers     good cover pairs with partitions of unity
quasirep   quasi-representations, relative quasi-representations, mapping cones
bundles    Cech cocycles, projection fields, Chern numbers, clutching
monodromy  the almost monodromy correspondence beta / alpha
qk         quantitative K-theory elements and their integers
index      index classes, Fredholm pairs and the index pairing
cli        command line entry point
"""
from . import bundles, covers, groups, index, monodromy, numerics, qk, quasirep
from .errors import KFlatError

__version__ = "0.1.0"

__all__ = ["bundles", "covers", "groups", "index", "monodromy", "numerics", "qk", "quasirep", "KFlatError", "__version__"]
