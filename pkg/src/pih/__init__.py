"""Persistent homology and persistent intersection homology of filtered
simplicial complexes built from point clouds."""

__version__ = "0.1.0"
