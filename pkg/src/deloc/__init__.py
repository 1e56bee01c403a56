"""Delocalization diagnostics for eigenvectors of graph adjacency matrices."""

__version__ = "0.1.0"
