"""Weakly submodular maximization under matroid constraints."""

__version__ = "0.1.0"
