"""Numerical verification of indefinite g.f.f- and S-manifold geometry."""

__version__ = "0.1.0"
