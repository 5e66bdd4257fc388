"""Adjoint Reidemeister torsion and trace-fiber reciprocal sums for twist knots."""

__version__ = "0.1.0"
