"""Thermodynamic formalism for cusped Fuchsian groups."""

__version__ = "0.1.0"
