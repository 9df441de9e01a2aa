"""Simulation and verification tools for diagonal products of lamplighter groups."""

__version__ = "0.1.0"
