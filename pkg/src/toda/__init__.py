"""Toda lattice flows by spectral deformation, Darboux transformation and
direct integration, with the supporting Jacobi-operator toolkit."""

__version__ = "0.1.0"
