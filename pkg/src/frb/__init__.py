"""Pseudo-spectral simulation and verification toolkit for the fractional
rough Burgers equation and the rough Degasperis-Procesi equation on the
one-dimensional torus driven by space-time white noise."""

__version__ = "0.1.0"
