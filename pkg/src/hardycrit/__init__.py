"""Variational toolkit for -Lap u = (A + h)/|x|^2 u + k u^{2*-1} on R^N."""

__version__ = "0.1.0"
