"""Bounds and simulators for classifier-induced distribution shift."""

__version__ = "0.1.0"
