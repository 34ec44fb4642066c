"""Stable orientation dynamical systems with conic safety filtering."""

__version__ = "0.1.0"
