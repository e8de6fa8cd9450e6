"""Symbolic-numeric toolkit for linear second-order ODEs and their Lagrangians."""

__version__ = "0.1.0"
