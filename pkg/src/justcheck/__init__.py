"""Explicit-state checker for mutual exclusion algorithms under justness."""

__version__ = "0.1.0"
