"""Optimal dynamic information design by backward induction over common information."""

__version__ = "0.1.0"
