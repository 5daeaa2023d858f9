"""Symbolic synthesis of implementations of knowledge-based programs."""

__version__ = "0.1.0"
