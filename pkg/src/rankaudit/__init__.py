"""Outcome tests for bias in ranked lists."""

__version__ = "0.1.0"
