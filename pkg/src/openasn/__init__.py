"""Simulate threshold-based habilitation checks with open citation data."""

__version__ = "0.1.0"
