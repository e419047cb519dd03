"""Learned team movement for a Retakes-style shooter."""

__version__ = "0.1.0"
