"""Requirement extraction from building technical specifications."""

__version__ = "0.1.0"
