"""Traveling-wave speeds of the coupled FKPP-Burgers system."""

__version__ = "0.1.0"
