"""Travelling waves of defocusing NLS with nonzero conditions at infinity."""

__version__ = "0.1.0"
