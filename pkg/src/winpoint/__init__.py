"""Exact Winograd transform construction, conditioning analysis and point search."""
__version__ = "0.1.0"
