"""Introspective detection of object-detector false negatives from feature maps."""

__version__ = "0.1.0"
