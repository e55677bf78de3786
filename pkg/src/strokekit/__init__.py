"""Wrist-sensor badminton stroke analysis: segmentation, classification,
quality rating, impact location and session reporting."""

__version__ = "0.1.0"
