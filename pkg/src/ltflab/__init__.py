"""Threshold circuits, random restrictions and small-bias codes at desk scale."""

__version__ = "0.1.0"
