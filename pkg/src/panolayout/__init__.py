"""Geometric and numerical core for panoramic room-layout estimation."""

__version__ = "0.1.0"
