"""Numerics, configuration and paths."""
