"""Utility modules for mild-descent."""
