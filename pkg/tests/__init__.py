"""Tests for mild-descent."""
