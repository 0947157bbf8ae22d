"""Command implementations for mild-descent."""
