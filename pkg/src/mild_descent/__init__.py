"""
mild-descent - monotone sample-and-hold descent for optimal control of
semilinear evolution equations.

Reproduces the reaction-diffusion benchmark on the torus and checks the
exact cost-increment formula against independent oracles.
"""

__version__ = "0.1.0"
__all__ = ["cli", "core", "commands", "utils"]
