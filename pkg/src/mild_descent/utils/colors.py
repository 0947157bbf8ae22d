"""Terminal color utilities."""

from __future__ import annotations

import os
import sys


class Colors:
    """ANSI color codes for terminal output."""

    BLUE = "\033[94m"
    CYAN = "\033[96m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    RED = "\033[91m"
    ENDC = "\033[0m"
    BOLD = "\033[1m"
    DIM = "\033[2m"


def color_enabled() -> bool:
    """Colors only on a terminal, and never when NO_COLOR is set."""
    return "NO_COLOR" not in os.environ and sys.stdout.isatty()


def c(text: str, color: str) -> str:
    """
    Colorize text with ANSI color code.

    Args:
        text: Text to colorize
        color: Color code from Colors class

    Returns:
        Colorized text, or ``text`` unchanged when colors are off
    """
    if not color_enabled():
        return text
    return f"{color}{text}{Colors.ENDC}"


def verdict(passed: bool) -> str:
    return c("ok", Colors.GREEN) if passed else c("FAILED", Colors.RED)
