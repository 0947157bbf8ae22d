"""Exception hierarchy shared by the numerics and the CLI."""

from __future__ import annotations

from typing import Any


class MildDescentError(Exception):
    """Base class; ``code`` is the stable token printed by the CLI."""

    code = "error"


class ConfigError(MildDescentError, ValueError):
    """Invalid or unparsable configuration."""

    code = "config"


class DimensionError(MildDescentError, ValueError):
    """A state or control has the wrong shape."""

    code = "dimension"


class GridAlignmentError(MildDescentError, ValueError):
    """A time or breakpoint is not a node of the fine grid."""

    code = "alignment"


class HorizonMismatchError(MildDescentError, ValueError):
    """Two controls (or a control and a grid) disagree on T."""

    code = "horizon"


class AdmissibilityError(MildDescentError, ValueError):
    """A control value lies outside the ball B_R."""

    code = "admissibility"


class DivergenceError(MildDescentError, ArithmeticError):
    """The state left the divergence bound or became non-finite."""

    code = "divergence"

    def __init__(self, message: str, time: float | None = None) -> None:
        super().__init__(message)
        self.time = time


class MissingDerivativeError(MildDescentError, ValueError):
    """A derivative map required by the variational equation is absent."""

    code = "missing-derivative"

    def __init__(self, field: str) -> None:
        super().__init__(f"problem does not supply '{field}', required for the variational equation")
        self.field = field


class DescentAborted(MildDescentError):
    """Propagation failed inside a descent iteration.

    ``partial`` holds whatever was computed before the failure: the control
    values of the interrupted sweep, or the report of the interrupted run.
    """

    code = "descent-aborted"

    def __init__(self, message: str, partial: Any = None) -> None:
        super().__init__(message)
        self.partial = partial


class ArtifactError(MildDescentError, ValueError):
    """An artifact file is missing, unwritable or malformed."""

    code = "artifact"
