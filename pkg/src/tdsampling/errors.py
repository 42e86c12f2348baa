"""Exception hierarchy shared across the package."""


class TDSamplingError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(TDSamplingError, ValueError):
    pass


class SingularKernelError(TDSamplingError, ValueError):
    """A source, sampling node and sensor came closer than the kernel guard."""


class InvalidCurveError(TDSamplingError, ValueError):
    pass


class IllPosedCandidatesError(TDSamplingError, ValueError):
    """The normal matrix of the intensity problem is numerically singular."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class FitError(TDSamplingError, ValueError):
    """Polynomial fitting cannot be carried out on the given points.

    ``kind`` is one of ``"insufficient-points"``, ``"degenerate-abscissa"``
    or ``"degenerate-ordinate"``.
    """

    def __init__(self, kind, message):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class ConfigError(TDSamplingError, ValueError):
    """Invalid run configuration; carries the offending key path and line."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key:
            where += f" at '{key}'"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"config-error{where}: {message}")
        self.key = key
        self.line = line


class StageError(TDSamplingError, RuntimeError):
    """Numerical failure inside a named pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
