"""Shared exception types."""


class TrailmakerError(Exception):
    """Base class for all package errors."""


class OutOfBoundsError(TrailmakerError):
    """Position falls outside the planar workspace."""


class TargetNotFoundError(TrailmakerError):
    """Referenced target id does not exist in the trail."""


class InsufficientTargetsError(TrailmakerError):
    """Operation needs at least two targets / generated segments."""


class IntegrationError(TrailmakerError):
    """Non-finite state or forces fed to the integrator."""


class SessionStateError(TrailmakerError):
    """Operation not valid in the current session state."""


class FormatError(TrailmakerError):
    """Malformed persisted file."""

    def __init__(self, message, *, path=None, line=None, field=None):
        ctx = []
        if path is not None:
            ctx.append(f"file={path}")
        if line is not None:
            ctx.append(f"line={line}")
        if field is not None:
            ctx.append(f"field={field}")
        if ctx:
            message = f"{message} ({', '.join(ctx)})"
        super().__init__(message)
        self.path = path
        self.line = line
        self.field = field


class UnsupportedVersionError(FormatError):
    """Persisted file declares a format_version this build cannot read."""


class ValidationError(TrailmakerError):
    """Value violates a documented invariant."""


class DegenerateSampleError(TrailmakerError):
    """Statistical routine fed a sample it cannot process (e.g. constant)."""


class ExportError(TrailmakerError):
    """Dataset export could not produce any eligible series."""
