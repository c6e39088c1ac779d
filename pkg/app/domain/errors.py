# app/domain/errors.py


class SliptError(Exception):
    """Base class for everything the simulator raises on purpose."""


class DomainError(SliptError, ValueError):
    """A physical input outside its domain (negative power, distance, ...)."""


class DegenerateGeometryError(DomainError):
    """Beam radius at the receiver is zero."""


class ModeViolationError(SliptError):
    """Solar cell asked to harvest while decoding, or the other way round."""


class NeverFullError(SliptError):
    """Store cannot reach full charge with the given net power."""


class FrameError(SliptError):
    """Command frame with a bad sync byte, bad length or CRC mismatch."""


class ConfigError(SliptError, ValueError):
    """Scenario/config problem, tagged with the dotted config path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)
