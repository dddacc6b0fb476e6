"""Domain exceptions shared across the package.

Every error the pipeline can signal on purpose derives from PulsePipeError so
callers (CLI, gateway) can map them to exit codes / error frames in one place.
"""


class PulsePipeError(Exception):
    """Base class for all deliberate domain errors."""


class EmptyStream(PulsePipeError):
    """An operation that needs samples received none."""


class DataLost(PulsePipeError):
    """A requested window was (partly) overwritten in the ring buffer."""


class ZeroEnergy(PulsePipeError):
    """Autocorrelation input carries no usable energy."""


class NoPeriodicity(PulsePipeError):
    """No autocorrelation peak above the confidence floor."""


class ModelFailure(PulsePipeError):
    """A plugged-in scoring model returned malformed output."""


class LengthMismatch(PulsePipeError):
    """Two sequences that must align have different lengths."""


class NoGoodWindows(PulsePipeError):
    """Window selection found nothing labeled Good."""


class ScorerFailure(PulsePipeError):
    """A gestational-age scorer returned a non-finite or out-of-range value."""


class NoLcdFound(PulsePipeError):
    """No display panel candidate survived the localization gates."""


class UndecodablePattern(PulsePipeError):
    """A probed segment pattern matches no canonical digit."""

    def __init__(self, pattern=frozenset(), row=None, cell=None):
        self.pattern = frozenset(pattern)
        self.row = row
        self.cell = cell
        where = "" if row is None else f" (row {row}, cell {cell})"
        super().__init__(f"no digit matches segments {sorted(self.pattern)}{where}")


class RowSplitFailure(PulsePipeError):
    """Panel did not split into the expected number of display rows."""


class OutOfRangeValue(PulsePipeError):
    """A requested value falls outside its displayable/generatable range."""


class UnsupportedFormat(PulsePipeError):
    """File is readable but not in a format this package accepts."""


class CorruptHeader(PulsePipeError):
    """File header is damaged or not the claimed container at all."""


class TruncatedData(PulsePipeError):
    """File ended before the payload promised by its header."""


class NoOverlap(PulsePipeError):
    """Two session logs share no tick where the compared field is present."""


class FieldMissing(PulsePipeError):
    """Requested field is not part of the session-log row schema."""


class SchemaMismatch(PulsePipeError):
    """Session log violates the expected line schema."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SessionStopped(PulsePipeError):
    """Operation requires a live session but the session is not running."""


class PortInUse(PulsePipeError):
    """Requested TCP port is already bound."""
