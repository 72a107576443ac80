"""Exception types shared across the toolkit."""


class DegenerateDenominatorError(ValueError):
    """NMSE denominator (product of signal means) is exactly zero."""


class UndefinedCorrelationError(ValueError):
    """Correlation requested where one side has zero variance."""


class SpectralConsistencyError(RuntimeError):
    """Inverse transform of a full real-signal spectrum produced a non-real result."""


class SchemaError(ValueError):
    """CSV header does not match the expected schema."""


class RowParseError(ValueError):
    """A CSV row failed strict parsing; carries the 1-based row number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class DuplicateRowError(ValueError):
    """Two rows address the same (participant, feature, recording_type, t_index)."""


class ProtocolError(RuntimeError):
    """A party observed a message outside the expected protocol order."""


class HandshakeError(ProtocolError):
    """Parties disagree on protocol parameters (e.g. feature dimension)."""


class KernelIntegrityError(ValueError):
    """A gram block violates a structural requirement (e.g. asymmetry)."""
