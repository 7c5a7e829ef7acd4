"""Exception hierarchy shared across the package."""


class TextAtlasError(Exception):
    """Base class for all package errors."""


class IngestError(TextAtlasError):
    """A corpus record could not be admitted (duplicate id, malformed line)."""


class SpanOutOfRange(TextAtlasError):
    pass


class OverlappingHighlight(TextAtlasError):
    pass


class KeywordConflict(TextAtlasError):
    """A vocabulary word is already owned by a different code."""

    def __init__(self, message: str, owner_code_id: str):
        super().__init__(message)
        self.owner_code_id = owner_code_id


class ReservedCode(TextAtlasError):
    pass


class NotFound(TextAtlasError):
    pass


class IntegrityError(TextAtlasError):
    """Dangling references between annotations, vocabulary, and documents."""

    def __init__(self, message: str, offenders: list | None = None):
        super().__init__(message)
        self.offenders = offenders or []


class InvalidPartition(TextAtlasError):
    pass


class InvalidMove(TextAtlasError):
    pass


class InvalidLevel(TextAtlasError):
    pass


class EmptyDocument(TextAtlasError):
    pass


class SampleTooLarge(TextAtlasError):
    pass


class OrderTooLarge(TextAtlasError):
    pass


class Busy(TextAtlasError):
    """An update job is already active for this project."""
