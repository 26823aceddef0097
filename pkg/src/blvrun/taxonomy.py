"""Classification of exception types into the supported summary categories."""

from __future__ import annotations

from dataclasses import dataclass

# The exception types the summarizer is tuned for, in presentation order.
SUPPORTED_ERROR_TYPES = (
    "TypeError",
    "ValueError",
    "AttributeError",
    "IndexError",
    "NameError",
    "RuntimeError",
    "KeyError",
)

OTHER = "Other"


@dataclass(frozen=True)
class ErrorCategory:
    """Either one of the seven supported types, or Other carrying the raw token."""

    name: str
    detail: str | None = None

    @property
    def is_supported(self) -> bool:
        return self.detail is None

    @property
    def label(self) -> str:
        """The text shown in reports: the category name, or the raw token for Other."""
        return self.name if self.detail is None else self.detail


def classify(exception_type: str) -> ErrorCategory:
    """Map an exception type token onto its category.

    Matching is exact and case-sensitive against the last dotted component
    (``builtins.KeyError`` counts as ``KeyError``); anything else becomes
    ``Other`` carrying the verbatim token. Subclass relationships are not
    inferred: the parser only ever sees the printed name.
    """
    token = exception_type.rsplit(".", 1)[-1]
    if token in SUPPORTED_ERROR_TYPES:
        return ErrorCategory(token)
    return ErrorCategory(OTHER, exception_type)


def supported_categories() -> list[ErrorCategory]:
    return [ErrorCategory(name) for name in SUPPORTED_ERROR_TYPES]
