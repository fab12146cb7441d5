"""Exception hierarchy for the bias audit library.

Every contract violation raises a named exception so callers (and the CLI
exit-code mapping) can distinguish validation problems from genuine I/O
failures. All exceptions derive from :class:`BiasAuditError`.
"""

from __future__ import annotations


class BiasAuditError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BiasAuditError, ValueError):
    """Inputs violate a documented contract (CLI exit code 2)."""


class IoFailure(BiasAuditError, OSError):
    """A file could not be read or written (CLI exit code 3)."""


# ---------------------------------------------------------------------------
# core
# ---------------------------------------------------------------------------

class UnknownAttribute(ValidationError):
    """The named attribute is not declared in the schema."""

    def __init__(self, attribute: str):
        self.attribute = attribute
        super().__init__(f"unknown attribute: {attribute!r}")


class UnknownGroup(ValidationError):
    """The named group is not declared for the attribute."""

    def __init__(self, attribute: str, group: str):
        self.attribute = attribute
        self.group = group
        super().__init__(f"unknown group {group!r} for attribute {attribute!r}")


class EmptyDataset(ValidationError):
    """The operation requires at least one record."""


class EmptyTable(ValidationError):
    """The contingency table has a zero total."""


class EmptyEvaluationSet(ValidationError):
    """The operation requires at least one evaluation record."""


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

class NotNormalized(ValidationError):
    """A probability vector has negative entries or does not sum to 1."""


class TooFewGroups(ValidationError):
    """The distribution covers fewer than two groups."""


class DegenerateJoint(ValidationError):
    """All probability mass sits in a single cell, so normalization is undefined."""


class NoSupportedGroups(ValidationError):
    """No group in the class row meets the support policy."""

    def __init__(self, class_label: str | None = None):
        self.class_label = class_label
        if class_label is None:
            super().__init__("no groups meet the support policy")
        else:
            super().__init__(f"no supported groups for class {class_label!r}")


class NoPrivilegedSamples(ValidationError):
    """The evaluation set contains no records of the privileged group."""


class NoUnprivilegedSamples(ValidationError):
    """The evaluation set contains no records outside the privileged group."""


class ZeroDenominator(ValidationError):
    """The privileged positive rate is zero, so the ratio is undefined."""


# ---------------------------------------------------------------------------
# resample
# ---------------------------------------------------------------------------

class EmptyCell(ValidationError):
    """A (class, group) cell required by the construction has no records."""

    def __init__(self, class_label: str, group: str):
        self.class_label = class_label
        self.group = group
        super().__init__(f"empty cell: class {class_label!r}, group {group!r}")


class InvalidFraction(ValidationError):
    """The sampling fraction is outside (0, 1]."""


class InsufficientSamples(ValidationError):
    """A class lacks the records needed to match the balanced per-class totals."""

    def __init__(self, class_label: str, needed: int, available: int):
        self.class_label = class_label
        self.needed = needed
        self.available = available
        super().__init__(
            f"class {class_label!r} needs {needed} records but only {available} are available"
        )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

class InvalidSpec(ValidationError):
    """A population or profile specification violates its contract."""


class MissingProfileRow(ValidationError):
    """The classifier profile has no distribution for a (class, group) pair."""

    def __init__(self, class_label: str, group: str):
        self.class_label = class_label
        self.group = group
        super().__init__(f"profile has no row for class {class_label!r}, group {group!r}")


class MismatchedKeys(ValidationError):
    """Aggregated runs do not share the same metric keys."""


# ---------------------------------------------------------------------------
# io
# ---------------------------------------------------------------------------

class MissingColumn(ValidationError):
    """A required column is absent from the file header."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"missing required column: {column!r}")


class UnknownLabel(ValidationError):
    """A cell value is outside the declared schema (line numbers are 1-based, header is line 1)."""

    def __init__(self, line: int, column: str, value: str):
        self.line = line
        self.column = column
        self.value = value
        super().__init__(f"line {line}: unknown {column!r} value {value!r}")


class DuplicateId(ValidationError):
    """Two rows share the same id."""

    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"duplicate id: {record_id!r}")


class EmptyFile(ValidationError):
    """The file has a header but no data rows, or no content at all."""


class UnmatchedId(ValidationError):
    """A predictions row references an id absent from the dataset file."""

    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"prediction id not present in dataset: {record_id!r}")


# ---------------------------------------------------------------------------
# cli / reports
# ---------------------------------------------------------------------------

class SchemaMismatch(ValidationError):
    """Reports being compared disagree on attributes, groups, or classes."""
