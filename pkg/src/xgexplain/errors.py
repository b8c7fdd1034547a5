"""Exception types raised across the package."""


class XGError(Exception):
    """Base class for all package errors."""


class ValidationError(XGError):
    pass


class MissingColumn(ValidationError):
    def __init__(self, name):
        super().__init__(f"missing column: {name}")
        self.name = name


class BadValue(ValidationError):
    def __init__(self, row, column, reason):
        super().__init__(f"row {row}, column {column!r}: {reason}")
        self.row = row
        self.column = column
        self.reason = reason


class EmptyFile(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class Degenerate(XGError):
    """Shot taken from the goal line inside the goal mouth."""

    def __init__(self, message, shot_id=None):
        super().__init__(message if shot_id is None else f"{message} (shot {shot_id})")
        self.shot_id = shot_id


class SchemaMismatch(XGError):
    pass


class DegenerateClass(XGError):
    pass


class TooFewRows(XGError):
    pass


class EmptyTable(XGError):
    pass


class PayloadNotFound(XGError):
    pass


class MalformedJson(XGError):
    def __init__(self, position, message=""):
        super().__init__(f"malformed JSON payload at position {position}: {message}")
        self.position = position


class UnknownEnum(XGError):
    def __init__(self, field, value):
        super().__init__(f"unknown {field} value: {value!r}")
        self.field = field
        self.value = value


class HttpError(XGError):
    def __init__(self, status, url=""):
        super().__init__(f"HTTP {status} for {url}")
        self.status = status


class SchemaVersionMismatch(XGError):
    pass


class CorruptModel(XGError):
    pass


class LengthMismatch(XGError):
    pass


class SingleClass(XGError):
    pass


class EmptyInput(XGError):
    pass


class UnknownFeature(XGError):
    pass


class ConstantFeature(XGError):
    pass


class EmptyGroup(XGError):
    pass


class OutOfGrid(XGError):
    pass


class ZeroBaseline(XGError):
    pass


class MixedMatches(XGError):
    pass


class MixedPlayers(XGError):
    pass


class ConfigError(ValidationError):
    pass


class ZeroVarianceWarning(UserWarning):
    """A continuous column is constant within the class being over-sampled."""


class PartitionError(XGError):
    """Rows tagged as the test partition reached balancing or fitting."""
