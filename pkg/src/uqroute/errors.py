"""Exception types shared across the package.

Per-record problems (missing evidence, unparseable confidence text) are
distinct from structural errors (bad files, mismatched inputs) so batch
callers can discard individual records without aborting a whole run.
"""


class UqrouteError(Exception):
    """Base class for all package errors."""


class MalformedRecord(UqrouteError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateId(UqrouteError):
    def __init__(self, trace_id: str):
        self.trace_id = trace_id
        super().__init__(f"duplicate trace id {trace_id!r}")


class MissingLabel(UqrouteError):
    def __init__(self, trace_id: str):
        self.trace_id = trace_id
        super().__init__(f"trace {trace_id!r} has no correctness label")


class InvalidArgument(UqrouteError):
    pass


class MissingField(UqrouteError):
    """A scorer's required evidence is absent from the trace."""

    def __init__(self, field: str, trace_id: str = ""):
        self.field = field
        self.trace_id = trace_id
        where = f" on trace {trace_id!r}" if trace_id else ""
        super().__init__(f"required field {field!r} absent{where}")


class NonCompliant(UqrouteError):
    """The model's confidence text contains no parseable number.

    Callers must treat the record as discarded, never as confidence 0.
    """

    def __init__(self, trace_id: str):
        self.trace_id = trace_id
        super().__init__(f"trace {trace_id!r}: no parseable confidence")


class DimensionMismatch(UqrouteError):
    pass


class SingleClassTrainingSet(UqrouteError):
    pass


class SingleClassLabels(UqrouteError):
    pass


class LengthMismatch(UqrouteError):
    pass


class EmptyScores(UqrouteError):
    pass


class EmptyKeptSet(UqrouteError):
    pass


class EmptyCalibrationSet(UqrouteError):
    pass


class UnknownDataset(UqrouteError):
    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"no traces carry dataset tag {tag!r}")


class SingleDataset(UqrouteError):
    pass


class GatewayConfigError(UqrouteError):
    pass


class WeakEndpointUnavailable(UqrouteError):
    pass


class StrongEndpointUnavailable(UqrouteError):
    pass


class ScoringFailed(UqrouteError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)
