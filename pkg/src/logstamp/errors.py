"""Exception hierarchy.

Every error carries a stable machine-readable ``code`` so callers (and the
CLI exit-code mapping) can dispatch without string-matching messages.
"""

from __future__ import annotations


class LogstampError(Exception):
    code = "ERROR"


class EmptyInputError(LogstampError):
    code = "EMPTY_INPUT"


class IndexRangeError(LogstampError):
    code = "INDEX_RANGE"


class MalformedProofError(LogstampError):
    code = "MALFORMED_PROOF"


class BadParamError(LogstampError):
    code = "BAD_PARAM"


class DelayBudgetError(LogstampError):
    code = "DELAY_BUDGET"


class CountMismatchError(LogstampError):
    code = "COUNT_MISMATCH"


class MalformedMarkerError(LogstampError):
    code = "MALFORMED_MARKER"

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        super().__init__(f"malformed marker field '{field}'" + (f": {detail}" if detail else ""))


class VersionError(LogstampError):
    code = "VERSION"


class RuleSyntaxError(LogstampError):
    code = "RULE_SYNTAX"

    def __init__(self, line_number: int, detail: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {detail}")


class RuleDuplicateError(LogstampError):
    code = "RULE_DUPLICATE"

    def __init__(self, class_name: str):
        self.class_name = class_name
        super().__init__(f"duplicate retention class '{class_name}'")


class IoSinkError(LogstampError):
    code = "IO_SINK"

    def __init__(self, class_name: str, cause: BaseException):
        self.class_name = class_name
        super().__init__(f"write to class '{class_name}' failed: {cause}")


class BackendUnavailableError(LogstampError):
    code = "BACKEND_UNAVAILABLE"


class BackendRejectedError(LogstampError):
    code = "BACKEND_REJECTED"
