"""Exception hierarchy for the SOL kernel"""

from typing import Iterable, Optional


class SolError(Exception):
    """Base class for every kernel failure."""

    prefix = "SOL error"

    def __init__(self, message: str):
        super().__init__(f"{self.prefix}: {message}")
        self.detail = message


class TypeMismatchError(SolError):
    prefix = "Type mismatch"


class EvaluationError(SolError):
    prefix = "Evaluation failed"


class UnsupportedQuantifierError(SolError):
    prefix = "Unsupported quantifier"


class ResourceError(SolError):
    prefix = "Resource limit exceeded"


class SigningError(SolError):
    """Raised when no signing rule applies; carries the rule and grounded refs."""

    prefix = "Signing failed"

    def __init__(self, rule: str, message: str, refs: Iterable = ()):
        self.rule = rule
        self.refs = tuple(refs)
        super().__init__(f"({rule}) {message}")


class ScriptError(SolError):
    """Lexical, syntax or declaration error in a ``.sol`` script."""

    prefix = "Script error"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")
