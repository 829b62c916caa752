"""Exception hierarchy shared across the package."""

from __future__ import annotations


class EpsplanError(Exception):
    """Base class for all package errors."""


class TaskValidationError(EpsplanError):
    """A task, state, or plan violates a structural invariant."""


class PreconditionError(EpsplanError):
    """An action was applied in a state that does not satisfy its precondition."""


class ParseError(EpsplanError):
    """Input document rejected. `code` identifies the violation kind and
    `where` points at the offending field (JSON path or PDDL construct)."""

    def __init__(self, message: str, *, code: str = "schema", where: str = ""):
        self.code = code
        self.where = where
        suffix = f" (at {where})" if where else ""
        super().__init__(f"{message}{suffix}")


class OutOfSubsetError(ParseError):
    """Input uses a PDDL feature outside the supported subset."""

    def __init__(self, construct: str, *, where: str = ""):
        self.construct = construct
        super().__init__(
            f"unsupported construct outside the PDDL subset: {construct}",
            code="out-of-subset",
            where=where,
        )


class EstimatorContractError(EpsplanError):
    """An estimator backend returned a reversed interval (lo > hi)."""


class InconsistentEstimatorsError(EpsplanError):
    """Estimator intervals for one action have an empty intersection, or a
    cached interval excludes the known true cost. Signals bad input data."""


class ExternalEstimatorError(EpsplanError):
    """The external estimator subprocess misbehaved. `kind` is one of
    'malformed', 'timeout', 'process-exit'."""

    def __init__(self, message: str, *, kind: str):
        self.kind = kind
        super().__init__(message)


class StateCapError(EpsplanError):
    """An exhaustive computation exceeded its configured state cap."""
