"""Exception hierarchy and the validation report shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable


class FlowSortError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(FlowSortError, ValueError):
    """Input is malformed: missing entries, wrong shapes, unknown names."""


class DomainError(FlowSortError, ValueError):
    """A well-formed input lies outside the domain of an operation."""


class PreconditionError(FlowSortError, ValueError):
    """Input is well formed but invalid for the requested operation.

    ``report`` carries the individual violations when they are known.
    """

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report


class ProfileValidityError(PreconditionError):
    """Reference profiles do not separate the categories."""


class InconsistencyError(FlowSortError, RuntimeError):
    """A computed quantity contradicts a guarantee of the method."""


class GenerationError(FlowSortError, ValueError):
    """A random-instance configuration cannot be satisfied."""


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    location: str | None = None
    data: dict[str, Any] = field(default_factory=dict)

    def __str__(self) -> str:
        if self.location:
            return f"{self.location}: {self.message}"
        return self.message


@dataclass
class ValidationReport:
    """Collected violations. An empty report means the input is valid."""

    issues: list[Issue] = field(default_factory=list)
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, code: str, message: str, location: str | None = None, **data: Any) -> None:
        self.issues.append(Issue(code, message, location, data))

    def extend(self, other: "ValidationReport | Iterable[Issue]") -> None:
        if isinstance(other, ValidationReport):
            self.issues.extend(other.issues)
            self.truncated = self.truncated or other.truncated
        else:
            self.issues.extend(other)

    def codes(self) -> set[str]:
        return {issue.code for issue in self.issues}

    def raise_if_invalid(self, message: str, exc_type: type[PreconditionError] = PreconditionError) -> None:
        if self.issues:
            details = "; ".join(str(i) for i in self.issues[:5])
            more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
            raise exc_type(f"{message}: {details}{more}", self)

    def __len__(self) -> int:
        return len(self.issues)

    def __iter__(self):
        return iter(self.issues)
