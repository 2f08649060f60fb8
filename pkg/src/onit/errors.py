"""Domain errors carrying machine-readable codes.

Every failure that callers are expected to handle programmatically raises
an AuditError with a stable ``code`` string; the CLI and HTTP service
serialize these verbatim so tooling can match on them.
"""

from __future__ import annotations

from typing import Any


class AuditError(Exception):
    """Base error; ``code`` is a stable identifier, ``details`` is JSON-safe."""

    def __init__(self, code: str, message: str, **details: Any):
        super().__init__(message)
        self.code = code
        self.message = message
        self.details = details

    def to_json(self) -> dict[str, Any]:
        return {"error": self.code, "message": self.message, "details": self.details}

    def __repr__(self) -> str:  # pragma: no cover
        return f"AuditError({self.code!r}, {self.message!r})"


# Shorthand constructors keep call sites compact and the code list greppable.

def tie(totals: dict[str, int]) -> AuditError:
    return AuditError("TIE", "plurality tie: no auditable winner", totals=totals)


def nonpositive_margin(margin: str) -> AuditError:
    return AuditError(
        "NONPOSITIVE_MARGIN",
        "reported results do not support the reported winner",
        margin=margin,
    )


def wrong_state(expected: str, actual: str) -> AuditError:
    return AuditError("WRONG_STATE", f"operation requires {expected} session, got {actual}",
                      expected=expected, actual=actual)
