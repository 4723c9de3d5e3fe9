"""Shared error types and the cooperative budget check.

Long-running feature computations poll ``check_deadline`` between work
chunks so a per-run time budget can abort them without killing the process.
"""

from __future__ import annotations

import time

__all__ = ["BudgetExceededError", "check_deadline"]


class BudgetExceededError(RuntimeError):
    """Raised when a computation runs past its cooperative deadline."""


def check_deadline(deadline: float | None):
    """Raise BudgetExceededError when the monotonic clock passed deadline."""
    if deadline is not None and time.perf_counter() > deadline:
        raise BudgetExceededError("per-run time budget exceeded")
