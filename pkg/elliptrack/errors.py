"""Exception hierarchy for the Elliptrack library and CLI."""

from typing import Any, Dict, Optional


class ElliptrackError(Exception):
    """
    Base error. ``exit_code`` is what the CLI returns for it and ``detail``
    is the message printed on stderr.
    """

    exit_code = 1

    def __init__(self, detail: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(detail)
        self.detail = detail
        self.context: Dict[str, Any] = dict(context or {})

    def __str__(self) -> str:
        if not self.context:
            return self.detail
        ctx = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.detail} ({ctx})"


class ContractViolation(ElliptrackError, ValueError):
    """Caller broke a precondition: shapes, weights, SPD inputs."""

    exit_code = 2


class ConfigError(ElliptrackError):
    """Invalid configuration file, environment override or CLI input."""

    exit_code = 2


class NumericalSingularityError(ElliptrackError):
    """An SPD factorization failed or its pivots were too small."""

    exit_code = 3

    def __init__(
        self,
        matrix: str,
        detail: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(
            detail or f"Matrix {matrix} is numerically singular", context
        )
        self.matrix = matrix
        self.context.setdefault("matrix", matrix)


class DegenerateLinearizationError(ElliptrackError):
    """The pseudo-measurement residual covariance could not be repaired."""

    exit_code = 3


class InitializationDeferred(ElliptrackError):
    """
    Not enough information in a scan to initialise a track. Callers are
    expected to wait for another scan, so this never becomes an exit code.
    """

    exit_code = 0


class TrackerFailure(ElliptrackError):
    """A tracker error raised inside a Monte Carlo run."""

    exit_code = 3


def with_context(exc: ElliptrackError, **context: Any) -> ElliptrackError:
    """Merge ``context`` into ``exc`` (inner keys win) and return it."""
    for key, value in context.items():
        exc.context.setdefault(key, value)
    return exc
