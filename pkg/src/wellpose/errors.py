"""Shared exception types."""


class PreconditionError(ValueError):
    """A stated hypothesis of a checked statement is violated.

    Raised instead of returning a refutation: outside its hypothesis the
    checked statement may legitimately fail, so callers must never read
    this exception as a counterexample.
    """


class ReplayError(RuntimeError):
    """An internally recomputed claim failed to replay (bug indicator)."""
