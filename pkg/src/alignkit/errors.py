"""Exception types shared across the toolkit."""

from __future__ import annotations


class BoundaryAllocationError(ValueError):
    """A zero allocation reached a log-ratio computation with smoothing disabled."""


class DimensionMismatchError(ValueError):
    """Vectors disagree on the number of principles or on the reference principle."""


class SchemaError(ValueError):
    """Tabular input does not match the documented CSV schema."""


class IncompleteSubjectError(ValueError):
    """A subject-stage block does not cover every declared principle."""


class SumViolationError(ValueError):
    """A subject-stage block's allocations sum too far from 1 to renormalize."""


class UnknownPrincipleError(ValueError):
    """A row names a principle that is not in the declared principle set."""


class StageOrderError(RuntimeError):
    """A session mutation would violate the forward-only stage machine."""


class UnknownSessionError(KeyError):
    """No persisted session exists under the requested id."""
