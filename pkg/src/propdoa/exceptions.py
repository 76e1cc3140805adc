"""Exception types shared across the package.

Validation problems (bad arguments, impossible geometries) derive from
``ValueError``; numerical failures discovered while processing otherwise
valid inputs derive from ``EstimationError``. The CLI maps the former to
exit code 2 and the latter to exit code 3.
"""


class EstimationError(Exception):
    """Numerical failure while building an operator or an estimate."""


class IllConditionedError(EstimationError):
    """A matrix block is rank deficient beyond the working tolerance."""


class UndefinedCorrelationError(EstimationError):
    """Correlation requested against a zero-variance spectrum."""


class ApplicabilityError(ValueError):
    """The requested operator does not exist for this sensor/source count."""


class PartitionError(ValueError):
    """Partition order outside the valid range for the geometry."""


class ScenarioError(ValueError):
    """Scenario is incompatible with the array configuration."""
