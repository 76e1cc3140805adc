"""Input validation helpers for the estimator API.

scikit-learn's own ``check_array`` rejects complex data, so the snapshot
checks live here. Estimator inputs follow the sklearn orientation (rows
are samples): a plain array is interpreted as snapshots x sensors, while
a :class:`~propdoa.synthesis.SnapshotBlock` keeps its native sensors x
snapshots layout.
"""

from __future__ import annotations

import numpy as np

from .covariance import CovarianceEstimate
from .synthesis import SnapshotBlock

__all__ = ["check_snapshots", "check_covariance"]


def check_snapshots(X, min_sensors: int = 2) -> np.ndarray:
    """Validate snapshot input and return it as a sensors x snapshots matrix."""
    if isinstance(X, SnapshotBlock):
        samples = X.samples
    else:
        samples = np.asarray(X)
        if samples.ndim != 2:
            raise ValueError(f"expected a 2-D snapshot matrix, got shape {samples.shape}")
        samples = samples.astype(complex).T
    if not np.all(np.isfinite(samples)):
        raise ValueError("snapshot matrix contains non-finite entries")
    if samples.shape[0] < min_sensors:
        raise ValueError(
            f"need at least {min_sensors} sensors, got {samples.shape[0]}"
        )
    if samples.shape[1] < 1:
        raise ValueError("need at least one snapshot")
    return samples


def check_covariance(gamma) -> CovarianceEstimate:
    """Coerce an array or CovarianceEstimate into a CovarianceEstimate."""
    if isinstance(gamma, CovarianceEstimate):
        return gamma
    return CovarianceEstimate(entries=np.asarray(gamma))
