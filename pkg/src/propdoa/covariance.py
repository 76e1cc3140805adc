"""Covariance matrices and their block partition.

The partition splits the N sensors into n consecutive groups: n-1 groups
of P sensors and a final group absorbing the remainder N-(n-1)*P. Blocks
of the covariance matrix are addressed through 0/1 selection matrices
``e_i`` (or equivalent row/column slices), and the partition order is
valid for ``2 <= n <= floor(N/P)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import SteeringMatrix
from .exceptions import PartitionError

__all__ = [
    "CovarianceEstimate",
    "PartitionScheme",
    "sample_covariance",
    "theoretical_covariance",
    "make_partition",
    "selection_matrix",
    "covariance_block",
]


@dataclass(frozen=True)
class CovarianceEstimate:
    """Hermitian spatial covariance matrix.

    The constructor symmetrizes its input, ``(G + G^H) / 2``, so block
    extraction downstream sees an exactly Hermitian matrix; inputs that
    are non-Hermitian beyond rounding noise are rejected.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.all(np.isfinite(entries)):
            raise ValueError("covariance contains non-finite entries")
        scale = np.linalg.norm(entries)
        if scale > 0.0 and np.linalg.norm(entries - entries.conj().T) > 1e-8 * scale:
            raise ValueError("covariance is not Hermitian within tolerance")
        entries = (entries + entries.conj().T) / 2.0
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def sensors(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class PartitionScheme:
    """n-fold partition of N sensors for P sources.

    Block sizes are ``[P, ..., P, N-(n-1)*P]``; the last block absorbs
    the remainder and is never smaller than P.
    """

    sensors: int
    sources: int
    order: int

    def __post_init__(self):
        if self.sources < 1:
            raise ValueError(f"sources must be >= 1, got {self.sources!r}")
        if self.sensors <= self.sources:
            raise ValueError(
                f"need more sensors than sources, got N={self.sensors}, P={self.sources}"
            )
        n_max = self.sensors // self.sources
        if not 2 <= self.order <= n_max:
            raise PartitionError(
                f"partition order n={self.order} invalid for N={self.sensors}, "
                f"P={self.sources}; valid range is 2 <= n <= {n_max}"
            )

    @property
    def block_sizes(self) -> tuple:
        tail = self.sensors - (self.order - 1) * self.sources
        return (self.sources,) * (self.order - 1) + (tail,)

    @property
    def offsets(self) -> tuple:
        return tuple(int(x) for x in np.cumsum((0,) + self.block_sizes))

    def block_slice(self, i: int) -> slice:
        """Row/column range of block ``i`` (1-based)."""
        if not 1 <= i <= self.order:
            raise ValueError(f"block index must lie in 1..{self.order}, got {i}")
        return slice(self.offsets[i - 1], self.offsets[i])


def sample_covariance(snapshots) -> CovarianceEstimate:
    """Sample covariance ``(1/K) X X^H`` of a snapshot block."""
    samples = np.asarray(getattr(snapshots, "samples", snapshots), dtype=complex)
    if samples.ndim != 2 or samples.shape[1] < 1:
        raise ValueError("need a sensors x snapshots matrix with at least one snapshot")
    gram = samples @ samples.conj().T / samples.shape[1]
    return CovarianceEstimate(entries=gram)


def theoretical_covariance(steering: SteeringMatrix, source_powers, noise_var: float) -> CovarianceEstimate:
    """Exact covariance ``A diag(powers) A^H + noise_var * I``."""
    if noise_var < 0.0:
        raise ValueError(f"noise variance must be non-negative, got {noise_var!r}")
    powers = np.asarray(source_powers, dtype=float)
    a = steering.entries
    if powers.shape != (a.shape[1],):
        raise ValueError("source_powers must have one entry per source")
    gamma = (a * powers) @ a.conj().T + noise_var * np.eye(a.shape[0])
    return CovarianceEstimate(entries=gamma)


def make_partition(sensors: int, sources: int, order: int) -> PartitionScheme:
    """Build the n-fold partition scheme, validating the order bound."""
    return PartitionScheme(sensors=int(sensors), sources=int(sources), order=int(order))


def selection_matrix(scheme: PartitionScheme, i: int) -> np.ndarray:
    """0/1 selection matrix ``e_i`` extracting block ``i``'s sensor rows.

    Columns are standard basis vectors, so ``e_i^T e_j = delta_ij * I``
    and ``sum_i e_i e_i^T = I`` hold exactly.
    """
    rows = scheme.block_slice(i)
    e = np.zeros((scheme.sensors, scheme.block_sizes[i - 1]))
    e[rows, :] = np.eye(scheme.block_sizes[i - 1])
    return e


def covariance_block(gamma: CovarianceEstimate, scheme: PartitionScheme, i: int, j: int) -> np.ndarray:
    """Block ``e_i^T Gamma e_j`` of the partitioned covariance.

    Thanks to the constructor's symmetrization, conjugate-transposing
    block (i, j) gives block (j, i) exactly.
    """
    entries = np.asarray(gamma)
    if entries.shape[0] != scheme.sensors:
        raise ValueError(
            f"covariance size {entries.shape[0]} does not match scheme sensors {scheme.sensors}"
        )
    return entries[scheme.block_slice(i), scheme.block_slice(j)].copy()
