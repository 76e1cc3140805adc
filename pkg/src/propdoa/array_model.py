"""Uniform linear array geometry: steering vectors and channel matrices.

Angles are degrees at every public boundary; radians appear only inside
phase computations. Sensor ``j`` (0-based) of the steering vector carries
the phase ``exp(-1j * j * mu)`` with ``mu = 2*pi*(d/lambda)*sin(theta)``,
taking the first sensor as the phase reference. This sign convention is
used consistently everywhere, including the ESPRIT angle inversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArrayConfig",
    "SteeringMatrix",
    "steering_vector",
    "array_manifold",
    "channel_matrix",
    "exchange_matrix",
]


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of a uniform linear array.

    Parameters
    ----------
    sensors : int
        Number of array elements, at least 2.
    spacing_ratio : float, optional
        Inter-element distance in wavelengths (d/lambda). Must lie in
        (0, 0.5]; spacings above half a wavelength alias the phase and
        break the unambiguous angle inversion.
    """

    sensors: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if int(self.sensors) != self.sensors or self.sensors < 2:
            raise ValueError(f"sensors must be an integer >= 2, got {self.sensors!r}")
        object.__setattr__(self, "sensors", int(self.sensors))
        if not 0.0 < self.spacing_ratio <= 0.5:
            raise ValueError(
                f"spacing_ratio must lie in (0, 0.5], got {self.spacing_ratio!r}"
            )


@dataclass(frozen=True)
class SteeringMatrix:
    """Channel matrix of P plane waves: columns are steering vectors.

    The matrix has Vandermonde structure, every entry has unit modulus and
    the first row is all ones. Rank equals the number of sources whenever
    the angles are distinct.
    """

    entries: np.ndarray
    angles_deg: tuple = field(default=())

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2:
            raise ValueError("steering matrix must be 2-D")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "angles_deg", tuple(float(a) for a in self.angles_deg))
        if entries.shape[1] != len(self.angles_deg):
            raise ValueError("one angle per column is required")

    @property
    def sensors(self) -> int:
        return self.entries.shape[0]

    @property
    def sources(self) -> int:
        return self.entries.shape[1]

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _check_angle_deg(angle_deg: float) -> float:
    angle = float(angle_deg)
    if not -90.0 < angle < 90.0:
        raise ValueError(f"angle must lie strictly inside (-90, 90) degrees, got {angle!r}")
    return angle


def steering_vector(config: ArrayConfig, angle_deg: float) -> np.ndarray:
    """Steering vector of a single plane wave.

    Parameters
    ----------
    config : ArrayConfig
        Array geometry.
    angle_deg : float
        Direction of arrival in degrees, measured from broadside,
        strictly inside (-90, 90).

    Returns
    -------
    ndarray
        Complex vector of length ``config.sensors``; element ``j`` equals
        ``exp(-1j * j * mu)`` with ``mu = 2*pi*spacing_ratio*sin(angle)``.
    """
    angle = _check_angle_deg(angle_deg)
    mu = 2.0 * np.pi * config.spacing_ratio * np.sin(np.deg2rad(angle))
    return np.exp(-1j * mu * np.arange(config.sensors))


def array_manifold(config: ArrayConfig, angles_deg) -> np.ndarray:
    """Steering vectors for a batch of angles, stacked as columns.

    Unlike :func:`channel_matrix` this performs no distinctness check, so
    it is suitable for dense scan grids.
    """
    angles = np.asarray(angles_deg, dtype=float).ravel()
    if angles.size and not (np.all(angles > -90.0) and np.all(angles < 90.0)):
        raise ValueError("all angles must lie strictly inside (-90, 90) degrees")
    mu = 2.0 * np.pi * config.spacing_ratio * np.sin(np.deg2rad(angles))
    return np.exp(-1j * np.outer(np.arange(config.sensors), mu))


def channel_matrix(config: ArrayConfig, angles_deg) -> SteeringMatrix:
    """Channel matrix for P sources at distinct angles.

    Parameters
    ----------
    config : ArrayConfig
        Array geometry.
    angles_deg : sequence of float
        Source directions in degrees, pairwise distinct, each strictly
        inside (-90, 90).

    Returns
    -------
    SteeringMatrix
        N x P matrix whose column ``i`` is ``steering_vector(config,
        angles_deg[i])``.

    Raises
    ------
    ValueError
        If any angle repeats (degenerate scenario) or falls outside the
        open interval.
    """
    angles = [_check_angle_deg(a) for a in angles_deg]
    if len(set(angles)) != len(angles):
        raise ValueError(f"source angles must be pairwise distinct, got {angles}")
    entries = array_manifold(config, angles)
    return SteeringMatrix(entries=entries, angles_deg=tuple(angles))


def exchange_matrix(n: int) -> np.ndarray:
    """Exchange (anti-identity) matrix: ones on the anti-diagonal.

    Satisfies ``J @ J == I``. Applied to the conjugate of a channel
    matrix it mirrors the sensor order: ``J @ conj(A) == A @ L`` with
    ``L = diag(exp(+1j*(N-1)*mu_i))`` under this module's phase
    convention.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return np.eye(int(n))[::-1].copy()
