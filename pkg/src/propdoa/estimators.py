"""Angular spectra and point estimates of directions of arrival.

Spectral methods evaluate the reciprocal of the quadratic form
``a(theta)^H M^H M a(theta)`` over a scan grid, where ``M`` is either a
propagator operator or the conjugate-transposed noise eigenbasis
(MUSIC); directions of arrival then appear as spectrum peaks. ESPRIT
skips the grid and inverts the rotation between two shifted subarrays.

Method identifiers extend the propagator grammar with ``music`` and
``esprit[:m]``; see :func:`parse_method_id`.

scikit-learn style estimator classes wrap the same machinery behind a
``fit`` API. They accept a plain snapshots x sensors matrix (rows are
samples, sklearn orientation) or a :class:`~propdoa.synthesis.SnapshotBlock`
in its native sensors x snapshots layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .array_model import ArrayConfig, array_manifold
from .covariance import (
    CovarianceEstimate,
    make_partition,
    sample_covariance,
)
from .exceptions import IllConditionedError
from .propagators import (
    DEFAULT_PINV_RTOL_PER_DIM,
    extended_propagator,
    propagator_q1,
    propagator_q2,
    pseudo_inverse,
    standard_propagator,
)
from .synthesis import SnapshotBlock
from .validation import check_snapshots

__all__ = [
    "QUADRATIC_FORM_FLOOR",
    "SPECTRUM_CEILING",
    "AngularSpectrum",
    "DoaEstimate",
    "EigenSubspaces",
    "scan_grid",
    "eigen_subspaces",
    "spectrum_from_operator",
    "music_spectrum",
    "esprit",
    "find_peaks",
    "MethodSpec",
    "parse_method_id",
    "spectrum_for_method",
    "estimate_for_method",
    "MusicDoA",
    "EspritDoA",
    "PropagatorDoA",
    "ExtendedPropagatorDoA",
    "estimator_from_method_id",
]

#: Quadratic forms below this floor are clamped before inversion, so the
#: spectrum never exceeds ``SPECTRUM_CEILING`` and never reaches infinity.
QUADRATIC_FORM_FLOOR = 1e-30
SPECTRUM_CEILING = 1.0 / QUADRATIC_FORM_FLOOR


@dataclass(frozen=True)
class AngularSpectrum:
    """Pseudo-spectrum samples over a uniform angular scan grid."""

    grid_deg: np.ndarray
    values: np.ndarray
    method_id: str

    def __post_init__(self):
        grid = np.asarray(self.grid_deg, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 1:
            raise ValueError("grid and values must be 1-D arrays of equal, positive length")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValueError("spectrum values must be finite and non-negative")
        steps = np.diff(grid)
        if grid.size > 1:
            if np.any(steps <= 0.0):
                raise ValueError("scan grid must be strictly increasing")
            if not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-9):
                raise ValueError("scan grid must have a uniform step")
        object.__setattr__(self, "grid_deg", grid)
        object.__setattr__(self, "values", values)

    @property
    def step_deg(self) -> float:
        return float(self.grid_deg[1] - self.grid_deg[0]) if self.grid_deg.size > 1 else 0.0


@dataclass(frozen=True)
class DoaEstimate:
    """Sorted point estimates of the source directions, in degrees."""

    angles_deg: tuple
    method_id: str

    def __post_init__(self):
        object.__setattr__(
            self, "angles_deg", tuple(sorted(float(a) for a in self.angles_deg))
        )


@dataclass(frozen=True)
class EigenSubspaces:
    """Signal/noise eigenbases of a covariance matrix.

    ``eigenvalues`` are sorted descending; the first P eigenvectors span
    the signal subspace and the remaining N-P the noise subspace, with
    ``U_s U_s^H + U_n U_n^H = I``.
    """

    signal_basis: np.ndarray
    noise_basis: np.ndarray
    eigenvalues: np.ndarray


def scan_grid(start: float = -90.0, stop: float = 90.0, step: float = 0.1) -> np.ndarray:
    """Uniform angular grid, clipped to the open interval (-90, 90).

    The default covers the full view with a 0.1 degree step, giving 1799
    points; the +/-90 endpoints are always excluded because broadside
    angles there are not identifiable.
    """
    start, stop, step = float(start), float(stop), float(step)
    if step <= 0.0:
        raise ValueError(f"grid step must be positive, got {step!r}")
    if stop <= start:
        raise ValueError(f"grid needs start < stop, got [{start}, {stop}]")
    count = int(np.floor((stop - start) / step + 1e-9))
    points = start + step * np.arange(count + 1)
    points = points[(points > -90.0 + 1e-9) & (points < 90.0 - 1e-9)]
    if points.size < 1:
        raise ValueError("scan grid is empty after clipping to (-90, 90)")
    return points


def eigen_subspaces(gamma: CovarianceEstimate, n_sources: int) -> EigenSubspaces:
    """Split a Hermitian covariance into signal and noise eigenbases."""
    entries = np.asarray(getattr(gamma, "entries", gamma), dtype=complex)
    n = entries.shape[0]
    if not 1 <= n_sources < n:
        raise ValueError(f"need 1 <= P < N, got P={n_sources} for N={n}")
    eigenvalues, vectors = np.linalg.eigh(entries)
    eigenvalues = eigenvalues[::-1]
    vectors = vectors[:, ::-1]
    return EigenSubspaces(
        signal_basis=vectors[:, :n_sources],
        noise_basis=vectors[:, n_sources:],
        eigenvalues=eigenvalues,
    )


def spectrum_from_operator(op, config: ArrayConfig, grid, method_id: str | None = None) -> AngularSpectrum:
    """Reciprocal quadratic-form spectrum of a noise-subspace operator.

    For each grid angle the value is ``1 / (a^H M^H M a)`` with ``M`` the
    operator matrix; quadratic forms below ``QUADRATIC_FORM_FLOOR`` are
    clamped so the output stays finite (at most ``SPECTRUM_CEILING``).

    ``op`` may be a :class:`~propdoa.propagators.PropagatorOperator` or
    any rows x N matrix (e.g. a conjugate-transposed noise eigenbasis).
    """
    entries = np.asarray(op, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] < 1:
        raise ValueError("operator must be a non-empty 2-D matrix")
    if entries.shape[1] != config.sensors:
        raise ValueError(
            f"operator has {entries.shape[1]} columns but the array has {config.sensors} sensors"
        )
    grid = np.asarray(grid, dtype=float)
    manifold = array_manifold(config, grid)
    gram = entries.conj().T @ entries
    quad = np.sum(manifold.conj() * (gram @ manifold), axis=0).real
    values = 1.0 / np.maximum(quad, QUADRATIC_FORM_FLOOR)
    if method_id is None:
        method_id = getattr(op, "method_id", "operator")
    return AngularSpectrum(grid_deg=grid, values=values, method_id=method_id)


def music_spectrum(gamma: CovarianceEstimate, n_sources: int, config: ArrayConfig, grid) -> AngularSpectrum:
    """Classical MUSIC pseudo-spectrum from the noise eigenbasis."""
    subspaces = eigen_subspaces(gamma, n_sources)
    return spectrum_from_operator(
        subspaces.noise_basis.conj().T, config, grid, method_id="music"
    )


def _signal_basis_from(data, n_sources: int) -> np.ndarray:
    if isinstance(data, CovarianceEstimate):
        return eigen_subspaces(data, n_sources).signal_basis
    if isinstance(data, SnapshotBlock):
        if data.snapshots < n_sources:
            raise ValueError(
                f"need at least P={n_sources} snapshots to span the signal subspace, "
                f"got {data.snapshots}"
            )
        u, _, _ = np.linalg.svd(data.samples, full_matrices=False)
        return u[:, :n_sources]
    entries = np.asarray(data, dtype=complex)
    if entries.ndim == 2 and entries.shape[0] == entries.shape[1]:
        scale = np.linalg.norm(entries)
        if scale == 0.0 or np.linalg.norm(entries - entries.conj().T) <= 1e-8 * scale:
            return eigen_subspaces(CovarianceEstimate(entries), n_sources).signal_basis
    raise ValueError(
        "esprit expects a CovarianceEstimate, a SnapshotBlock, or a square Hermitian matrix"
    )


def esprit(data, n_sources: int, config: ArrayConfig, subarray_size: int | None = None) -> DoaEstimate:
    """ESPRIT estimate from the rotation between two shifted subarrays.

    The two subarrays are the first ``m`` and the last ``m`` sensors
    (``P <= m <= N-1``, default ``m = N-1``), displaced by ``N - m``
    elements. The rotation operator is solved in the least-squares sense
    from the signal eigenbasis and its eigenvalue phases are inverted to
    angles. For ``m < N-1`` the displacement exceeds one element, so the
    inversion is unambiguous only while ``(N-m) * spacing_ratio *
    |sin(theta)| < 1/2``; the default maximum-overlap choice is
    unambiguous over the whole view.

    Parameters
    ----------
    data : CovarianceEstimate, SnapshotBlock or square Hermitian ndarray
        The signal eigenbasis is taken from the covariance eigenvectors,
        or from the left singular vectors of a raw snapshot block.
    n_sources : int
        Number of sources P; determines the subspace dimension.
    config : ArrayConfig
        Array geometry (sensor count must match the data).
    subarray_size : int, optional
        Subarray length m. Defaults to N-1.
    """
    n = config.sensors
    if not 1 <= n_sources < n:
        raise ValueError(f"need 1 <= P < N, got P={n_sources} for N={n}")
    m = n - 1 if subarray_size is None else int(subarray_size)
    if not n_sources <= m <= n - 1:
        raise ValueError(
            f"subarray size m={m} must satisfy P <= m <= N-1 with P={n_sources}, N={n}"
        )
    basis = _signal_basis_from(data, n_sources)
    if basis.shape[0] != n:
        raise ValueError(
            f"data has {basis.shape[0]} sensors but the config declares {n}"
        )
    upper = basis[:m]
    sv = np.linalg.svd(upper, compute_uv=False)
    if sv[-1] <= DEFAULT_PINV_RTOL_PER_DIM * max(upper.shape) * sv[0]:
        raise IllConditionedError("subarray signal basis is rank deficient")
    rotation = pseudo_inverse(upper) @ basis[n - m:]
    phases = np.angle(np.linalg.eigvals(rotation))
    # Rotation eigenvalues carry exp(-1j * (N-m) * mu); invert to angles.
    sines = -phases / ((n - m) * 2.0 * np.pi * config.spacing_ratio)
    angles = np.degrees(np.arcsin(np.clip(sines, -1.0, 1.0)))
    method_id = "esprit" if subarray_size is None else f"esprit:{m}"
    return DoaEstimate(angles_deg=tuple(angles), method_id=method_id)


def find_peaks(spectrum: AngularSpectrum, n_peaks: int) -> DoaEstimate:
    """Select the ``n_peaks`` dominant peaks of a spectrum.

    Strict local maxima (greater than both neighbours) are ranked by
    value; if fewer than ``n_peaks`` exist, the highest remaining grid
    values fill the gap. Ties break toward the smaller angle. The result
    is sorted ascending.
    """
    values = spectrum.values
    grid = spectrum.grid_deg
    if grid.size < 3:
        raise ValueError("peak finding needs a grid of at least 3 points")
    if not 1 <= n_peaks <= grid.size:
        raise ValueError(f"cannot select {n_peaks} peaks from {grid.size} grid points")
    interior = np.where((values[1:-1] > values[:-2]) & (values[1:-1] > values[2:]))[0] + 1
    # lexsort: last key is primary, so order by value desc, then angle asc.
    ranked = interior[np.lexsort((grid[interior], -values[interior]))]
    selected = list(ranked[:n_peaks])
    if len(selected) < n_peaks:
        rest = np.setdiff1d(np.arange(grid.size), selected)
        rest = rest[np.lexsort((grid[rest], -values[rest]))]
        selected.extend(rest[: n_peaks - len(selected)])
    return DoaEstimate(
        angles_deg=tuple(grid[selected]), method_id=spectrum.method_id
    )


# ---------------------------------------------------------------------------
# Method identifier grammar
# ---------------------------------------------------------------------------

_FIXED_METHODS = {"prop", "prop-q1", "prop-q2", "music", "esprit"}


@dataclass(frozen=True)
class MethodSpec:
    """Parsed method identifier."""

    kind: str
    order: int | None = None
    block: int | None = None
    subarray: int | None = None

    @property
    def spectral(self) -> bool:
        return self.kind != "esprit"

    @property
    def method_id(self) -> str:
        if self.kind == "psi":
            return f"psi:{self.order}:{self.block}"
        if self.kind == "esprit" and self.subarray is not None:
            return f"esprit:{self.subarray}"
        return self.kind


def parse_method_id(method_id: str) -> MethodSpec:
    """Parse a method identifier.

    The grammar is ``prop``, ``prop-q1``, ``prop-q2``, ``psi:<n>:<i>``,
    ``music``, and ``esprit[:m]``.
    """
    if isinstance(method_id, MethodSpec):
        return method_id
    token = str(method_id).strip()
    if token in _FIXED_METHODS:
        return MethodSpec(kind=token)
    parts = token.split(":")
    if parts[0] == "psi" and len(parts) == 3:
        try:
            order, block = int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"malformed extended-propagator id {token!r}") from None
        if order < 2:
            raise ValueError(f"extended propagator order must be >= 2, got {token!r}")
        if not 1 <= block <= order:
            raise ValueError(f"block index must lie in 1..{order}, got {token!r}")
        return MethodSpec(kind="psi", order=order, block=block)
    if parts[0] == "esprit" and len(parts) == 2:
        try:
            m = int(parts[1])
        except ValueError:
            raise ValueError(f"malformed esprit id {token!r}") from None
        if m < 1:
            raise ValueError(f"esprit subarray size must be positive, got {token!r}")
        return MethodSpec(kind="esprit", subarray=m)
    raise ValueError(
        f"unknown method id {token!r}; expected prop, prop-q1, prop-q2, "
        "psi:<n>:<i>, music, or esprit[:m]"
    )


def _operator_for_method(spec: MethodSpec, gamma: CovarianceEstimate, n_sources: int):
    if spec.kind == "prop":
        return standard_propagator(gamma, n_sources)
    if spec.kind == "prop-q1":
        return propagator_q1(gamma, n_sources)
    if spec.kind == "prop-q2":
        return propagator_q2(gamma, n_sources)
    scheme = make_partition(gamma.sensors, n_sources, spec.order)
    return extended_propagator(gamma, scheme, spec.block)


def spectrum_for_method(method, gamma: CovarianceEstimate, n_sources: int,
                        config: ArrayConfig, grid) -> AngularSpectrum:
    """Angular spectrum of any spectral method identifier."""
    spec = parse_method_id(method)
    if not spec.spectral:
        raise ValueError(f"method {spec.method_id!r} has no angular spectrum")
    if spec.kind == "music":
        return music_spectrum(gamma, n_sources, config, grid)
    op = _operator_for_method(spec, gamma, n_sources)
    return spectrum_from_operator(op, config, grid, method_id=spec.method_id)


def estimate_for_method(method, gamma: CovarianceEstimate, n_sources: int,
                        config: ArrayConfig, grid) -> DoaEstimate:
    """Point estimate of any method identifier (peak search or ESPRIT)."""
    spec = parse_method_id(method)
    if spec.kind == "esprit":
        return esprit(gamma, n_sources, config, spec.subarray)
    return find_peaks(spectrum_for_method(spec, gamma, n_sources, config, grid), n_sources)


# ---------------------------------------------------------------------------
# scikit-learn style estimators
# ---------------------------------------------------------------------------


class _DoAEstimatorBase(BaseEstimator):
    """Shared fit flow: snapshots -> covariance -> angles_.

    Fitted attributes
    -----------------
    n_sensors_ : int
        Sensor count inferred from the data.
    covariance_ : CovarianceEstimate
        Sample covariance of the training snapshots.
    angles_ : ndarray of shape (n_sources,)
        Estimated directions of arrival, degrees, sorted ascending.
    spectrum_ : AngularSpectrum
        Scan-grid spectrum (spectral methods only).
    """

    def _array_config(self, n_sensors: int) -> ArrayConfig:
        return ArrayConfig(sensors=n_sensors, spacing_ratio=self.spacing_ratio)

    def fit(self, X, y=None):
        samples = check_snapshots(X)
        config = self._array_config(samples.shape[0])
        gamma = sample_covariance(samples)
        self.n_sensors_ = config.sensors
        self.covariance_ = gamma
        estimate = self._estimate(gamma, config)
        self.angles_ = np.asarray(estimate.angles_deg)
        self.method_id_ = estimate.method_id
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        """Fit and return the estimated angles in degrees."""
        return self.fit(X).angles_


class _SpectralDoABase(_DoAEstimatorBase):
    def _grid(self) -> np.ndarray:
        return scan_grid(self.grid_start, self.grid_stop, self.grid_step)

    def _estimate(self, gamma, config):
        self.spectrum_ = self._spectrum(gamma, config, self._grid())
        return find_peaks(self.spectrum_, self.n_sources)


class MusicDoA(_SpectralDoABase):
    """MUSIC direction-of-arrival estimator for uniform linear arrays.

    Parameters
    ----------
    n_sources : int, default=1
        Number of sources P (assumed known).
    spacing_ratio : float, default=0.5
        Element spacing in wavelengths.
    grid_start, grid_stop, grid_step : float
        Scan grid specification; the grid always stays inside (-90, 90).

    Examples
    --------
    >>> est = MusicDoA(n_sources=2).fit(X)   # X: snapshots x sensors
    >>> est.angles_
    array([-10. ,  23.4])
    """

    def __init__(self, n_sources=1, *, spacing_ratio=0.5,
                 grid_start=-90.0, grid_stop=90.0, grid_step=0.1):
        self.n_sources = n_sources
        self.spacing_ratio = spacing_ratio
        self.grid_start = grid_start
        self.grid_stop = grid_stop
        self.grid_step = grid_step

    def _spectrum(self, gamma, config, grid):
        return music_spectrum(gamma, self.n_sources, config, grid)


class PropagatorDoA(_SpectralDoABase):
    """Classical propagator estimator (no eigendecomposition).

    Parameters
    ----------
    n_sources : int, default=1
        Number of sources P.
    variant : {'q', 'q1', 'q2'}, default='q'
        Which classical propagator form to build.
    spacing_ratio, grid_start, grid_stop, grid_step
        As in :class:`MusicDoA`.
    """

    _VARIANTS = {"q": "prop", "q1": "prop-q1", "q2": "prop-q2"}

    def __init__(self, n_sources=1, *, variant="q", spacing_ratio=0.5,
                 grid_start=-90.0, grid_stop=90.0, grid_step=0.1):
        self.n_sources = n_sources
        self.variant = variant
        self.spacing_ratio = spacing_ratio
        self.grid_start = grid_start
        self.grid_stop = grid_stop
        self.grid_step = grid_step

    def _spectrum(self, gamma, config, grid):
        if self.variant not in self._VARIANTS:
            raise ValueError(f"variant must be one of {sorted(self._VARIANTS)}, got {self.variant!r}")
        return spectrum_for_method(
            self._VARIANTS[self.variant], gamma, self.n_sources, config, grid
        )


class ExtendedPropagatorDoA(_SpectralDoABase):
    """Extended propagator estimator over the n-fold partition.

    Parameters
    ----------
    n_sources : int, default=1
        Number of sources P.
    order : int, default=2
        Partition order n, valid while ``2 <= n <= floor(N/P)``.
    block : int, default=1
        Base block index i in 1..n.
    k_strategy : 'cyclic' or dict, default='cyclic'
        Third-index selection rule, forwarded to the operator builder.
    spacing_ratio, grid_start, grid_stop, grid_step
        As in :class:`MusicDoA`.
    """

    def __init__(self, n_sources=1, *, order=2, block=1, k_strategy="cyclic",
                 spacing_ratio=0.5, grid_start=-90.0, grid_stop=90.0, grid_step=0.1):
        self.n_sources = n_sources
        self.order = order
        self.block = block
        self.k_strategy = k_strategy
        self.spacing_ratio = spacing_ratio
        self.grid_start = grid_start
        self.grid_stop = grid_stop
        self.grid_step = grid_step

    def _spectrum(self, gamma, config, grid):
        scheme = make_partition(config.sensors, self.n_sources, self.order)
        op = extended_propagator(gamma, scheme, self.block, self.k_strategy)
        return spectrum_from_operator(op, config, grid)


class EspritDoA(_DoAEstimatorBase):
    """ESPRIT direction-of-arrival estimator.

    Parameters
    ----------
    n_sources : int, default=1
        Number of sources P.
    subarray_size : int or None, default=None
        Subarray length m with ``P <= m <= N-1``; None means N-1.
    spacing_ratio : float, default=0.5
        Element spacing in wavelengths.
    """

    def __init__(self, n_sources=1, *, subarray_size=None, spacing_ratio=0.5):
        self.n_sources = n_sources
        self.subarray_size = subarray_size
        self.spacing_ratio = spacing_ratio

    def _estimate(self, gamma, config):
        return esprit(gamma, self.n_sources, config, self.subarray_size)


def estimator_from_method_id(method, n_sources: int, *, spacing_ratio=0.5,
                             grid_start=-90.0, grid_stop=90.0, grid_step=0.1):
    """Instantiate the matching scikit-learn style estimator for an id."""
    spec = parse_method_id(method)
    grid_kwargs = dict(
        spacing_ratio=spacing_ratio,
        grid_start=grid_start,
        grid_stop=grid_stop,
        grid_step=grid_step,
    )
    if spec.kind == "music":
        return MusicDoA(n_sources, **grid_kwargs)
    if spec.kind == "esprit":
        return EspritDoA(n_sources, subarray_size=spec.subarray, spacing_ratio=spacing_ratio)
    if spec.kind == "psi":
        return ExtendedPropagatorDoA(n_sources, order=spec.order, block=spec.block, **grid_kwargs)
    variant = {"prop": "q", "prop-q1": "q1", "prop-q2": "q2"}[spec.kind]
    return PropagatorDoA(n_sources, variant=variant, **grid_kwargs)
