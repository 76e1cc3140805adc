"""Monte Carlo harness: averaged spectra, RMSE curves, spectrum correlation.

Trials derive their seeds from the scenario's base seed (XOR with the
trial index, plus a per-SNR-point salt), so runs are reproducible bit
for bit and independent of execution order. All methods see the same
snapshots within a trial, which keeps cross-method comparisons paired.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .array_model import ArrayConfig
from .covariance import sample_covariance
from .estimators import (
    AngularSpectrum,
    estimate_for_method,
    parse_method_id,
    scan_grid,
    spectrum_for_method,
)
from .exceptions import EstimationError, UndefinedCorrelationError
from .synthesis import Scenario, simulate_snapshots

__all__ = [
    "ExperimentPlan",
    "RmseCurve",
    "CorrelationMatrix",
    "derive_trial_seed",
    "rmse",
    "averaged_spectrum",
    "averaged_spectra",
    "rmse_vs_snr",
    "spectrum_correlation",
    "correlate_methods",
]

_SNR_SALT_SHIFT = 32


@dataclass(frozen=True)
class ExperimentPlan:
    """A reproducible experiment: geometry, scenario, methods, trial count."""

    config: ArrayConfig
    scenario: Scenario
    methods: tuple
    trials: int
    snr_grid_db: tuple | None = None
    grid_start: float = -90.0
    grid_stop: float = 90.0
    grid_step: float = 0.1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        object.__setattr__(self, "trials", int(self.trials))
        methods = tuple(str(m) for m in self.methods)
        for m in methods:
            parse_method_id(m)
        object.__setattr__(self, "methods", methods)
        if self.snr_grid_db is not None:
            grid = tuple(float(s) for s in self.snr_grid_db)
            if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("snr_grid_db must be non-empty and strictly increasing")
            object.__setattr__(self, "snr_grid_db", grid)

    def scan_grid(self) -> np.ndarray:
        return scan_grid(self.grid_start, self.grid_stop, self.grid_step)


@dataclass(frozen=True)
class RmseCurve:
    """Per-method RMSE in degrees over an SNR grid."""

    snr_db: tuple
    rmse_deg: dict
    failed_trials: dict = field(default_factory=dict)

    def __post_init__(self):
        for method, values in self.rmse_deg.items():
            if len(values) != len(self.snr_db):
                raise ValueError(f"curve for {method!r} does not match the SNR grid")
            if any(v < 0.0 for v in values):
                raise ValueError("RMSE values must be non-negative")


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson correlations between method spectra."""

    method_ids: tuple
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        m = len(self.method_ids)
        if entries.shape != (m, m):
            raise ValueError("correlation matrix must be square, one row per method")
        if not np.allclose(entries, entries.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(entries), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have a unit diagonal")
        if np.any(entries < -1.0 - 1e-12) or np.any(entries > 1.0 + 1e-12):
            raise ValueError("correlation coefficients must lie in [-1, 1]")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "method_ids", tuple(self.method_ids))


def derive_trial_seed(base_seed: int, trial: int, snr_index: int | None = None) -> int:
    """Per-trial seed: ``base XOR (trial + salt)``, salted per SNR point."""
    salt = 0 if snr_index is None else (snr_index + 1) << _SNR_SALT_SHIFT
    return int(base_seed) ^ (int(trial) + salt)


def rmse(estimates, truth) -> float:
    """Root mean square angular error over trials and sources.

    Both each estimate and the truth are sorted ascending before being
    paired, so the metric is permutation free.
    """
    truth = np.sort(np.asarray(truth, dtype=float))
    if len(estimates) < 1:
        raise ValueError("need at least one estimate")
    total = 0.0
    count = 0
    for est in estimates:
        angles = np.sort(np.asarray(getattr(est, "angles_deg", est), dtype=float))
        if angles.shape != truth.shape:
            raise ValueError(
                f"estimate has {angles.size} angles but the truth has {truth.size}"
            )
        total += float(np.sum((angles - truth) ** 2))
        count += truth.size
    return float(np.sqrt(total / count))


def _trial_covariance(plan: ExperimentPlan, trial: int, snr_index=None, snr_db=None):
    scenario = plan.scenario
    seed = derive_trial_seed(scenario.seed, trial, snr_index)
    if snr_db is None:
        scenario = replace(scenario, seed=seed)
    else:
        scenario = replace(scenario, seed=seed, snr_db=snr_db)
    return sample_covariance(simulate_snapshots(plan.config, scenario))


def averaged_spectra(plan: ExperimentPlan, methods=None, tolerate_failures: bool = False) -> dict:
    """Averaged angular spectrum per method, one simulation pass.

    Each trial's spectrum is normalized to unit peak before averaging so
    that no single near-singular trial dominates the mean; the average is
    rescaled by the mean peak value afterwards, which keeps a single
    trial (L=1) bit-identical to its raw spectrum. Failed trials abort
    with the trial index unless ``tolerate_failures`` is set, in which
    case they are skipped and reported through a warning.
    """
    methods = plan.methods if methods is None else tuple(methods)
    specs = [parse_method_id(m) for m in methods]
    for spec in specs:
        if not spec.spectral:
            raise ValueError(f"method {spec.method_id!r} has no angular spectrum to average")
    grid = plan.scan_grid()
    n_sources = plan.scenario.sources
    shape_sum = {m: np.zeros(grid.size) for m in methods}
    peak_sum = {m: 0.0 for m in methods}
    single = {}
    skipped = {m: 0 for m in methods}
    for trial in range(plan.trials):
        gamma = _trial_covariance(plan, trial)
        for method, spec in zip(methods, specs):
            try:
                spectrum = spectrum_for_method(spec, gamma, n_sources, plan.config, grid)
            except EstimationError as exc:
                if not tolerate_failures:
                    raise EstimationError(
                        f"method {method!r} failed on trial {trial}: {exc}"
                    ) from exc
                skipped[method] += 1
                continue
            peak = spectrum.values.max()
            shape_sum[method] += spectrum.values / peak
            peak_sum[method] += peak
            single[method] = spectrum
    result = {}
    for method in methods:
        used = plan.trials - skipped[method]
        if used < 1:
            raise EstimationError(f"method {method!r} failed on every trial")
        if skipped[method]:
            warnings.warn(
                f"method {method!r}: skipped {skipped[method]} failed trial(s)",
                stacklevel=2,
            )
        if used == 1 and plan.trials == 1:
            result[method] = single[method]
            continue
        values = (shape_sum[method] / used) * (peak_sum[method] / used)
        result[method] = AngularSpectrum(grid_deg=grid, values=values, method_id=method)
    return result


def averaged_spectrum(plan: ExperimentPlan, method: str, tolerate_failures: bool = False) -> AngularSpectrum:
    """Averaged angular spectrum of a single method over ``plan.trials``."""
    return averaged_spectra(plan, (str(method),), tolerate_failures)[str(method)]


def rmse_vs_snr(plan: ExperimentPlan, tolerate_failures: bool = False) -> RmseCurve:
    """RMSE of every plan method at every SNR grid point.

    Spectral methods estimate through the peak search; ESPRIT estimates
    directly. All methods share each trial's snapshots.
    """
    if plan.snr_grid_db is None:
        raise ValueError("plan has no snr_grid_db; rmse_vs_snr needs one")
    if not plan.methods:
        raise ValueError("plan has no methods")
    grid = plan.scan_grid()
    truth = plan.scenario.angles_deg
    n_sources = plan.scenario.sources
    curves = {m: [] for m in plan.methods}
    failures = {m: [] for m in plan.methods}
    for snr_index, snr_db in enumerate(plan.snr_grid_db):
        estimates = {m: [] for m in plan.methods}
        skipped = {m: 0 for m in plan.methods}
        for trial in range(plan.trials):
            gamma = _trial_covariance(plan, trial, snr_index, snr_db)
            for method in plan.methods:
                try:
                    est = estimate_for_method(method, gamma, n_sources, plan.config, grid)
                except EstimationError as exc:
                    if not tolerate_failures:
                        raise EstimationError(
                            f"method {method!r} failed on trial {trial} "
                            f"at SNR {snr_db} dB: {exc}"
                        ) from exc
                    skipped[method] += 1
                    continue
                estimates[method].append(est)
        for method in plan.methods:
            if not estimates[method]:
                raise EstimationError(
                    f"method {method!r} failed on every trial at SNR {snr_db} dB"
                )
            if skipped[method]:
                warnings.warn(
                    f"method {method!r}: skipped {skipped[method]} failed trial(s) "
                    f"at SNR {snr_db} dB",
                    stacklevel=2,
                )
            curves[method].append(rmse(estimates[method], truth))
            failures[method].append(skipped[method])
    return RmseCurve(
        snr_db=tuple(plan.snr_grid_db),
        rmse_deg={m: tuple(v) for m, v in curves.items()},
        failed_trials={m: tuple(v) for m, v in failures.items()},
    )


def spectrum_correlation(spectra) -> CorrelationMatrix:
    """Pearson correlation of spectrum value vectors over a shared grid."""
    spectra = list(spectra)
    if len(spectra) < 1:
        raise ValueError("need at least one spectrum")
    grid = spectra[0].grid_deg
    for s in spectra[1:]:
        if s.grid_deg.shape != grid.shape or not np.allclose(s.grid_deg, grid):
            raise ValueError("all spectra must share one scan grid")
    values = np.vstack([s.values for s in spectra])
    if np.any(np.std(values, axis=1) == 0.0):
        raise UndefinedCorrelationError(
            "at least one spectrum has zero variance; correlation is undefined"
        )
    if len(spectra) == 1:
        entries = np.array([[1.0]])
    else:
        entries = np.corrcoef(values)
        entries = np.clip((entries + entries.T) / 2.0, -1.0, 1.0)
        np.fill_diagonal(entries, 1.0)
    return CorrelationMatrix(
        method_ids=tuple(s.method_id for s in spectra), entries=entries
    )


def correlate_methods(plan: ExperimentPlan, tolerate_failures: bool = False) -> CorrelationMatrix:
    """Correlation matrix of the plan methods' averaged spectra."""
    if not plan.methods:
        raise ValueError("plan has no methods")
    spectra = averaged_spectra(plan, plan.methods, tolerate_failures)
    return spectrum_correlation([spectra[m] for m in plan.methods])
