"""Synthetic narrowband snapshots: sources, noise, and received data.

Waveforms and noise are circular complex Gaussian processes drawn from a
seeded PCG64 generator, so a scenario is reproducible bit for bit from
its seed. Sources are mutually independent (diagonal waveform
covariance); coherent sources are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayConfig, channel_matrix
from .exceptions import ScenarioError

__all__ = [
    "Scenario",
    "SnapshotBlock",
    "noise_variance_from_snr",
    "generate_sources",
    "simulate_snapshots",
]


@dataclass(frozen=True)
class Scenario:
    """One synthetic acquisition: sources, SNR, snapshot count, seed.

    Angles are sorted ascending at construction and must be pairwise
    distinct. ``source_powers`` defaults to 1 watt per source. The SNR is
    defined as per-source power over per-sensor noise variance, with the
    noise variance derived from the 1-watt reference.
    """

    angles_deg: tuple
    snr_db: float
    snapshots: int
    seed: int
    source_powers: tuple = field(default=())

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles_deg)
        if len(angles) < 1:
            raise ValueError("at least one source angle is required")
        if len(set(angles)) != len(angles):
            raise ValueError(f"source angles must be pairwise distinct, got {list(angles)}")
        object.__setattr__(self, "angles_deg", tuple(sorted(angles)))
        powers = tuple(float(p) for p in self.source_powers) or (1.0,) * len(angles)
        if len(powers) != len(angles):
            raise ValueError("source_powers must have one entry per source")
        if any(p <= 0.0 for p in powers):
            raise ValueError("source powers must be positive")
        object.__setattr__(self, "source_powers", powers)
        if int(self.snapshots) != self.snapshots or self.snapshots < 1:
            raise ValueError(f"snapshots must be a positive integer, got {self.snapshots!r}")
        object.__setattr__(self, "snapshots", int(self.snapshots))
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "snr_db", float(self.snr_db))

    @property
    def sources(self) -> int:
        return len(self.angles_deg)


@dataclass(frozen=True)
class SnapshotBlock:
    """Received data matrix, sensors x snapshots."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 2:
            raise ValueError("snapshot block must be a 2-D matrix")
        if not np.all(np.isfinite(samples)):
            raise ValueError("snapshot block contains non-finite entries")
        object.__setattr__(self, "samples", samples)

    @property
    def sensors(self) -> int:
        return self.samples.shape[0]

    @property
    def snapshots(self) -> int:
        return self.samples.shape[1]

    def __array__(self, dtype=None):
        return self.samples if dtype is None else self.samples.astype(dtype)


def noise_variance_from_snr(snr_db: float, reference_power: float) -> float:
    """Noise variance for a given SNR in dB against a reference power.

    Returns ``reference_power * 10**(-snr_db / 10)``. An infinite SNR
    yields exactly zero variance (noiseless limit).
    """
    if reference_power <= 0.0:
        raise ValueError(f"reference_power must be positive, got {reference_power!r}")
    return float(reference_power) * 10.0 ** (-float(snr_db) / 10.0)


def generate_sources(n_sources: int, n_snapshots: int, powers, rng: np.random.Generator) -> np.ndarray:
    """Independent circular complex Gaussian waveforms, one row per source.

    Row ``i`` has variance ``powers[i]``; real and imaginary parts each
    carry half of it.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (n_sources,):
        raise ValueError("powers must have one entry per source")
    if np.any(powers <= 0.0):
        raise ValueError("source powers must be positive")
    shape = (n_sources, n_snapshots)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.sqrt(powers / 2.0)[:, None] * raw


def simulate_snapshots(config: ArrayConfig, scenario: Scenario) -> SnapshotBlock:
    """Simulate received snapshots ``X = A @ S + W`` for a scenario.

    Source waveforms are drawn first, then sensor noise, from a single
    generator seeded with ``scenario.seed``; the result is deterministic
    given (config, scenario). Per-sensor noise variance comes from
    :func:`noise_variance_from_snr` against the 1-watt reference.

    Raises
    ------
    ScenarioError
        If the scenario has as many or more sources than sensors.
    """
    if scenario.sources >= config.sensors:
        raise ScenarioError(
            f"need fewer sources than sensors, got P={scenario.sources} for N={config.sensors}"
        )
    rng = np.random.default_rng(scenario.seed)
    steering = channel_matrix(config, scenario.angles_deg)
    waveforms = generate_sources(
        scenario.sources, scenario.snapshots, scenario.source_powers, rng
    )
    sigma2 = noise_variance_from_snr(scenario.snr_db, 1.0)
    shape = (config.sensors, scenario.snapshots)
    noise = np.sqrt(sigma2 / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return SnapshotBlock(samples=steering.entries @ waveforms + noise)
