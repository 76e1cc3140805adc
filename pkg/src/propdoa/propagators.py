"""Propagator operators: classical variants and the extended family.

A propagator is a matrix whose rows are orthogonal to the channel matrix
in the noiseless limit, obtained from covariance blocks without any
eigendecomposition. Three classical forms work on the 2-block split:

* ``Q  = [(Gs^+ Gn)^H | -I]``  from the columnwise split ``[Gs | Gn]``,
* ``Q1 = [G21 G11^-1  | -I]``  from the 2x2 block split,
* ``Q2 = [-I | G12 G22^+]``    (requires ``N >= 2P``).

The extended family generalizes this to an n-fold partition: block ``i``
of the channel matrix is reachable from block ``j`` through the transfer
operator ``G_ik G_jk^+`` for any third index ``k``, and summing those
transfers against the selection matrices yields one operator per block,

    Psi_ni = sum_{j != i} G_ik(j) G_jk(j)^+ e_j^T - (n-1) e_i^T,

with all n row blocks stackable into a single N x N operator of trace
``-(n-1) N``. For ``n = 2`` no third index exists and the construction
falls back to ``k(j) = j``, which reproduces Q2 (i=1) and Q1 (i=2)
exactly.

Operator identifiers follow the grammar ``psi:<n>:<i>`` for extended
operators and ``prop``, ``prop-q1``, ``prop-q2`` for the classical ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceEstimate, PartitionScheme, covariance_block
from .exceptions import ApplicabilityError, IllConditionedError

__all__ = [
    "PropagatorOperator",
    "OperatorCatalog",
    "pseudo_inverse",
    "standard_propagator",
    "propagator_q1",
    "propagator_q2",
    "transfer_operator",
    "extended_propagator",
    "assembled_psi",
    "enumerate_operators",
]

#: Relative singular-value cutoff used when no explicit tolerance is given:
#: values below ``DEFAULT_PINV_RTOL_PER_DIM * max(shape) * sigma_max`` are
#: treated as zero.
DEFAULT_PINV_RTOL_PER_DIM = 1e-10

_KINDS = ("standard-Q", "Q1", "Q2", "extended")


@dataclass(frozen=True)
class PropagatorOperator:
    """A rows x N operator orthogonal to the channel matrix at high SNR.

    ``kind`` is one of ``standard-Q``, ``Q1``, ``Q2`` or ``extended``;
    extended operators also record the partition order ``order_n``, the
    base block ``block_i`` (None for the assembled N x N form) and the
    third-index choices ``k_choices`` used per summand, ordered by
    ascending j.
    """

    entries: np.ndarray
    kind: str
    order_n: int | None = None
    block_i: int | None = None
    k_choices: tuple | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] < 1:
            raise ValueError("operator entries must form a non-empty 2-D matrix")
        object.__setattr__(self, "entries", entries)

    @property
    def sensors(self) -> int:
        return self.entries.shape[1]

    @property
    def method_id(self) -> str:
        if self.kind == "standard-Q":
            return "prop"
        if self.kind == "Q1":
            return "prop-q1"
        if self.kind == "Q2":
            return "prop-q2"
        if self.block_i is None:
            return f"psi:{self.order_n}"
        return f"psi:{self.order_n}:{self.block_i}"

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class OperatorCatalog:
    """All valid extended-propagator indices (n, i) for a geometry.

    When ``floor(N/P) < 2`` the catalog is empty and ``reason`` explains
    which alternative applies.
    """

    sensors: int
    sources: int
    entries: tuple
    reason: str | None = None

    @property
    def cardinality(self) -> int:
        return len(self.entries)

    def method_ids(self) -> list:
        return [f"psi:{n}:{i}" for (n, i) in self.entries]


def pseudo_inverse(matrix, rel_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff.

    Singular values below ``rel_tol * sigma_max`` are treated as zero;
    the default cutoff is ``DEFAULT_PINV_RTOL_PER_DIM * max(shape)``. A
    zero matrix maps to a zero matrix.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2:
        raise ValueError("pseudo_inverse expects a 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    if rel_tol is None:
        rel_tol = DEFAULT_PINV_RTOL_PER_DIM * max(m.shape)
    return np.linalg.pinv(m, rcond=rel_tol)


def _as_square_covariance(gamma) -> np.ndarray:
    entries = np.asarray(getattr(gamma, "entries", gamma), dtype=complex)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError("covariance must be a square matrix")
    return entries


def _check_source_count(n_sensors: int, n_sources: int):
    if not 1 <= n_sources < n_sensors:
        raise ValueError(
            f"need 1 <= P < N, got P={n_sources} for N={n_sensors}"
        )


def standard_propagator(gamma: CovarianceEstimate, n_sources: int) -> PropagatorOperator:
    """Classical propagator from the columnwise covariance split.

    Splits the covariance into its first P columns and the remaining
    N-P columns, extracts the linear operator mapping the former onto
    the latter, and returns ``Q = [(Gs^+ Gn)^H | -I_{N-P}]``.

    Raises
    ------
    IllConditionedError
        If the first P columns are rank deficient beyond the pinv cutoff.
    """
    g = _as_square_covariance(gamma)
    n = g.shape[0]
    _check_source_count(n, n_sources)
    g_left = g[:, :n_sources]
    sv = np.linalg.svd(g_left, compute_uv=False)
    if sv[-1] <= DEFAULT_PINV_RTOL_PER_DIM * max(g_left.shape) * sv[0]:
        raise IllConditionedError(
            "first P covariance columns are rank deficient; cannot extract propagator"
        )
    pi_h = pseudo_inverse(g_left) @ g[:, n_sources:]
    entries = np.hstack([pi_h.conj().T, -np.eye(n - n_sources)])
    return PropagatorOperator(entries=entries, kind="standard-Q")


def propagator_q1(gamma: CovarianceEstimate, n_sources: int) -> PropagatorOperator:
    """Propagator from the 2x2 block split: ``[G21 G11^-1 | -I]``.

    The top-left P x P block must be invertible; it carries the noise
    power on its diagonal, which biases the operator at finite SNR.
    """
    g = _as_square_covariance(gamma)
    n = g.shape[0]
    _check_source_count(n, n_sources)
    g11 = g[:n_sources, :n_sources]
    sv = np.linalg.svd(g11, compute_uv=False)
    if sv[-1] <= DEFAULT_PINV_RTOL_PER_DIM * n_sources * sv[0]:
        raise IllConditionedError("top-left covariance block is singular within tolerance")
    coeff = np.linalg.solve(g11.T, g[n_sources:, :n_sources].T).T
    entries = np.hstack([coeff, -np.eye(n - n_sources)])
    return PropagatorOperator(entries=entries, kind="Q1")


def propagator_q2(gamma: CovarianceEstimate, n_sources: int) -> PropagatorOperator:
    """P-row propagator ``[-I_P | G12 G22^+]``; needs ``N >= 2P``."""
    g = _as_square_covariance(gamma)
    n = g.shape[0]
    _check_source_count(n, n_sources)
    if n < 2 * n_sources:
        raise ApplicabilityError(
            f"Q2 needs N >= 2P to span the null space, got N={n}, P={n_sources}"
        )
    coeff = g[:n_sources, n_sources:] @ pseudo_inverse(g[n_sources:, n_sources:])
    entries = np.hstack([-np.eye(n_sources), coeff])
    return PropagatorOperator(entries=entries, kind="Q2")


def transfer_operator(
    gamma: CovarianceEstimate, scheme: PartitionScheme, i: int, j: int, k: int
) -> np.ndarray:
    """Transfer ``G_ik G_jk^+`` mapping channel block j onto block i.

    Requires ``i != j`` and a third index ``k`` distinct from both; in
    the noiseless limit the result is independent of the choice of k.
    """
    if i == j:
        raise ValueError(f"transfer needs distinct blocks, got i=j={i}")
    if k in (i, j):
        raise ValueError(f"third index k={k} must differ from i={i} and j={j}")
    return covariance_block(gamma, scheme, i, k) @ pseudo_inverse(
        covariance_block(gamma, scheme, j, k)
    )


def _cyclic_successor(order: int, i: int, j: int) -> int:
    k = j % order + 1
    while k in (i, j):
        k = k % order + 1
    return k


def _resolve_k(order: int, i: int, j: int, k_strategy) -> int:
    if order == 2:
        # No third index exists; G_ij G_jj^+ is the only block-based transfer.
        return j
    if isinstance(k_strategy, dict):
        k = k_strategy.get(j)
        if k is None:
            return _cyclic_successor(order, i, j)
        k = int(k)
        if not 1 <= k <= order or k in (i, j):
            raise ValueError(
                f"k override {k} for j={j} must lie in 1..{order} and avoid i={i}, j={j}"
            )
        return k
    if k_strategy == "cyclic":
        return _cyclic_successor(order, i, j)
    raise ValueError(f"unknown k strategy {k_strategy!r}; use 'cyclic' or a {{j: k}} mapping")


def extended_propagator(
    gamma: CovarianceEstimate,
    scheme: PartitionScheme,
    i: int,
    k_strategy="cyclic",
) -> PropagatorOperator:
    """Extended propagator based on block ``i`` of the n-fold partition.

    Parameters
    ----------
    gamma : CovarianceEstimate
        Spatial covariance to partition.
    scheme : PartitionScheme
        Partition of the sensors; its order n fixes the operator family.
    i : int
        Base block index, 1-based.
    k_strategy : 'cyclic' or dict, optional
        Choice of the third index per summand j. The default picks the
        first index after j in cyclic order that avoids {i, j}; a
        ``{j: k}`` mapping overrides individual summands. For n = 2 the
        strategy is ignored and ``k(j) = j`` is used, reproducing the
        classical Q2/Q1 forms.

    Returns
    -------
    PropagatorOperator
        ``block_sizes[i]`` x N operator with ``-(n-1) I`` in block ``i``
        and transfer operators elsewhere.
    """
    n = scheme.order
    if not 1 <= i <= n:
        raise ValueError(f"block index i={i} must lie in 1..{n}")
    g = _as_square_covariance(gamma)
    if g.shape[0] != scheme.sensors:
        raise ValueError("covariance size does not match the partition scheme")
    rows = scheme.block_sizes[i - 1]
    entries = np.zeros((rows, scheme.sensors), dtype=complex)
    entries[:, scheme.block_slice(i)] = -(n - 1) * np.eye(rows)
    k_choices = []
    for j in range(1, n + 1):
        if j == i:
            continue
        k = _resolve_k(n, i, j, k_strategy)
        k_choices.append(k)
        if k == j:
            block = covariance_block(gamma, scheme, i, j) @ pseudo_inverse(
                covariance_block(gamma, scheme, j, j)
            )
        else:
            block = transfer_operator(gamma, scheme, i, j, k)
        entries[:, scheme.block_slice(j)] = block
    return PropagatorOperator(
        entries=entries,
        kind="extended",
        order_n=n,
        block_i=i,
        k_choices=tuple(k_choices),
    )


def assembled_psi(
    gamma: CovarianceEstimate, scheme: PartitionScheme, k_strategy="cyclic"
) -> PropagatorOperator:
    """Stack the n per-block extended propagators into one N x N operator.

    The diagonal blocks are ``-(n-1) I`` by construction, so the trace is
    exactly ``-(n-1) N``; in the noiseless limit the whole operator
    annihilates the channel matrix.
    """
    parts = [
        extended_propagator(gamma, scheme, i, k_strategy) for i in range(1, scheme.order + 1)
    ]
    entries = np.vstack([p.entries for p in parts])
    k_choices = tuple(k for p in parts for k in p.k_choices)
    return PropagatorOperator(
        entries=entries,
        kind="extended",
        order_n=scheme.order,
        block_i=None,
        k_choices=k_choices,
    )


def enumerate_operators(sensors: int, sources: int) -> OperatorCatalog:
    """Catalog of all (n, i) extended-propagator indices for a geometry.

    The count follows the closed form ``n_max (n_max + 1) / 2 - 1`` with
    ``n_max = floor(N/P)``. When ``n_max < 2`` the catalog is empty and
    carries the applicable fallback as ``reason``.
    """
    if sensors < 1 or sources < 1:
        raise ValueError(
            f"sensor and source counts must be positive, got N={sensors}, P={sources}"
        )
    n_max = sensors // sources
    if n_max < 2:
        if sensors <= sources:
            reason = (
                "no extended propagator: ratio N/P <= 1 "
                "(quasi-stationary approaches outside this package's scope)"
            )
        else:
            reason = "no extended propagator: 1 < N/P < 2; standard propagator available"
        return OperatorCatalog(sensors=sensors, sources=sources, entries=(), reason=reason)
    entries = tuple((n, i) for n in range(2, n_max + 1) for i in range(1, n + 1))
    return OperatorCatalog(sensors=sensors, sources=sources, entries=entries)
