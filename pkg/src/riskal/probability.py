"""Validated primitives for discrete probability and utility.

Conventions used throughout the package: health-state labels are 1-based
integers in ``1..K`` (matching how the condition states are usually
tabulated), actions are 0-based integers in ``0..A-1`` (``0`` = do
nothing, ``1`` = perform maintenance in both case studies).

Every value here is immutable after construction and every operation is
pure, so instances can be shared freely across threads and processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyInput,
    InputError,
    LengthMismatch,
    NegativeEntry,
    RowSumNotOne,
    SumNotOne,
)

#: Absolute tolerance on probability sums. Inputs are exact table values
#: or normalized posteriors, so anything looser would hide real bugs.
SUM_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over the K health states.

    Use :func:`validate_distribution` to construct one from raw numbers;
    the constructor itself trusts its input.
    """

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))

    def __len__(self) -> int:
        return self.probs.shape[0]

    @staticmethod
    def point_mass(label: int, k: int) -> "DiscreteDistribution":
        """Degenerate distribution placing all mass on 1-based ``label``."""
        p = np.zeros(k)
        p[label - 1] = 1.0
        return DiscreteDistribution(p)


@dataclass(frozen=True)
class UtilityTable:
    """Utility values indexed by state (1-based) or action (0-based)."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1 or values.size == 0:
            raise EmptyInput("utility table must be a non-empty vector")
        if not np.all(np.isfinite(values)):
            raise InputError("utility table entries must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class TransitionCPT:
    """Row-stochastic K x K matrix; rows index the current state,
    columns the next state."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.shape[0] == 0:
            raise EmptyInput(f"transition table must be square and non-empty, got shape {rows.shape}")
        if np.any(rows < 0.0) or np.any(rows > 1.0):
            raise NegativeEntry("transition probabilities must lie in [0, 1]")
        sums = rows.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > SUM_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise RowSumNotOne(
                f"row {i + 1} sums to {sums[i]!r} (deviation {sums[i] - 1.0:+.3e})"
            )
        object.__setattr__(self, "rows", _frozen(rows))

    @property
    def n_states(self) -> int:
        return self.rows.shape[0]


def validate_distribution(p) -> DiscreteDistribution:
    """Validate a raw vector as a probability distribution.

    Never renormalizes: a vector that does not already sum to one within
    ``SUM_TOL`` is rejected with the deviation reported.
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyInput("distribution must be a non-empty vector")
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise NegativeEntry(f"negative or non-finite entry in {arr.tolist()}")
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise SumNotOne(f"entries sum to {total!r} (deviation {total - 1.0:+.3e})")
    return DiscreteDistribution(arr)


def expectation(p: DiscreteDistribution, u: UtilityTable) -> float:
    """Expected utility sum(p_k * u_k)."""
    if len(p) != len(u):
        raise LengthMismatch(f"distribution has {len(p)} entries, utilities {len(u)}")
    return float(p.probs @ u.values)


def argmax_with_tiebreak(values) -> int:
    """Index of the maximum; exact ties resolve to the lowest index.

    The lowest index wins so that "do nothing" is chosen when actions are
    exactly utility-equivalent, keeping runs deterministic.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyInput("argmax of an empty vector")
    if not np.all(np.isfinite(arr)):
        raise EmptyInput(f"non-finite entry in {arr.tolist()}")
    return int(np.argmax(arr))
