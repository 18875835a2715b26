from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from uavlc.exceptions.app_exceptions import ValidationException

TWO_PI = 2.0 * np.pi


def wrap_phase(theta) -> np.ndarray:
    """Map angles into [0, 2π); rounding that lands on 2π is folded to 0."""
    wrapped = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


@dataclass(frozen=True, eq=False)
class PhaseMatrix:
    """RIS phase shifts θ_lm, one row per RIS, one column per element."""
    theta: np.ndarray

    def __post_init__(self):
        theta = wrap_phase(np.atleast_2d(self.theta))
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zeros(cls, ris_count: int, elements: int) -> "PhaseMatrix":
        return cls(np.zeros((ris_count, elements)))

    @property
    def shape(self) -> tuple:
        return self.theta.shape

    def with_rows(self, ris_indices: Sequence[int], rows: np.ndarray) -> "PhaseMatrix":
        theta = np.array(self.theta)
        theta[list(ris_indices)] = rows
        return PhaseMatrix(theta)


@dataclass(frozen=True, eq=False)
class Association:
    """
    Binary user (D×U) and RIS (D×L) association matrices.

    Every user and every RIS belongs to exactly one UAV.
    """
    user_assoc: np.ndarray
    ris_assoc: np.ndarray

    def __post_init__(self):
        for name in ("user_assoc", "ris_assoc"):
            matrix = np.array(getattr(self, name), dtype=np.int8, ndmin=2)
            if not np.isin(matrix, (0, 1)).all():
                raise ValidationException(f"{name} must be binary")
            if matrix.shape[1] and not np.all(matrix.sum(axis=0) == 1):
                raise ValidationException(f"every column of {name} must sum to exactly 1")
            matrix.setflags(write=False)
            object.__setattr__(self, name, matrix)
        if self.user_assoc.shape[0] != self.ris_assoc.shape[0]:
            raise ValidationException("user_assoc and ris_assoc must have one row per UAV")

    @classmethod
    def from_owners(cls, user_owner: Sequence[int], ris_owner: Sequence[int], uav_count: int) -> "Association":
        matrices = []
        for name, owner in (("user_owner", user_owner), ("ris_owner", ris_owner)):
            owner = np.asarray(owner, dtype=int).reshape(-1)
            bad = np.flatnonzero((owner < 0) | (owner >= uav_count))
            if bad.size:
                raise ValidationException(
                    f"{name}[{bad[0]}] = {owner[bad[0]]} is not a UAV index in [0, {uav_count})"
                )
            matrix = np.zeros((uav_count, owner.size), dtype=np.int8)
            matrix[owner, np.arange(owner.size)] = 1
            matrices.append(matrix)
        return cls(*matrices)

    @property
    def uav_count(self) -> int:
        return int(self.user_assoc.shape[0])

    @property
    def user_owner(self) -> np.ndarray:
        return np.argmax(self.user_assoc, axis=0)

    @property
    def ris_owner(self) -> np.ndarray:
        return np.argmax(self.ris_assoc, axis=0)

    def users_of(self, uav: int) -> np.ndarray:
        return np.flatnonzero(self.user_assoc[uav])

    def ris_of(self, uav: int) -> np.ndarray:
        return np.flatnonzero(self.ris_assoc[uav])

    def with_user_owner(self, user_owner: Sequence[int]) -> "Association":
        return Association.from_owners(user_owner, self.ris_owner, self.uav_count)

    def with_ris_owner(self, ris_owner: Sequence[int]) -> "Association":
        return Association.from_owners(self.user_owner, ris_owner, self.uav_count)


@dataclass(frozen=True, eq=False)
class Solution:
    deployment: np.ndarray
    phases: PhaseMatrix
    assoc: Association
    powers: np.ndarray

    def __post_init__(self):
        deployment = np.array(self.deployment, dtype=float).reshape(-1, 2)
        powers = np.array(self.powers, dtype=float).ravel()
        if powers.shape != (deployment.shape[0],):
            raise ValidationException("powers needs one entry per UAV")
        if np.any(powers < 0):
            raise ValidationException("powers must be >= 0")
        deployment.setflags(write=False)
        powers.setflags(write=False)
        object.__setattr__(self, "deployment", deployment)
        object.__setattr__(self, "powers", powers)

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())

    def with_changes(self, **changes) -> "Solution":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    """Per-constraint slacks of a Solution; negative slack means violation."""
    rate_slack: np.ndarray
    illumination_slack: np.ndarray
    separation_slack: np.ndarray
    user_column_sums: np.ndarray
    ris_column_sums: np.ndarray
    tolerance: float

    @property
    def min_slack(self) -> float:
        slacks = [s for s in (self.rate_slack, self.illumination_slack, self.separation_slack) if s.size]
        return float(min(s.min() for s in slacks)) if slacks else 0.0

    @property
    def columns_valid(self) -> bool:
        return bool(np.all(self.user_column_sums == 1) and np.all(self.ris_column_sums == 1))

    @property
    def feasible(self) -> bool:
        return self.min_slack >= -self.tolerance and self.columns_valid
