"""Criteria, preference functions and per-criterion preference degrees."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError, StructuralError, ValidationReport

CONDITION_TOL = 1e-12


class Direction(str, Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.MAXIMIZE else -1


class PreferenceType(str, Enum):
    USUAL = "usual"
    U_SHAPE = "u_shape"
    V_SHAPE = "v_shape"
    LEVEL = "level"
    LINEAR = "linear"
    GAUSSIAN = "gaussian"


_REQUIRED = {
    PreferenceType.USUAL: (),
    PreferenceType.U_SHAPE: ("q",),
    PreferenceType.V_SHAPE: ("p",),
    PreferenceType.LEVEL: ("q", "p"),
    PreferenceType.LINEAR: ("q", "p"),
    PreferenceType.GAUSSIAN: ("s",),
}


@dataclass(frozen=True)
class CriterionSpec:
    name: str
    direction: Direction = Direction.MAXIMIZE
    pf_type: PreferenceType = PreferenceType.USUAL
    q: float | None = None
    p: float | None = None
    s: float | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "direction", Direction(self.direction))
        except ValueError:
            raise StructuralError(f"criterion {self.name!r}: unknown direction {self.direction!r}") from None
        try:
            object.__setattr__(self, "pf_type", PreferenceType(self.pf_type))
        except ValueError:
            raise StructuralError(f"criterion {self.name!r}: unknown preference function {self.pf_type!r}") from None
        required = _REQUIRED[self.pf_type]
        for key in ("q", "p", "s"):
            value = getattr(self, key)
            if key in required and value is None:
                raise StructuralError(f"criterion {self.name!r}: {self.pf_type.value} needs threshold {key}")
            if key not in required and value is not None:
                raise StructuralError(f"criterion {self.name!r}: {self.pf_type.value} takes no threshold {key}")
            if value is not None:
                value = float(value)
                if not math.isfinite(value) or value < 0:
                    raise StructuralError(f"criterion {self.name!r}: threshold {key} must be finite and ≥ 0")
                object.__setattr__(self, key, value)
        if self.q is not None and self.p is not None and self.p < self.q:
            raise StructuralError(f"criterion {self.name!r}: p = {self.p} is below q = {self.q}")
        if self.pf_type is PreferenceType.GAUSSIAN and self.s == 0:
            raise StructuralError(f"criterion {self.name!r}: gaussian s must be > 0")

    @property
    def thresholds(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in _REQUIRED[self.pf_type]}

    @property
    def can_reach_full_preference(self) -> bool:
        """Whether some finite difference yields a degree of exactly 1."""
        return self.pf_type is not PreferenceType.GAUSSIAN


@dataclass(frozen=True, eq=False)
class ReferenceProfileSet:
    """Limiting profiles ``r_1`` (best) ... ``r_{k+1}`` (worst), one row each."""

    values: np.ndarray
    labels: tuple[str, ...] | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2:
            raise StructuralError("at least two limiting profiles (one category) are required")
        if not np.all(np.isfinite(values)):
            raise StructuralError("profile evaluations must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        k = values.shape[0] - 1
        labels = tuple(self.labels) if self.labels is not None else tuple(f"K{h}" for h in range(1, k + 1))
        names = tuple(self.names) if self.names is not None else tuple(f"r{h}" for h in range(1, k + 2))
        if len(labels) != k:
            raise StructuralError(f"{k + 1} profiles define {k} categories, got {len(labels)} labels")
        if len(names) != k + 1:
            raise StructuralError(f"expected {k + 1} profile names, got {len(names)}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "names", names)

    @property
    def k(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_criteria(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class DecisionMatrix:
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1 and values.size == 0:
            values = values.reshape(0, 0)
        if values.ndim != 2:
            raise StructuralError("decision matrix must be two-dimensional")
        names = tuple(self.names)
        if len(names) != values.shape[0]:
            raise StructuralError(f"{values.shape[0]} rows but {len(names)} alternative names")
        if len(set(names)) != len(names):
            raise StructuralError("alternative names must be unique")
        if not np.all(np.isfinite(values)):
            raise StructuralError("evaluations must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.names)

    def row(self, name: str) -> np.ndarray:
        return self.values[self.names.index(name)]


def signs(criteria: Sequence[CriterionSpec]) -> np.ndarray:
    return np.array([c.direction.sign for c in criteria], dtype=float)


def signed_difference(c: CriterionSpec, x_val: float, y_val: float) -> float:
    """Performance difference of ``x`` over ``y``; positive means ``x`` is better."""
    if not (math.isfinite(x_val) and math.isfinite(y_val)):
        raise DomainError(f"criterion {c.name!r}: evaluations must be finite")
    if c.direction is Direction.MAXIMIZE:
        return x_val - y_val
    return y_val - x_val


def preference_degree(c: CriterionSpec, d):
    """Degree in [0, 1] to which a difference ``d`` expresses preference.

    Zero for ``d <= 0`` under every type.  Boundaries: u-shape is 0 at
    ``d == q``; level is 0.5 on ``(q, p]``; linear is ``(d - q) / (p - q)``
    on ``(q, p]``; v-shape is ``d / p`` on ``(0, p]``.
    """
    d = np.asarray(d, dtype=float)
    t = c.pf_type
    if t is PreferenceType.USUAL:
        out = (d > 0).astype(float)
    elif t is PreferenceType.U_SHAPE:
        out = (d > c.q).astype(float)
    elif t is PreferenceType.V_SHAPE:
        if c.p == 0:
            out = (d > 0).astype(float)
        else:
            out = np.where(d > c.p, 1.0, np.where(d > 0, d / c.p, 0.0))
    elif t is PreferenceType.LEVEL:
        out = np.where(d > c.p, 1.0, np.where(d > c.q, 0.5, 0.0))
    elif t is PreferenceType.LINEAR:
        span = c.p - c.q
        ramp = (d - c.q) / span if span > 0 else np.ones_like(d)
        out = np.where(d > c.p, 1.0, np.where(d > c.q, ramp, 0.0))
    else:
        with np.errstate(over="ignore"):
            out = np.where(d > 0, -np.expm1(-(d * d) / (2.0 * c.s * c.s)), 0.0)
    return float(out) if out.ndim == 0 else out


def local_degrees(points: np.ndarray, criteria: Sequence[CriterionSpec]) -> np.ndarray:
    """``P[x, y, j]`` for every ordered pair of rows in ``points``."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != len(criteria):
        raise StructuralError(f"expected rows of {len(criteria)} evaluations, got shape {points.shape}")
    diff = (points[:, None, :] - points[None, :, :]) * signs(criteria)
    out = np.empty_like(diff)
    for j, c in enumerate(criteria):
        out[:, :, j] = preference_degree(c, diff[:, :, j])
    return out


def pairwise_degrees(
    alt: Sequence[float], profiles: ReferenceProfileSet, criteria: Sequence[CriterionSpec]
) -> np.ndarray:
    """Preference degrees over ``R_i = (r_1, ..., r_{k+1}, a_i)``.

    Returns a ``(k+2, k+2, n)`` tensor; entry ``[x, y, j]`` is ``P_j(x, y)``.
    """
    alt = np.asarray(alt, dtype=float)
    n = len(criteria)
    if profiles.n_criteria != n or alt.shape != (n,):
        raise StructuralError(
            f"dimension mismatch: {n} criteria, profiles with {profiles.n_criteria}, alternative shape {alt.shape}"
        )
    return local_degrees(np.vstack([profiles.values, alt]), criteria)


def _oriented(values: np.ndarray, criteria: Sequence[CriterionSpec]) -> np.ndarray:
    return np.asarray(values, dtype=float) * signs(criteria)


def validate_profiles(
    profiles: ReferenceProfileSet,
    criteria: Sequence[CriterionSpec],
    mode: str = "strict",
    capacity=None,
) -> ValidationReport:
    """Check the limiting profiles.

    ``weak`` checks dominance (Condition 2) only; ``strict`` also requires a
    positive outranking degree of every better profile over every worse one
    and a zero degree the other way; ``strong`` requires that degree to be 1.
    """
    if mode not in ("weak", "strict", "strong"):
        raise StructuralError(f"unknown validation mode {mode!r}")
    n = len(criteria)
    if profiles.n_criteria != n:
        raise StructuralError(f"profiles have {profiles.n_criteria} columns for {n} criteria")
    report = ValidationReport()
    oriented = _oriented(profiles.values, criteria)
    rows = profiles.values.shape[0]
    for h in range(rows):
        for l in range(h + 1, rows):
            worse = np.flatnonzero(oriented[h] < oriented[l])
            for j in worse:
                report.add(
                    "condition2",
                    f"{profiles.names[h]} is worse than {profiles.names[l]} on {criteria[j].name} "
                    f"({profiles.values[h, j]:g} vs {profiles.values[l, j]:g})",
                    location=f"profiles/{profiles.names[h]}/{criteria[j].name}",
                    h=h + 1,
                    l=l + 1,
                    criterion=criteria[j].name,
                )
    if mode == "weak":
        return report
    if capacity is None:
        raise PreconditionError(f"{mode} profile validation needs the problem's capacity")

    degrees = capacity.choquet(local_degrees(profiles.values, criteria))
    for h in range(rows):
        for l in range(h + 1, rows):
            forward, backward = float(degrees[h, l]), float(degrees[l, h])
            where = f"profiles/{profiles.names[h]}>{profiles.names[l]}"
            if mode == "strict" and forward <= 0.0:
                report.add(
                    "condition7B",
                    f"CI_pi({profiles.names[h]}, {profiles.names[l]}) = {forward!r}, must be > 0",
                    location=where, h=h + 1, l=l + 1, value=forward,
                )
            if mode == "strong" and abs(forward - 1.0) > CONDITION_TOL:
                report.add(
                    "condition8B",
                    f"CI_pi({profiles.names[h]}, {profiles.names[l]}) = {forward!r}, must be 1",
                    location=where, h=h + 1, l=l + 1, value=forward,
                )
            if abs(backward) > CONDITION_TOL:
                report.add(
                    "condition7B",
                    f"CI_pi({profiles.names[l]}, {profiles.names[h]}) = {backward!r}, must be 0",
                    location=where, h=l + 1, l=h + 1, value=backward,
                )
    return report


def validate_alternatives(
    matrix: DecisionMatrix, profiles: ReferenceProfileSet, criteria: Sequence[CriterionSpec]
) -> ValidationReport:
    """Every evaluation must lie between the worst and the best limiting profile."""
    n = len(criteria)
    if matrix.values.shape[0] and matrix.values.shape[1] != n:
        raise StructuralError(f"decision matrix has {matrix.values.shape[1]} columns for {n} criteria")
    report = ValidationReport()
    oriented = _oriented(matrix.values, criteria) if len(matrix) else np.zeros((0, n))
    best = _oriented(profiles.values[0], criteria)
    worst = _oriented(profiles.values[-1], criteria)
    for i, name in enumerate(matrix.names):
        for j, c in enumerate(criteria):
            value = matrix.values[i, j]
            if oriented[i, j] > best[j]:
                report.add(
                    "bounds.best",
                    f"{name} on {c.name} = {value:g} is better than {profiles.names[0]} ({profiles.values[0, j]:g})",
                    location=f"alternatives/{name}/{c.name}",
                    alternative=name, criterion=c.name, profile=profiles.names[0],
                )
            elif oriented[i, j] < worst[j]:
                report.add(
                    "bounds.worst",
                    f"{name} on {c.name} = {value:g} is worse than {profiles.names[-1]} ({profiles.values[-1, j]:g})",
                    location=f"alternatives/{name}/{c.name}",
                    alternative=name, criterion=c.name, profile=profiles.names[-1],
                )
    return report
