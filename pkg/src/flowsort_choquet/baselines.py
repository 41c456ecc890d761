"""Common-scale treatments applied before a direct Choquet aggregation.

These are the comparators FlowSort-Choquet avoids: scoring on a shared
qualitative scale, or min-max normalising each column into [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .capacity import CapacityModel
from .errors import DomainError, StructuralError
from .preference import CriterionSpec, DecisionMatrix, Direction


@dataclass(frozen=True, eq=False)
class NormalizedMatrix:
    """Values in [0, 1] where 1 is the best observed value of each column."""

    names: tuple[str, ...]
    values: np.ndarray
    minima: np.ndarray
    maxima: np.ndarray
    directions: tuple[Direction, ...]


def min_max_normalize(matrix: DecisionMatrix, criteria: Sequence[CriterionSpec]) -> NormalizedMatrix:
    """Direction-aware min-max scaling.

    Maximised columns use ``(x - min) / (max - min)``; minimised columns are
    reflected, ``(max - x) / (max - min)``, so the best value always maps to 1.
    A constant column has no defined scaling and is rejected.
    """
    values = np.asarray(matrix.values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(criteria):
        raise StructuralError(f"matrix has shape {values.shape} for {len(criteria)} criteria")
    if values.shape[0] == 0:
        raise StructuralError("cannot normalise an empty matrix")
    lo, hi = values.min(axis=0), values.max(axis=0)
    out = np.empty_like(values)
    for j, c in enumerate(criteria):
        span = hi[j] - lo[j]
        if not span > 0:
            raise DomainError(f"criterion {c.name!r} is constant ({lo[j]!r}); min-max scaling is undefined")
        if c.direction is Direction.MAXIMIZE:
            out[:, j] = (values[:, j] - lo[j]) / span
        else:
            out[:, j] = (hi[j] - values[:, j]) / span
    return NormalizedMatrix(tuple(matrix.names), out, lo, hi, tuple(c.direction for c in criteria))


def direct_choquet_scores(values, model: CapacityModel) -> np.ndarray:
    """Choquet integral of every row of an already commensurate matrix."""
    if isinstance(values, (NormalizedMatrix, DecisionMatrix)):
        values = values.values
    values = np.atleast_2d(np.asarray(values, dtype=float))
    model.validate().raise_if_invalid("invalid capacity")
    return np.atleast_1d(model.choquet(values))
