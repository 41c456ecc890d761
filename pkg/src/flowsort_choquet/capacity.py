"""Capacities (fuzzy measures), their Möbius and Shapley/interaction forms,
and the Choquet integral in its lattice, Möbius, 2-additive and
Shapley/interaction formulations.

Subsets of criteria are encoded as bitmasks: bit ``j`` set means criterion
``j`` (0-based) belongs to the subset.  Full-lattice objects are limited to
``MAX_LATTICE_CRITERIA`` criteria; the 2-additive paths have no such limit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, StructuralError, ValidationReport

MAX_LATTICE_CRITERIA = 20

ROUNDTRIP_TOL = 1e-12
EQUIVALENCE_TOL = 1e-9
VALIDATION_TOL = 1e-12

# Cap on (S, T) pairs listed by validate_lattice once a violation is found.
_MAX_LISTED_PAIRS = 10_000


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_of(criteria: Iterable[int]) -> int:
    mask = 0
    for j in criteria:
        if j < 0:
            raise StructuralError(f"negative criterion index {j}")
        mask |= 1 << j
    return mask


def members(mask: int) -> tuple[int, ...]:
    return tuple(j for j in range(mask.bit_length()) if mask >> j & 1)


def fmt_subset(mask: int) -> str:
    """1-based display of a subset, as criteria are numbered in reports."""
    inner = ", ".join(str(j + 1) for j in members(mask))
    return "{" + inner + "}" if inner else "∅"


def _popcounts(n: int) -> np.ndarray:
    counts = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        counts[1 << j: 1 << (j + 1)] = counts[: 1 << j] + 1
    return counts


def _check_lattice_size(n: int) -> None:
    if n < 1:
        raise StructuralError("at least one criterion is required")
    if n > MAX_LATTICE_CRITERIA:
        raise StructuralError(
            f"full-lattice operations are limited to {MAX_LATTICE_CRITERIA} criteria, got {n}"
        )


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CapacityLattice:
    """Set function over all ``2**n`` subsets, stored densely by bitmask."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        _check_lattice_size(self.n)
        values = np.array(self.values, dtype=float)
        if values.shape != (1 << self.n,):
            raise StructuralError(
                f"lattice over {self.n} criteria needs {1 << self.n} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise StructuralError("lattice values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, n: int, values: Mapping[Iterable[int] | int, float]) -> "CapacityLattice":
        """Build from ``{subset: value}``; subsets may be masks or index iterables.

        The empty set may be omitted (it is taken as 0); every other subset
        must be present.
        """
        _check_lattice_size(n)
        dense = np.full(1 << n, np.nan)
        dense[0] = 0.0
        for key, value in values.items():
            mask = key if isinstance(key, int) else mask_of(key)
            if mask >= 1 << n:
                raise StructuralError(f"subset {members(mask)} mentions a criterion outside 0..{n - 1}")
            dense[mask] = float(value)
        missing = np.flatnonzero(np.isnan(dense))
        if missing.size:
            shown = ", ".join(fmt_subset(int(m)) for m in missing[:5])
            raise StructuralError(f"capacity lattice is missing {missing.size} subset(s), e.g. {shown}")
        return cls(n, dense)

    def __getitem__(self, subset: int | Iterable[int]) -> float:
        mask = subset if isinstance(subset, int) else mask_of(subset)
        return float(self.values[mask])

    @property
    def full(self) -> int:
        return (1 << self.n) - 1


@dataclass(frozen=True, eq=False)
class MobiusRepresentation:
    """Sparse Möbius masses ``{mask: m(T)}``.

    ``max_order`` is the k-additivity cap: masses on sets with more than
    ``max_order`` criteria must be zero.  When omitted it is inferred from
    the nonzero masses.
    """

    n: int
    masses: Mapping[int, float]
    max_order: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise StructuralError("at least one criterion is required")
        clean: dict[int, float] = {}
        for mask, value in self.masses.items():
            mask = int(mask)
            if mask < 0 or mask >= 1 << self.n:
                raise StructuralError(f"mask {mask} out of range for {self.n} criteria")
            value = float(value)
            if not math.isfinite(value):
                raise StructuralError(f"mass of {fmt_subset(mask)} is not finite")
            clean[mask] = value
        order = max((popcount(m) for m, v in clean.items() if v != 0.0), default=0)
        if self.max_order is None:
            object.__setattr__(self, "max_order", max(order, 1))
        elif order > self.max_order:
            raise StructuralError(
                f"mass on a set of size {order} exceeds the declared order {self.max_order}"
            )
        object.__setattr__(self, "masses", clean)

    @classmethod
    def from_subsets(cls, n: int, masses: Mapping[Iterable[int], float], max_order: int | None = None):
        return cls(n, {mask_of(k): v for k, v in masses.items()}, max_order)

    @classmethod
    def two_additive(cls, singletons: Sequence[float], pairs: Mapping[tuple[int, int], float]):
        n = len(singletons)
        masses = {1 << j: float(v) for j, v in enumerate(singletons)}
        for (j, s), v in pairs.items():
            if j == s:
                raise StructuralError(f"pair ({j}, {s}) repeats a criterion")
            masses[(1 << j) | (1 << s)] = masses.get((1 << j) | (1 << s), 0.0) + float(v)
        return cls(n, masses, 2)

    def __getitem__(self, subset: int | Iterable[int]) -> float:
        mask = subset if isinstance(subset, int) else mask_of(subset)
        return self.masses.get(mask, 0.0)

    @property
    def order(self) -> int:
        """Largest size of a set carrying a nonzero mass."""
        return max((popcount(m) for m, v in self.masses.items() if v != 0.0), default=0)

    @cached_property
    def singletons(self) -> np.ndarray:
        out = np.zeros(self.n)
        for j in range(self.n):
            out[j] = self.masses.get(1 << j, 0.0)
        return out

    @cached_property
    def pairs(self) -> dict[tuple[int, int], float]:
        out = {}
        for mask, value in sorted(self.masses.items()):
            if popcount(mask) == 2 and value != 0.0:
                out[members(mask)] = value
        return out

    @property
    def total(self) -> float:
        return math.fsum(self.masses.values())

    def dense(self) -> np.ndarray:
        _check_lattice_size(self.n)
        arr = np.zeros(1 << self.n)
        for mask, value in self.masses.items():
            arr[mask] = value
        return arr


def _pair_key(j: int, s: int) -> tuple[int, int]:
    if j == s:
        raise StructuralError(f"interaction ({j}, {s}) repeats a criterion")
    return (j, s) if j < s else (s, j)


@dataclass(frozen=True, eq=False)
class ShapleyInteractionModel:
    """2-additive capacity given by Shapley importances and pair interactions."""

    shapley: np.ndarray
    interactions: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        shapley = np.array(self.shapley, dtype=float)
        if shapley.ndim != 1 or shapley.size < 1:
            raise StructuralError("shapley must be a non-empty vector")
        if not np.all(np.isfinite(shapley)):
            raise StructuralError("shapley values must be finite")
        shapley.setflags(write=False)
        n = shapley.size
        clean: dict[tuple[int, int], float] = {}
        for (j, s), value in self.interactions.items():
            key = _pair_key(int(j), int(s))
            if key[0] < 0 or key[1] >= n:
                raise StructuralError(f"interaction {key} mentions a criterion outside 0..{n - 1}")
            if key in clean:
                raise StructuralError(f"interaction {key} given twice")
            value = float(value)
            if not math.isfinite(value):
                raise StructuralError(f"interaction {key} is not finite")
            clean[key] = value
        object.__setattr__(self, "shapley", shapley)
        object.__setattr__(self, "interactions", dict(sorted(clean.items())))

    @property
    def n(self) -> int:
        return self.shapley.size

    def absolute_interaction_sums(self) -> np.ndarray:
        sums = np.zeros(self.n)
        for (j, s), value in self.interactions.items():
            sums[j] += abs(value)
            sums[s] += abs(value)
        return sums

    def slacks(self) -> np.ndarray:
        """``I_j - 1/2 sum_s |I_js|``; nonnegative for a monotone capacity."""
        return self.shapley - 0.5 * self.absolute_interaction_sums()


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_lattice(cap: CapacityLattice, tol: float = VALIDATION_TOL) -> ValidationReport:
    """Boundary and monotonicity check.

    Every violated pair ``S ⊆ T`` with ``mu(S) > mu(T)`` is listed (up to a
    cap, after which ``report.truncated`` is set).
    """
    report = ValidationReport()
    mu = cap.values
    if abs(mu[0]) > tol:
        report.add("boundary.empty", f"mu(∅) = {float(mu[0])!r}, expected 0", subset=())
    if abs(mu[cap.full] - 1.0) > tol:
        report.add("boundary.full", f"mu(G) = {float(mu[cap.full])!r}, expected 1", subset=members(cap.full))

    # Monotone along every covering edge S -> S ∪ {i} implies monotone everywhere.
    any_cover_violation = False
    for i in range(cap.n):
        view = mu.reshape(-1, 2, 1 << i)
        if np.any(view[:, 0, :] > view[:, 1, :] + tol):
            any_cover_violation = True
            break
    if not any_cover_violation:
        return report

    listed = 0
    for t in range(1 << cap.n):
        sub = t
        while True:
            sub = (sub - 1) & t
            if mu[sub] > mu[t] + tol:
                if listed >= _MAX_LISTED_PAIRS:
                    report.truncated = True
                    return report
                report.add(
                    "monotonicity",
                    f"mu({fmt_subset(sub)}) = {mu[sub]:.12g} > mu({fmt_subset(t)}) = {mu[t]:.12g}",
                    subset=members(sub),
                    superset=members(t),
                )
                listed += 1
            if sub == 0:
                break
    return report


def validate_two_additive(model: ShapleyInteractionModel, tol: float = VALIDATION_TOL) -> ValidationReport:
    report = ValidationReport()
    total = math.fsum(model.shapley)
    if abs(total - 1.0) > tol:
        report.add("boundary.sum", f"Shapley values sum to {total!r}, expected 1", total=total)
    for j, value in enumerate(model.shapley):
        if value < -tol:
            report.add("shapley.negative", f"I_{j + 1} = {value!r} is negative", criterion=j)
    for (j, s), value in model.interactions.items():
        if abs(value) > 1.0 + tol:
            report.add("interaction.range", f"I_{j + 1}{s + 1} = {value!r} outside [-1, 1]", pair=(j, s))
    for j, slack in enumerate(model.slacks()):
        if slack < -tol:
            report.add(
                "monotonicity",
                f"I_{j + 1} - 1/2 sum |I_{j + 1}s| = {slack!r} < 0",
                criterion=j,
                slack=float(slack),
            )
    return report


def validate_mobius(m: MobiusRepresentation, tol: float = VALIDATION_TOL) -> ValidationReport:
    """Boundary and monotonicity check on Möbius masses.

    For 2-additive masses the closed-form conditions are used; otherwise the
    check runs on the induced lattice.
    """
    if m.order > 2:
        report = validate_lattice(mobius_to_lattice(m), tol)
        return report
    report = ValidationReport()
    if abs(m.masses.get(0, 0.0)) > tol:
        report.add("boundary.empty", f"m(∅) = {m.masses[0]!r}, expected 0")
    total = m.total
    if abs(total - 1.0) > tol:
        report.add("boundary.sum", f"masses sum to {total!r}, expected 1", total=total)
    negative_pair_sum = np.zeros(m.n)
    for (j, s), value in m.pairs.items():
        if value < 0:
            negative_pair_sum[j] += value
            negative_pair_sum[s] += value
    for j in range(m.n):
        worst = m.singletons[j] + negative_pair_sum[j]
        if m.singletons[j] < -tol or worst < -tol:
            report.add(
                "monotonicity",
                f"m({{{j + 1}}}) plus its negative pair masses = {worst!r} < 0",
                criterion=j,
                slack=float(worst),
            )
    return report


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------


def mobius_to_lattice(m: MobiusRepresentation) -> CapacityLattice:
    """``mu(S) = sum_{T ⊆ S} m(T)`` via the fast zeta transform."""
    mu = m.dense()
    for i in range(m.n):
        view = mu.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return CapacityLattice(m.n, mu)


def lattice_to_mobius(cap: CapacityLattice, max_order: int | None = None) -> MobiusRepresentation:
    """Möbius inversion ``m(T) = sum_{S ⊆ T} (-1)^{|T \\ S|} mu(S)``.

    With ``max_order`` set, masses above that order whose magnitude is within
    ``ROUNDTRIP_TOL`` are dropped as rounding noise; larger ones raise.
    """
    arr = np.array(cap.values, dtype=float)
    for i in range(cap.n):
        view = arr.reshape(-1, 2, 1 << i)
        view[:, 1, :] -= view[:, 0, :]
    masses = {}
    for mask, value in enumerate(arr.tolist()):
        if value == 0.0:
            continue
        if max_order is not None and popcount(mask) > max_order:
            if abs(value) <= ROUNDTRIP_TOL:
                continue
            raise StructuralError(
                f"capacity has mass {value!r} on {fmt_subset(mask)}, beyond order {max_order}"
            )
        masses[mask] = value
    return MobiusRepresentation(cap.n, masses, max_order)


def shapley_interaction_to_mobius(model: ShapleyInteractionModel, check: bool = True) -> MobiusRepresentation:
    """``m({j,s}) = I_js`` and ``m({j}) = I_j - 1/2 sum_s I_js``."""
    if check:
        validate_two_additive(model).raise_if_invalid("invalid 2-additive model")
    singletons = model.shapley.copy()
    for (j, s), value in model.interactions.items():
        singletons[j] -= 0.5 * value
        singletons[s] -= 0.5 * value
    return MobiusRepresentation.two_additive(singletons, model.interactions)


def mobius_to_shapley_interaction(m: MobiusRepresentation) -> ShapleyInteractionModel:
    if m.order > 2:
        raise PreconditionError(f"Möbius masses are {m.order}-additive; a Shapley/interaction model needs order ≤ 2")
    return ShapleyInteractionModel(shapley_values(m), dict(m.pairs))


def shapley_values(m: MobiusRepresentation) -> np.ndarray:
    """Shapley importance of every criterion, ``I_j = sum_{T ∋ j} m(T) / |T|``.

    For 2-additive masses this is ``m({j}) + 1/2 sum_s m({j,s})``.
    """
    out = np.zeros(m.n)
    for mask, value in m.masses.items():
        size = popcount(mask)
        if size == 0:
            continue
        for j in members(mask):
            out[j] += value / size
    return out


def interaction_index(cap: CapacityLattice, subset: int | Iterable[int]) -> float:
    """Generalized interaction index of a nonempty coalition.

    Singletons give the Shapley importance; for a 2-additive capacity a pair
    gives its Möbius mass.
    """
    t_mask = subset if isinstance(subset, int) else mask_of(subset)
    if t_mask == 0:
        raise DomainError("the interaction index is undefined for the empty coalition")
    if t_mask >= 1 << cap.n:
        raise StructuralError(f"coalition {members(t_mask)} mentions a criterion outside 0..{cap.n - 1}")
    n = cap.n
    t_size = popcount(t_mask)
    all_masks = np.arange(1 << n)
    k_masks = all_masks[(all_masks & t_mask) == 0]
    k_sizes = _popcounts(n)[k_masks]
    fact = np.array([math.factorial(i) for i in range(n + 1)], dtype=float)
    weights = fact[n - k_sizes - t_size] * fact[k_sizes] / fact[n - t_size + 1]

    t_members = members(t_mask)
    diff = np.zeros(k_masks.size)
    for r in range(t_size + 1):
        sign = -1.0 if (t_size - r) % 2 else 1.0
        for combo in itertools.combinations(t_members, r):
            diff += sign * cap.values[k_masks | mask_of(combo)]
    return float(np.dot(weights, diff))


# ---------------------------------------------------------------------------
# CapacityModel
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CapacityModel:
    """A capacity held in one authoritative representation.

    The other representations are derived on first access and cached.
    """

    source: CapacityLattice | MobiusRepresentation | ShapleyInteractionModel

    def __post_init__(self):
        if not isinstance(self.source, (CapacityLattice, MobiusRepresentation, ShapleyInteractionModel)):
            raise StructuralError(f"unsupported capacity representation {type(self.source).__name__}")

    @classmethod
    def from_shapley(cls, shapley: Sequence[float], interactions: Mapping[tuple[int, int], float] | None = None):
        return cls(ShapleyInteractionModel(np.asarray(shapley, dtype=float), interactions or {}))

    @classmethod
    def additive(cls, weights: Sequence[float]):
        return cls.from_shapley(weights, {})

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def kind(self) -> str:
        return {
            CapacityLattice: "lattice",
            MobiusRepresentation: "mobius",
            ShapleyInteractionModel: "shapley_interaction",
        }[type(self.source)]

    @cached_property
    def mobius(self) -> MobiusRepresentation:
        if isinstance(self.source, MobiusRepresentation):
            return self.source
        if isinstance(self.source, ShapleyInteractionModel):
            return shapley_interaction_to_mobius(self.source, check=False)
        try:
            return lattice_to_mobius(self.source, max_order=2)
        except StructuralError:
            return lattice_to_mobius(self.source)

    @cached_property
    def lattice(self) -> CapacityLattice:
        if isinstance(self.source, CapacityLattice):
            return self.source
        return mobius_to_lattice(self.mobius)

    @cached_property
    def shapley_interaction(self) -> ShapleyInteractionModel:
        if isinstance(self.source, ShapleyInteractionModel):
            return self.source
        return mobius_to_shapley_interaction(self.mobius)

    @property
    def is_two_additive(self) -> bool:
        return isinstance(self.source, ShapleyInteractionModel) or self.mobius.order <= 2

    def validate(self, tol: float = VALIDATION_TOL) -> ValidationReport:
        if isinstance(self.source, ShapleyInteractionModel):
            return validate_two_additive(self.source, tol)
        if isinstance(self.source, MobiusRepresentation):
            return validate_mobius(self.source, tol)
        return validate_lattice(self.source, tol)

    def shapley(self) -> np.ndarray:
        return shapley_values(self.mobius)

    def choquet(self, values: np.ndarray) -> np.ndarray | float:
        """Batched Choquet integral over the last axis of ``values``."""
        if self.is_two_additive:
            return choquet_two_additive(values, self.mobius)
        return choquet_mobius(values, self.mobius)


# ---------------------------------------------------------------------------
# Choquet integral, four forms
# ---------------------------------------------------------------------------


def _as_values(values, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape[-1:] != (n,):
        raise StructuralError(f"expected {n} values per vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("values must be finite")
    if np.any(arr < 0):
        raise DomainError("the Choquet integral is defined here for nonnegative values only")
    return arr


def _scalar_or_array(out: np.ndarray):
    return float(out) if out.ndim == 0 else out


def choquet_lattice(values: Sequence[float], cap: CapacityLattice) -> float:
    """Sorted-differences form: ``sum_j (g_(j) - g_(j-1)) mu({(j), ..., (n)})``."""
    g = _as_values(values, cap.n)
    if g.ndim != 1:
        raise StructuralError("choquet_lattice takes one value vector")
    order = np.argsort(g, kind="stable")
    total = 0.0
    previous = 0.0
    remaining = cap.full
    for j in order:
        total += (g[j] - previous) * cap.values[remaining]
        previous = g[j]
        remaining &= ~(1 << int(j))
    return float(total)


def choquet_mobius(values, m: MobiusRepresentation):
    """``sum_T m(T) min_{j in T} g_j`` (batched over leading axes)."""
    g = _as_values(values, m.n)
    out = np.zeros(g.shape[:-1])
    for mask, mass in m.masses.items():
        if mask == 0 or mass == 0.0:
            continue
        idx = list(members(mask))
        out = out + mass * g[..., idx].min(axis=-1)
    return _scalar_or_array(out)


def choquet_two_additive(values, m: MobiusRepresentation):
    """``sum_j m({j}) g_j + sum_{j,s} m({j,s}) min(g_j, g_s)``."""
    if m.order > 2:
        raise PreconditionError(f"masses are {m.order}-additive; the 2-additive form needs order ≤ 2")
    g = _as_values(values, m.n)
    out = g @ m.singletons
    for (j, s), mass in m.pairs.items():
        out = out + mass * np.minimum(g[..., j], g[..., s])
    return _scalar_or_array(np.asarray(out))


def choquet_shapley_form(values, model: ShapleyInteractionModel, check: bool = True):
    """Shapley/interaction form: synergies act through the minimum, redundancies
    through the maximum, and each criterion keeps ``I_j - 1/2 sum_s |I_js|``."""
    if check:
        validate_two_additive(model).raise_if_invalid("invalid 2-additive model")
    g = _as_values(values, model.n)
    out = g @ model.slacks()
    for (j, s), value in model.interactions.items():
        if value > 0:
            out = out + value * np.minimum(g[..., j], g[..., s])
        elif value < 0:
            out = out + abs(value) * np.maximum(g[..., j], g[..., s])
    return _scalar_or_array(np.asarray(out))
