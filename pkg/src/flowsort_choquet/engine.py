"""Choquet-outranking degrees, Choquet-flows and the three assignment rules.

For every alternative ``a_i`` the local set is ``R_i = (r_1, ..., r_{k+1}, a_i)``;
the alternative is always the last element.  Profile-versus-profile degrees do
not depend on the alternative and are computed once per problem.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .capacity import CapacityModel, choquet_shapley_form
from .errors import (
    DomainError,
    InconsistencyError,
    PreconditionError,
    ProfileValidityError,
    StructuralError,
    ValidationReport,
)
from .preference import (
    CriterionSpec,
    DecisionMatrix,
    ReferenceProfileSet,
    local_degrees,
    preference_degree,
    signs,
    validate_alternatives,
    validate_profiles,
)

RULES = ("positive", "negative", "net")
FORMS = ("mobius", "shapley")

# Flows closer than this are treated as equal by the assignment rules.
TIE_TOL = 1e-14
WEIGHT_SUM_TOL = 1e-9
DEGREE_TOL = 1e-12

DegreeFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SortOptions:
    validation: str = "strict"
    rules: tuple[str, ...] = RULES
    form: str = "shapley"

    def __post_init__(self):
        if self.validation not in ("weak", "strict", "strong"):
            raise StructuralError(f"unknown validation mode {self.validation!r}")
        rules = tuple(self.rules)
        for rule in rules:
            if rule not in RULES:
                raise StructuralError(f"unknown assignment rule {rule!r}")
        if not rules:
            raise StructuralError("at least one assignment rule is required")
        if self.form not in FORMS:
            raise StructuralError(f"unknown outranking form {self.form!r}")
        object.__setattr__(self, "rules", rules)


@dataclass(frozen=True, eq=False)
class SortingProblem:
    criteria: tuple[CriterionSpec, ...]
    alternatives: DecisionMatrix
    profiles: ReferenceProfileSet
    capacity: CapacityModel
    options: SortOptions = field(default_factory=SortOptions)

    def __post_init__(self):
        criteria = tuple(self.criteria)
        object.__setattr__(self, "criteria", criteria)
        names = [c.name for c in criteria]
        if len(set(names)) != len(names):
            raise StructuralError("criterion names must be unique")
        n = len(criteria)
        if self.profiles.n_criteria != n:
            raise StructuralError(f"profiles have {self.profiles.n_criteria} columns for {n} criteria")
        if len(self.alternatives) and self.alternatives.values.shape[1] != n:
            raise StructuralError(f"alternatives have {self.alternatives.values.shape[1]} columns for {n} criteria")
        if self.capacity.n != n:
            raise StructuralError(f"capacity is defined on {self.capacity.n} criteria, problem has {n}")

    @property
    def n(self) -> int:
        return len(self.criteria)

    @property
    def k(self) -> int:
        return self.profiles.k

    @property
    def categories(self) -> tuple[str, ...]:
        return self.profiles.labels

    def validate(self, mode: str | None = None) -> ValidationReport:
        mode = mode or self.options.validation
        report = self.capacity.validate()
        capacity_ok = report.ok
        # A broken capacity would make the degree-based profile checks meaningless.
        report.extend(
            validate_profiles(self.profiles, self.criteria, mode if capacity_ok else "weak", self.capacity)
        )
        report.extend(validate_alternatives(self.alternatives, self.profiles, self.criteria))
        return report

    def with_capacity(self, capacity: CapacityModel) -> "SortingProblem":
        return replace(self, capacity=capacity)

    def with_alternatives(self, names: Sequence[str], values) -> "SortingProblem":
        return replace(self, alternatives=DecisionMatrix(tuple(names), np.asarray(values, dtype=float).reshape(-1, self.n)))

    def with_profiles(self, values, labels=None, names=None) -> "SortingProblem":
        return replace(self, profiles=ReferenceProfileSet(values, labels, names))


@dataclass(frozen=True, eq=False)
class OutrankingMatrix:
    """``degrees[x, y] = CI_pi(x, y)`` over a local set."""

    degrees: np.ndarray
    local_set: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class FlowTable:
    """Positive, negative and net flows over a local set ``(r_1, ..., r_{k+1}, a_i)``."""

    local_set: tuple[str, ...]
    positive: np.ndarray
    negative: np.ndarray
    net: np.ndarray

    def of(self, rule: str) -> np.ndarray:
        if rule not in RULES:
            raise StructuralError(f"unknown assignment rule {rule!r}")
        return getattr(self, rule)

    def profile_flows(self, rule: str) -> np.ndarray:
        return self.of(rule)[:-1]

    def alternative_flow(self, rule: str) -> float:
        return float(self.of(rule)[-1])


@dataclass(frozen=True, eq=False)
class AssignmentResult:
    """Category indices (1 = best) of one alternative under each rule."""

    alternative: str
    categories: dict[str, int]
    flows: FlowTable
    degrees: OutrankingMatrix

    @property
    def positive(self) -> int | None:
        return self.categories.get("positive")

    @property
    def negative(self) -> int | None:
        return self.categories.get("negative")

    @property
    def net(self) -> int | None:
        return self.categories.get("net")


# ---------------------------------------------------------------------------
# Outranking degrees
# ---------------------------------------------------------------------------


def _check_degree_vector(pvec) -> np.ndarray:
    p = np.asarray(pvec, dtype=float)
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise DomainError("preference degrees must lie in [0, 1]")
    return p


def choquet_degree_fn(model: CapacityModel, form: str = "mobius", check: bool = True) -> DegreeFn:
    """Return ``P -> CI_pi`` for the given capacity, batched over leading axes."""
    if form not in FORMS:
        raise StructuralError(f"unknown outranking form {form!r}")
    if check:
        model.validate().raise_if_invalid("invalid capacity")
    if form == "shapley":
        interaction_model = model.shapley_interaction

        def shapley_degrees(p):
            return np.asarray(choquet_shapley_form(p, interaction_model, check=False))

        return shapley_degrees

    def mobius_degrees(p):
        return np.asarray(model.choquet(p))

    return mobius_degrees


def weighted_degree_fn(weights: Sequence[float]) -> DegreeFn:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise PreconditionError(f"weights must be positive and sum to 1, got {w.tolist()}")

    def weighted_degrees(p):
        return np.asarray(np.asarray(p, dtype=float) @ w)

    return weighted_degrees


def choquet_outranking_degree(pvec, model: CapacityModel, form: str = "mobius", check: bool = True):
    """Choquet integral of per-criterion preference degrees.

    ``form="mobius"`` sums singleton masses and pair masses on the minimum;
    ``form="shapley"`` uses Shapley importances and interaction indices.  The
    two agree to rounding.
    """
    p = _check_degree_vector(pvec)
    out = choquet_degree_fn(model, form, check)(p)
    return float(out) if np.ndim(out) == 0 else out


def weighted_outranking_degree(pvec, weights: Sequence[float]):
    """Classic FlowSort degree ``sum_j w_j P_j(x, y)``."""
    p = _check_degree_vector(pvec)
    out = weighted_degree_fn(weights)(p)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Flows and assignment
# ---------------------------------------------------------------------------


def compute_flows(degrees: OutrankingMatrix, check_profiles: bool = True) -> FlowTable:
    """Choquet-flows over a local set whose last element is the alternative."""
    d = np.asarray(degrees.degrees, dtype=float)
    size = d.shape[0]
    if d.shape != (size, size) or size < 3:
        raise StructuralError(f"local set needs at least two profiles and one alternative, got {d.shape}")
    off = d.copy()
    np.fill_diagonal(off, 0.0)
    positive = off.sum(axis=1) / (size - 1)
    negative = off.sum(axis=0) / (size - 1)
    table = FlowTable(tuple(degrees.local_set), positive, negative, positive - negative)
    if check_profiles:
        problems = profile_order_violations(table)
        if problems:
            raise ProfileValidityError(
                "profile flows are not strictly ordered; the limiting profiles do not separate the categories: "
                + "; ".join(problems)
            )
    return table


def profile_order_violations(flows: FlowTable) -> list[str]:
    """Breaches of the strict ordering of profile flows (empty when ordered)."""
    out = []
    names = flows.local_set[:-1]
    pos, neg, net = (flows.profile_flows(rule) for rule in RULES)
    for h in range(len(names) - 1):
        if not pos[h] > pos[h + 1]:
            out.append(f"phi+({names[h]}) = {pos[h]!r} is not above phi+({names[h + 1]}) = {pos[h + 1]!r}")
        if not neg[h] < neg[h + 1]:
            out.append(f"phi-({names[h]}) = {neg[h]!r} is not below phi-({names[h + 1]}) = {neg[h + 1]!r}")
        if not net[h] > net[h + 1]:
            out.append(f"phi({names[h]}) = {net[h]!r} is not above phi({names[h + 1]}) = {net[h + 1]!r}")
    return out


def _cmp(x: float, y: float, tol: float) -> int:
    if x > y + tol:
        return 1
    if x < y - tol:
        return -1
    return 0


def assign(flows: FlowTable, rule: str, tol: float = TIE_TOL) -> int:
    """Category index (1 = best) of the alternative under one rule.

    Positive and net rules use ``phi(r_h) >= phi(a) > phi(r_{h+1})``; the
    negative rule uses ``phi-(r_h) < phi-(a) <= phi-(r_{h+1})``.  The outer
    intervals are closed so an alternative tying the best or worst profile
    still receives exactly one category.
    """
    prof = flows.profile_flows(rule)
    a = flows.alternative_flow(rule)
    k = prof.size - 1
    if rule == "negative":
        if _cmp(a, prof[0], tol) < 0 or _cmp(a, prof[k], tol) > 0:
            raise InconsistencyError(
                f"negative flow {a!r} lies outside the profile band [{prof[0]!r}, {prof[k]!r}]"
            )
        for h in range(k):
            if _cmp(prof[h], a, tol) < 0 and _cmp(a, prof[h + 1], tol) <= 0:
                return h + 1
        return 1
    if _cmp(a, prof[0], tol) > 0 or _cmp(a, prof[k], tol) < 0:
        raise InconsistencyError(f"{rule} flow {a!r} lies outside the profile band [{prof[k]!r}, {prof[0]!r}]")
    for h in range(k):
        if _cmp(prof[h], a, tol) >= 0 and _cmp(a, prof[h + 1], tol) > 0:
            return h + 1
    return k


def _assign_or_zero(flows: FlowTable, rule: str, tol: float) -> int:
    try:
        return assign(flows, rule, tol)
    except InconsistencyError:
        return 0


# ---------------------------------------------------------------------------
# Whole-problem sorting
# ---------------------------------------------------------------------------


class _LocalSetBuilder:
    """Outranking matrices for the local sets ``R_i`` of one problem.

    The ``(k+1) x (k+1)`` profile block does not depend on the alternative and
    is computed once; alternatives are then handled as a batch.
    """

    def __init__(self, problem: SortingProblem, degree_fn: DegreeFn):
        self.degree_fn = degree_fn
        self.criteria = problem.criteria
        self.signs = signs(problem.criteria)
        self.profiles = problem.profiles.values
        self.profile_block = np.asarray(degree_fn(local_degrees(self.profiles, self.criteria)), dtype=float)
        np.fill_diagonal(self.profile_block, 0.0)
        self.profile_names = problem.profiles.names

    def _degrees(self, diff: np.ndarray) -> np.ndarray:
        out = np.empty_like(diff)
        for j, c in enumerate(self.criteria):
            out[..., j] = preference_degree(c, diff[..., j])
        return out

    def matrices(self, values: np.ndarray) -> np.ndarray:
        """``(m, k+2, k+2)`` outranking degrees, one local set per row of ``values``."""
        values = np.asarray(values, dtype=float).reshape(-1, len(self.criteria))
        size = self.profiles.shape[0] + 1
        d = np.zeros((values.shape[0], size, size))
        d[:, :-1, :-1] = self.profile_block
        forward = (values[:, None, :] - self.profiles[None, :, :]) * self.signs
        d[:, -1, :-1] = self.degree_fn(self._degrees(forward))
        d[:, :-1, -1] = self.degree_fn(self._degrees(-forward))
        return d

    def sort(
        self, values, names: Sequence[str], rules: tuple[str, ...], tol: float, strict: bool = True
    ) -> list[AssignmentResult]:
        names = tuple(names)
        if not names:
            return []
        d = self.matrices(values)
        size = d.shape[1]
        positive = d.sum(axis=2) / (size - 1)
        negative = d.sum(axis=1) / (size - 1)
        net = positive - negative
        out = []
        for i, name in enumerate(names):
            local = self.profile_names + (name,)
            flows = FlowTable(local, positive[i], negative[i], net[i])
            if strict:
                problems = profile_order_violations(flows)
                if problems:
                    raise ProfileValidityError(
                        f"profile flows in the local set of {name} are not strictly ordered: " + "; ".join(problems)
                    )
                categories = {rule: assign(flows, rule, tol) for rule in rules}
            else:
                categories = {rule: _assign_or_zero(flows, rule, tol) for rule in rules}
            out.append(AssignmentResult(name, categories, flows, OutrankingMatrix(d[i], local)))
        return out


def sort_alternative(
    problem: SortingProblem,
    values,
    name: str = "a",
    rules: Sequence[str] | None = None,
    degree_fn: DegreeFn | None = None,
    tol: float = TIE_TOL,
) -> AssignmentResult:
    """Sort one evaluation vector against the problem's profiles."""
    builder = _LocalSetBuilder(problem, degree_fn or choquet_degree_fn(problem.capacity, problem.options.form))
    return builder.sort(np.asarray(values, dtype=float), (name,), tuple(rules or problem.options.rules), tol)[0]


def sort_all(
    problem: SortingProblem,
    rules: Sequence[str] | None = None,
    *,
    form: str | None = None,
    degree_fn: DegreeFn | None = None,
    validate: bool = True,
    max_workers: int | None = None,
    tol: float = TIE_TOL,
    strict: bool = True,
) -> list[AssignmentResult]:
    """Sort every alternative (pairwise degrees, outranking, flows, assignment).

    Alternatives are independent of each other, so ``max_workers > 1`` splits
    them into chunks evaluated on a thread pool; results keep the input order.
    ``degree_fn`` replaces the Choquet aggregation, e.g. with
    :func:`weighted_degree_fn` for classic FlowSort.  With ``strict=False``
    unordered profile flows are not raised and a flow outside the profile
    band yields category 0; the verification suite uses this to keep going
    past a violation and record it.
    """
    rules = tuple(rules or problem.options.rules)
    SortOptions(rules=rules)
    if validate:
        problem.validate().raise_if_invalid("sorting problem is invalid")
    if degree_fn is None:
        degree_fn = choquet_degree_fn(problem.capacity, form or problem.options.form, check=not validate)
    builder = _LocalSetBuilder(problem, degree_fn)
    names = problem.alternatives.names
    values = problem.alternatives.values
    if not max_workers or max_workers < 2 or len(names) < 2:
        return builder.sort(values, names, rules, tol, strict)
    bounds = np.linspace(0, len(names), min(max_workers, len(names)) + 1).astype(int)
    chunks = [(names[a:b], values[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        parts = pool.map(lambda chunk: builder.sort(chunk[1], chunk[0], rules, tol, strict), chunks)
        return [result for part in parts for result in part]


def classic_flowsort(problem: SortingProblem, weights: Sequence[float], rules=None, **kwargs) -> list[AssignmentResult]:
    """FlowSort with a weighted-sum outranking degree."""
    return sort_all(problem, rules, degree_fn=weighted_degree_fn(weights), **kwargs)
