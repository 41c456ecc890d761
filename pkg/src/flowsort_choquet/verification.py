"""Independent oracles, random instance generators and executable property checks.

Every randomized check is driven by an explicit seed so a reported
counterexample can be regenerated exactly from ``(seed, config)``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np

from .capacity import (
    CapacityLattice,
    CapacityModel,
    ShapleyInteractionModel,
    choquet_lattice,
    choquet_mobius,
    choquet_shapley_form,
    choquet_two_additive,
    mobius_to_lattice,
    shapley_interaction_to_mobius,
    validate_two_additive,
)
from .engine import (
    RULES,
    TIE_TOL,
    AssignmentResult,
    FlowTable,
    SortingProblem,
    SortOptions,
    choquet_degree_fn,
    compute_flows,
    OutrankingMatrix,
    profile_order_violations,
    sort_all,
)
from .errors import GenerationError, PreconditionError, StructuralError
from .preference import (
    CriterionSpec,
    DecisionMatrix,
    PreferenceType,
    ReferenceProfileSet,
    local_degrees,
    preference_degree,
    signed_difference,
    signs,
    validate_profiles,
)

ORACLE_TOL = 1e-9
CONDITION_TOL = 1e-12
# Side conditions must hold by at least this margin before invariance is asserted.
SIDE_MARGIN = 1e-12

ALL_PROPOSITIONS = frozenset(range(2, 14))
STRONG_PROPOSITIONS = frozenset({5, 6, 8, 9, 12})

# Index intervals (relative to the original category h) after removing a
# profile (5) or inserting one (6), with categories renumbered afterwards.
# ``PRINTED`` is the statement as published; ``EXPECTED`` is what the flow
# arithmetic supports and what the checks assert.
STABILITY1_PRINTED = {
    (5, "above"): (-1, 0),
    (5, "below"): (0, 1),
    (6, "above"): (0, 1),
    (6, "below"): (-1, 0),
}
STABILITY1_EXPECTED = {
    (5, "above"): (-1, 0),
    (5, "below"): (-1, 0),
    (6, "above"): (0, 1),
    (6, "below"): (0, 1),
}


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def oracle_choquet(values: Sequence[float], cap: CapacityLattice) -> float:
    """Choquet integral as a sum over level sets.

    ``sum_t (t - t_prev) * mu({j : g_j >= t})`` over the distinct positive
    values ``t``.  Written without sorting indices so it shares no code path
    with the library forms.
    """
    g = [float(v) for v in values]
    if len(g) != cap.n:
        raise StructuralError(f"expected {cap.n} values, got {len(g)}")
    total = 0.0
    previous = 0.0
    for t in sorted(set(v for v in g if v > 0)):
        mask = 0
        for j, v in enumerate(g):
            if v >= t:
                mask |= 1 << j
        total += (t - previous) * float(cap.values[mask])
        previous = t
    return total


def matching_categories(flows: FlowTable, rule: str, tol: float = TIE_TOL) -> list[int]:
    """Every category whose flow interval contains the alternative.

    Scans the intervals directly; the assignment rules must find exactly one.
    """
    prof = flows.profile_flows(rule)
    a = flows.alternative_flow(rule)
    k = prof.size - 1
    found = []
    for h in range(k):
        upper, lower = prof[h], prof[h + 1]
        if rule == "negative":
            # phi-(r_h) < phi-(a) <= phi-(r_{h+1}); closed at the best profile.
            inside = (a > upper + tol or (h == 0 and abs(a - upper) <= tol)) and a <= lower + tol
        else:
            # phi(r_h) >= phi(a) > phi(r_{h+1}); closed at the worst profile.
            inside = a <= upper + tol and (a > lower + tol or (h == k - 1 and abs(a - lower) <= tol))
        if inside:
            found.append(h + 1)
    return found


def classic_flowsort_oracle(problem: SortingProblem, weights: Sequence[float], tol: float = TIE_TOL) -> list[dict]:
    """Plain-loop FlowSort with weighted-sum outranking degrees.

    Returns, per alternative, the outranking matrix, the three flow vectors
    and the categories under every rule.
    """
    w = [float(x) for x in weights]
    if len(w) != problem.n:
        raise StructuralError(f"{len(w)} weights for {problem.n} criteria")
    criteria = problem.criteria
    out = []
    for name, a in zip(problem.alternatives.names, problem.alternatives.values):
        points = [list(map(float, r)) for r in problem.profiles.values] + [list(map(float, a))]
        size = len(points)
        pi = np.zeros((size, size))
        for x in range(size):
            for y in range(size):
                if x == y:
                    continue
                pi[x, y] = math.fsum(
                    w[j] * float(preference_degree(c, signed_difference(c, points[x][j], points[y][j])))
                    for j, c in enumerate(criteria)
                )
        plus = np.array([math.fsum(pi[x, y] for y in range(size) if y != x) / (size - 1) for x in range(size)])
        minus = np.array([math.fsum(pi[y, x] for y in range(size) if y != x) / (size - 1) for x in range(size)])
        flows = FlowTable(problem.profiles.names + (name,), plus, minus, plus - minus)
        categories = {}
        for rule in RULES:
            hits = matching_categories(flows, rule, tol)
            categories[rule] = hits[0] if len(hits) == 1 else None
        out.append({"alternative": name, "degrees": pi, "flows": flows, "categories": categories})
    return out


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


INTERACTION_SIGNS = ("any", "nonnegative", "nonpositive")


def gen_two_additive(
    n: int, seed: int, density: float = 0.5, magnitude: float = 0.5, sign: str = "any"
) -> ShapleyInteractionModel:
    """Random valid 2-additive model.

    Shapley values are a normalised positive draw; each pair gets an
    interaction with probability ``density``, uniform in
    ``[-magnitude, magnitude]`` (or its nonnegative/nonpositive half when
    ``sign`` asks for it).  All interactions are then scaled by one common
    factor until every monotonicity slack is nonnegative.
    """
    if n < 2:
        raise GenerationError("interaction models need at least two criteria")
    if not 0.0 <= density <= 1.0:
        raise GenerationError(f"density must lie in [0, 1], got {density}")
    if not 0.0 <= magnitude <= 1.0:
        raise GenerationError(f"magnitude must lie in [0, 1], got {magnitude}")
    if sign not in INTERACTION_SIGNS:
        raise GenerationError(f"sign must be one of {', '.join(INTERACTION_SIGNS)}, got {sign!r}")
    rng = np.random.default_rng(seed)
    raw = rng.gamma(1.0, size=n) + 1e-3
    shapley = raw / raw.sum()
    pairs = {}
    for j in range(n):
        for s in range(j + 1, n):
            if rng.random() < density:
                value = float(rng.uniform(-magnitude, magnitude))
                if sign == "nonnegative":
                    value = abs(value)
                elif sign == "nonpositive":
                    value = -abs(value)
                if value != 0.0:
                    pairs[(j, s)] = value
    half = np.zeros(n)
    for (j, s), value in pairs.items():
        half[j] += abs(value) / 2
        half[s] += abs(value) / 2
    with np.errstate(divide="ignore", over="ignore"):
        ratios = np.where(half > 0, shapley / np.where(half > 0, half, 1.0), np.inf)
    factor = float(ratios.min())
    if factor < 1.0:
        pairs = {key: value * factor for key, value in pairs.items()}
    model = ShapleyInteractionModel(shapley, pairs)
    validate_two_additive(model).raise_if_invalid("generated model is invalid", GenerationError)
    return model


@dataclass(frozen=True)
class InstanceGenConfig:
    """Shape and randomness of one generated sorting problem.

    ``gap_factor`` scales the distance between consecutive profiles on each
    criterion relative to the threshold the validation mode needs to clear.
    """

    n_criteria: int = 4
    n_categories: int = 3
    n_alternatives: int = 10
    seed: int = 0
    pf_types: tuple[str, ...] = tuple(t.value for t in PreferenceType)
    mode: str = "strong"
    density: float = 0.5
    magnitude: float = 0.5
    gap_factor: tuple[float, float] = (2.05, 4.0)
    tie_probability: float = 0.1
    form: str = "shapley"
    interaction_sign: str = "any"

    def __post_init__(self):
        object.__setattr__(self, "pf_types", tuple(PreferenceType(t).value for t in self.pf_types))
        object.__setattr__(self, "gap_factor", tuple(float(x) for x in self.gap_factor))


def random_config(seed: int, **overrides) -> InstanceGenConfig:
    """Config with sizes drawn from ``seed``: n in 2..6, k in 1..5, m in 1..20."""
    rng = np.random.default_rng([seed, 0x5EED])
    cfg = InstanceGenConfig(
        n_criteria=int(rng.integers(2, 7)),
        n_categories=int(rng.integers(1, 6)),
        n_alternatives=int(rng.integers(1, 21)),
        seed=seed,
        density=float(rng.uniform(0, 1)),
        magnitude=float(rng.uniform(0, 1)),
    )
    return replace(cfg, **overrides)


def _thresholds(t: PreferenceType, scale: float, rng) -> dict[str, float]:
    if t is PreferenceType.U_SHAPE:
        return {"q": scale * rng.uniform(0.05, 0.5)}
    if t is PreferenceType.V_SHAPE:
        return {"p": scale * rng.uniform(0.1, 1.0)}
    if t in (PreferenceType.LEVEL, PreferenceType.LINEAR):
        q = scale * rng.uniform(0.0, 0.4)
        return {"q": q, "p": q + scale * rng.uniform(0.1, 0.8)}
    if t is PreferenceType.GAUSSIAN:
        return {"s": scale * rng.uniform(0.1, 1.0)}
    return {}


def full_preference_threshold(c: CriterionSpec) -> float:
    """Smallest difference above which the degree is exactly 1 (inf if never)."""
    t = c.pf_type
    if t is PreferenceType.USUAL:
        return 0.0
    if t is PreferenceType.U_SHAPE:
        return c.q
    if t is PreferenceType.GAUSSIAN:
        return math.inf
    return c.p


def any_preference_threshold(c: CriterionSpec) -> float:
    """Largest difference that still yields degree 0."""
    if c.pf_type in (PreferenceType.U_SHAPE, PreferenceType.LEVEL, PreferenceType.LINEAR):
        return c.q
    return 0.0


def gen_problem(cfg: InstanceGenConfig) -> SortingProblem:
    """Random problem that passes validation in ``cfg.mode``.

    Criteria get heterogeneous scales and random directions.  Profiles are
    separated by gaps clearing the full-preference threshold (strong), the
    zero-preference threshold (strict) or nothing (weak, zero gaps allowed).
    Alternatives are drawn inside the profile band, with some evaluations
    snapped onto profile values to exercise ties.
    """
    if cfg.mode not in ("weak", "strict", "strong"):
        raise GenerationError(f"unknown validation mode {cfg.mode!r}")
    if cfg.n_criteria < 1 or cfg.n_categories < 1 or cfg.n_alternatives < 0:
        raise GenerationError("need at least one criterion and one category")
    low, high = cfg.gap_factor
    if not 0 <= low <= high:
        raise GenerationError(f"invalid gap factor range {cfg.gap_factor}")
    if cfg.mode == "strong" and low <= 1.0:
        raise GenerationError("strong mode needs profile gaps wider than the preference thresholds (gap factor > 1)")
    if cfg.mode == "strict" and low <= 0.0:
        raise GenerationError("strict mode needs strictly positive profile gaps")
    types = [PreferenceType(t) for t in cfg.pf_types]
    if cfg.mode == "strong":
        types = [t for t in types if t is not PreferenceType.GAUSSIAN]
    if not types:
        raise GenerationError(f"no preference type in {cfg.pf_types} can satisfy {cfg.mode} mode")

    rng = np.random.default_rng(cfg.seed)
    n, k, m = cfg.n_criteria, cfg.n_categories, cfg.n_alternatives
    criteria = []
    scales = 10.0 ** rng.uniform(-1, 4, size=n)
    for j in range(n):
        t = types[int(rng.integers(len(types)))]
        direction = "maximize" if rng.random() < 0.5 else "minimize"
        criteria.append(CriterionSpec(f"g{j + 1}", direction, t, **_thresholds(t, scales[j], rng)))
    sign = signs(criteria)

    oriented = np.empty((k + 1, n))
    oriented[0] = scales * rng.uniform(-10, 10, size=n)
    for j, c in enumerate(criteria):
        unit = 0.1 * scales[j]
        for h in range(1, k + 1):
            f = rng.uniform(low, high)
            if cfg.mode == "strong":
                gap = (full_preference_threshold(c) + unit) * f
            elif cfg.mode == "strict":
                gap = (any_preference_threshold(c) + unit) * f
            else:
                gap = 0.0 if rng.random() < cfg.tie_probability else unit * f
            oriented[h, j] = oriented[h - 1, j] - gap
    profiles = oriented * sign

    best, worst = oriented[0], oriented[-1]
    alts = worst + rng.uniform(0, 1, size=(m, n)) * (best - worst)
    snap = rng.random((m, n)) < cfg.tie_probability
    picks = rng.integers(0, k + 1, size=(m, n))
    alts = np.where(snap, oriented[picks, np.arange(n)], alts)
    alternatives = DecisionMatrix(tuple(f"a{i + 1}" for i in range(m)), (alts * sign).reshape(m, n))

    if n == 1:
        capacity = CapacityModel.additive([1.0])
    else:
        capacity = CapacityModel(gen_two_additive(n, int(rng.integers(2**63)), cfg.density, cfg.magnitude, cfg.interaction_sign))
    problem = SortingProblem(
        tuple(criteria),
        alternatives,
        ReferenceProfileSet(profiles),
        capacity,
        SortOptions(validation=cfg.mode, form=cfg.form),
    )
    problem.validate().raise_if_invalid(f"generated problem (seed {cfg.seed}) is invalid", GenerationError)
    return problem


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class PropertyOutcome:
    passed: int = 0
    failed: int = 0
    skipped: int = 0

    @property
    def total(self) -> int:
        return self.passed + self.failed + self.skipped


@dataclass
class Counterexample:
    property: str
    message: str
    seed: int | None = None
    payload: dict[str, Any] = field(default_factory=dict)


@dataclass
class PropertyReport:
    """Pass/fail/skip counts per property with replayable counterexamples."""

    outcomes: dict[str, PropertyOutcome] = field(default_factory=dict)
    counterexamples: list[Counterexample] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    notes: Counter = field(default_factory=Counter)
    skip_examples: dict[str, list[str]] = field(default_factory=dict)
    max_counterexamples: int = 25  # per property

    def _keeps(self, name: str) -> bool:
        return sum(ce.property == name for ce in self.counterexamples) < self.max_counterexamples

    def _outcome(self, name: str) -> PropertyOutcome:
        return self.outcomes.setdefault(name, PropertyOutcome())

    def passed(self, name: str) -> None:
        self._outcome(name).passed += 1

    def skipped(self, name: str, reason: str = "") -> None:
        self._outcome(name).skipped += 1
        examples = self.skip_examples.setdefault(name, [])
        if reason and len(examples) < 3:
            examples.append(reason)

    def failed(self, name: str, message: str, payload: dict | None = None, seed: int | None = None) -> None:
        self._outcome(name).failed += 1
        if self._keeps(name):
            self.counterexamples.append(Counterexample(name, message, seed, payload or {}))

    def check(self, name: str, ok: bool, message: str = "", payload=None, seed=None) -> bool:
        if ok:
            self.passed(name)
        else:
            self.failed(name, message, payload() if callable(payload) else payload, seed)
        return ok

    @property
    def ok(self) -> bool:
        return all(o.failed == 0 for o in self.outcomes.values())

    def failures(self) -> dict[str, int]:
        return {name: o.failed for name, o in self.outcomes.items() if o.failed}

    def merge(self, other: "PropertyReport", seed: int | None = None) -> None:
        for name, o in other.outcomes.items():
            mine = self._outcome(name)
            mine.passed += o.passed
            mine.failed += o.failed
            mine.skipped += o.skipped
        for ce in other.counterexamples:
            if self._keeps(ce.property):
                self.counterexamples.append(replace(ce, seed=ce.seed if ce.seed is not None else seed))
        self.seeds.extend(other.seeds)
        if seed is not None and seed not in self.seeds:
            self.seeds.append(seed)
        self.notes.update(other.notes)
        for name, examples in other.skip_examples.items():
            mine = self.skip_examples.setdefault(name, [])
            mine.extend(examples[: max(0, 3 - len(mine))])

    def summary_lines(self) -> list[str]:
        lines = []
        for name in sorted(self.outcomes, key=_property_sort_key):
            o = self.outcomes[name]
            status = "FAIL" if o.failed else "ok"
            lines.append(f"{name:<24} {status:<4} passed={o.passed} failed={o.failed} skipped={o.skipped}")
        return lines

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "outcomes": {name: asdict(o) for name, o in sorted(self.outcomes.items(), key=lambda x: _property_sort_key(x[0]))},
            "counterexamples": [asdict(ce) for ce in self.counterexamples],
            "seeds": list(self.seeds),
            "notes": dict(sorted(self.notes.items())),
        }


def _property_sort_key(name: str):
    head, _, tail = name.partition(".")
    digits = "".join(ch for ch in head if ch.isdigit())
    return (head.rstrip("0123456789.B"), int(digits) if digits else 0, name)


def _payload(problem: SortingProblem, degrees=None, flows: FlowTable | None = None, **extra) -> dict:
    from .problem_io import problem_to_dict

    out = {"problem": problem_to_dict(problem)}
    if degrees is not None:
        out["degrees"] = np.asarray(degrees).tolist()
    if flows is not None:
        out["flows"] = {
            "local_set": list(flows.local_set),
            "positive": flows.positive.tolist(),
            "negative": flows.negative.tolist(),
            "net": flows.net.tolist(),
        }
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Conditions 3.B - 8.B and Proposition 1
# ---------------------------------------------------------------------------


def check_conditions(
    problem: SortingProblem, strong: bool | None = None, tol: float = CONDITION_TOL, seed: int | None = None
) -> PropertyReport:
    """Evaluate the outranking conditions on every local set of the problem.

    Degrees are recomputed from the full preference tensor of each ``R_i``
    (diagonal included) rather than taken from the engine's cached blocks.
    Condition 8.B is only asserted when ``strong`` (default: the problem's
    validation mode is ``strong``).
    """
    report = PropertyReport()
    if strong is None:
        strong = problem.options.validation == "strong"
    degree_fn = choquet_degree_fn(problem.capacity, problem.options.form, check=False)
    criteria = problem.criteria
    sign = signs(criteria)
    profiles = problem.profiles.values
    rows = profiles.shape[0]
    upper = np.triu(np.ones((rows, rows), dtype=bool), 1)

    for name, a in zip(problem.alternatives.names, problem.alternatives.values):
        points = np.vstack([profiles, a])
        size = points.shape[0]
        d = np.asarray(degree_fn(local_degrees(points, criteria)))

        def payload(extra=None, d=d, name=name):
            return _payload(problem, d, alternative=name, **(extra or {}))

        report.check(
            "condition3B",
            bool(d.min() >= -tol and d.max() <= 1 + tol),
            f"{name}: degree outside [0, 1] (min {float(d.min())!r}, max {float(d.max())!r})",
            payload, seed,
        )
        sums = d + d.T
        x, y = np.unravel_index(int(np.argmax(sums)), sums.shape)
        local = problem.profiles.names + (name,)
        report.check(
            "condition4B",
            bool(sums[x, y] <= 1 + tol),
            f"{name}: CI({local[x]},{local[y]}) + CI({local[y]},{local[x]}) = {float(sums[x, y])!r}",
            payload, seed,
        )
        report.check("condition5B", bool(np.all(np.diag(d) == 0.0)), f"{name}: nonzero diagonal {np.diag(d)}", payload, seed)

        diffs = ((points[:, None, :] - points[None, :, :]) * sign).reshape(size * size, -1)
        flat = d.reshape(-1)
        dominated = np.all(diffs[:, None, :] <= diffs[None, :, :], axis=2)
        bad = dominated & (flat[:, None] > flat[None, :] + tol)
        report.check(
            "condition6B",
            not bad.any(),
            f"{name}: {int(bad.sum())} quadruples with smaller differences but larger degree",
            payload, seed,
        )

        block = d[:rows, :rows]
        ok7 = bool(np.all(block[upper] > 0) and np.all(np.abs(block.T[upper]) <= tol))
        report.check("condition7B", ok7, f"{name}: profile degrees violate 7.B", payload, seed)
        if strong:
            ok8 = bool(np.all(np.abs(block[upper] - 1.0) <= tol))
            report.check("condition8B", ok8, f"{name}: profile degrees differ from 1", payload, seed)
        else:
            report.skipped("condition8B", "problem is not validated in strong mode")

        flows = compute_flows(OutrankingMatrix(d, problem.profiles.names + (name,)), check_profiles=False)
        problems = profile_order_violations(flows)
        report.check(
            "proposition1", not problems, f"{name}: " + "; ".join(problems),
            lambda: payload() | {"flows": _payload(problem, flows=flows)["flows"]}, seed,
        )
    return report


# ---------------------------------------------------------------------------
# Propositions 2 - 13
# ---------------------------------------------------------------------------


def satisfies_condition_8b(problem: SortingProblem) -> bool:
    return validate_profiles(problem.profiles, problem.criteria, "strong", problem.capacity).ok


def _with_alternatives(problem: SortingProblem, names, values) -> SortingProblem:
    values = np.asarray(values, dtype=float).reshape(-1, problem.n)
    return replace(problem, alternatives=DecisionMatrix(tuple(names), values))


def _with_profiles(problem: SortingProblem, values) -> SortingProblem:
    return replace(problem, profiles=ReferenceProfileSet(np.asarray(values, dtype=float)))


def _sort(problem: SortingProblem) -> list[AssignmentResult]:
    return sort_all(problem, RULES, validate=False, strict=False)


def _placed(*results: AssignmentResult) -> bool:
    """Every rule found a category (0 marks a flow outside the profile band)."""
    return all(all(c > 0 for c in r.categories.values()) for r in results)


_UNPLACED = "flow outside the profile band (counted under prop2.uniqueness)"


def _homogeneous_clone(problem, a, rng) -> np.ndarray:
    """Perturb ``a`` on each criterion where that leaves every degree against
    every profile (both directions) unchanged."""
    out = np.array(a, dtype=float)
    profiles = problem.profiles.values
    for j, c in enumerate(problem.criteria):
        column = profiles[:, j]
        distance = np.min(np.abs(column - out[j]))
        if distance == 0:
            continue
        reference = preference_degree(c, np.concatenate([(out[j] - column), (column - out[j])]) * c.direction.sign)
        for size in (0.3, 0.03, 0.003):
            candidate = out[j] + rng.choice((-1.0, 1.0)) * size * distance
            trial = preference_degree(c, np.concatenate([(candidate - column), (column - candidate)]) * c.direction.sign)
            if np.array_equal(trial, reference):
                out[j] = candidate
                break
    return out


def _dominance_variant(oriented_a, oriented_bound, rng) -> np.ndarray:
    """Move ``a`` toward a band edge on a random subset of criteria."""
    move = rng.random(oriented_a.shape) < 0.7
    step = rng.uniform(0, 1, size=oriented_a.shape)
    step = np.where(rng.random(oriented_a.shape) < 0.15, 1.0, step)
    moved = np.where(step == 1.0, oriented_bound, oriented_a + step * (oriented_bound - oriented_a))
    # Rounding must not push the point past the band edge.
    moved = np.clip(moved, np.minimum(oriented_a, oriented_bound), np.maximum(oriented_a, oriented_bound))
    return np.where(move, moved, oriented_a)


def _conformity_probes(problem: SortingProblem, rng, per_category: int = 2):
    """Points strictly inside each category, farther than the zero-preference
    threshold from both bounding profiles on every criterion."""
    sign = signs(problem.criteria)
    oriented = problem.profiles.values * sign
    margins = np.array([any_preference_threshold(c) for c in problem.criteria])
    probes = []
    for h in range(problem.k):
        upper, lower = oriented[h], oriented[h + 1]
        lo = lower + margins
        hi = upper - margins
        width = hi - lo
        if np.any(width <= 0):
            probes.append((h + 1, None))
            continue
        pad = 0.01 * width
        points = [lo + width / 2]
        points += [lo + pad + rng.uniform(0, 1, size=width.shape) * (width - 2 * pad) for _ in range(per_category - 1)]
        for point in points:
            probes.append((h + 1, point * sign))
    return probes


def _midpoint_profiles(problem: SortingProblem) -> list[tuple[int, np.ndarray]]:
    """For every category ``g`` (1-based), the profile set with the midpoint of
    ``r_g`` and ``r_{g+1}`` inserted at position ``g+1``."""
    values = problem.profiles.values
    out = []
    for g in range(problem.k):
        middle = (values[g] + values[g + 1]) / 2
        out.append((g + 1, np.insert(values, g + 1, middle, axis=0)))
    return out


PROPOSITION_NAMES = {
    2: "prop2.uniqueness",
    3: "prop3.independency",
    4: "prop4.neutrality",
    5: "prop5.stability1_remove",
    6: "prop6.stability1_insert",
    7: "prop7.homogeneity",
    8: "prop8.stability2_split",
    9: "prop9.stability2_fusion",
    10: "prop10.monotonicity",
    11: "prop11.conformity",
    12: "prop12.relationship",
    13: "prop13.coherence",
}


def check_propositions(
    problem: SortingProblem, which: Iterable[int] | None = None, seed: int = 0
) -> PropertyReport:
    """Exercise the selected propositions (2 to 13) on one problem.

    Stability propositions mutate the profile set and re-sort; monotonicity,
    homogeneity, neutrality and conformity inject extra alternatives.  All
    propositions stated for positive flows only are checked on positive flows.
    """
    which = ALL_PROPOSITIONS if which is None else frozenset(int(p) for p in which)
    unknown = which - ALL_PROPOSITIONS
    if unknown:
        raise StructuralError(f"unknown propositions {sorted(unknown)}; choose from 2..13")
    strong = satisfies_condition_8b(problem)
    if which & STRONG_PROPOSITIONS and not strong:
        raise PreconditionError(
            f"propositions {sorted(which & STRONG_PROPOSITIONS)} assume strongly preferred profiles "
            "(every better profile outranks every worse one with degree 1)"
        )
    report = PropertyReport()
    report.seeds.append(seed)
    rng = np.random.default_rng([seed, 0xC0FFEE])
    names = problem.alternatives.names
    values = problem.alternatives.values
    m = len(names)
    sign = signs(problem.criteria)
    oriented_profiles = problem.profiles.values * sign
    best, worst = oriented_profiles[0], oriented_profiles[-1]

    # One augmented batch holds every injected alternative.
    extra_names: list[str] = []
    extra_values: list[np.ndarray] = []
    tags: list[tuple] = []

    def inject(tag, value):
        extra_names.append(f"~{len(extra_names)}")
        extra_values.append(np.asarray(value, dtype=float))
        tags.append(tag)

    for i in range(m):
        if 4 in which:
            inject(("dup", i), values[i])
        if 7 in which:
            inject(("clone", i), _homogeneous_clone(problem, values[i], rng))
        if 10 in which:
            o = values[i] * sign
            inject(("worse", i), _dominance_variant(o, worst, rng) * sign)
            inject(("better", i), _dominance_variant(o, best, rng) * sign)
    if 11 in which:
        for h, point in _conformity_probes(problem, rng):
            if point is None:
                report.skipped("prop11.conformity", f"category K{h} is too narrow for a probe")
            else:
                inject(("probe", h), point)

    all_names = tuple(names) + tuple(extra_names)
    all_values = np.vstack([values] + extra_values) if extra_values else values
    results = _sort(_with_alternatives(problem, all_names, all_values))
    base = results[:m]
    extra = results[m:]

    def payload_for(result: AssignmentResult, **more):
        return lambda: _payload(problem, result.degrees.degrees, result.flows, alternative=result.alternative, **more)

    if 2 in which:
        for r in results:
            for rule in RULES:
                hits = matching_categories(r.flows, rule)
                report.check(
                    "prop2.uniqueness",
                    hits == [r.categories[rule]],
                    f"{r.alternative}: rule {rule} intervals {hits}, assigned {r.categories[rule]}",
                    payload_for(r), seed,
                )

    if 3 in which and m:
        # Sorting a random subset must reproduce the same flows and categories.
        subset = np.flatnonzero(rng.random(m) < 0.5)
        if subset.size == 0:
            subset = np.array([0])
        alone = _sort(_with_alternatives(problem, [names[i] for i in subset], values[subset]))
        for idx, r in zip(subset, alone):
            full = base[idx]
            same = r.categories == full.categories and all(
                np.array_equal(r.flows.of(rule), full.flows.of(rule)) for rule in RULES
            )
            report.check("prop3.independency", same, f"{r.alternative}: result depends on the other alternatives", payload_for(r), seed)

    for tag, r in zip(tags, extra):
        kind, ref = tag
        involved = (r,) if kind == "probe" else (r, base[ref])
        if not _placed(*involved):
            prop = {"dup": 4, "clone": 7, "worse": 10, "better": 10, "probe": 11}[kind]
            report.skipped(PROPOSITION_NAMES[prop], _UNPLACED)
            continue
        if kind == "dup":
            report.check(
                "prop4.neutrality",
                r.categories == base[ref].categories,
                f"relabelled copy of {names[ref]} assigned {r.categories}, original {base[ref].categories}",
                payload_for(r, original=names[ref]), seed,
            )
        elif kind == "clone":
            a, b = base[ref].degrees.degrees, r.degrees.degrees
            if not (np.array_equal(a[-1, :-1], b[-1, :-1]) and np.array_equal(a[:-1, -1], b[:-1, -1])):
                report.skipped("prop7.homogeneity", "clone changed an outranking degree")
                continue
            report.check(
                "prop7.homogeneity",
                r.categories == base[ref].categories,
                f"degree-identical clone of {names[ref]} assigned {r.categories}, original {base[ref].categories}",
                payload_for(r, original=names[ref]), seed,
            )
        elif kind in ("worse", "better"):
            upper, lower = (base[ref], r) if kind == "worse" else (r, base[ref])
            ok = all(upper.categories[rule] <= lower.categories[rule] for rule in RULES)
            report.check(
                "prop10.monotonicity", ok,
                f"dominating {upper.alternative} {upper.categories} vs dominated {lower.alternative} {lower.categories}",
                payload_for(r, original=names[ref]), seed,
            )
        elif kind == "probe":
            ok = all(r.categories[rule] == ref for rule in RULES)
            report.check(
                "prop11.conformity", ok,
                f"probe inside K{ref} assigned {r.categories}",
                payload_for(r, expected=ref), seed,
            )

    if 10 in which:
        # Dominance pairs already present among the alternatives.
        oriented = values * sign
        for i in range(m):
            for t in range(m):
                if i != t and np.all(oriented[i] >= oriented[t]):
                    if not _placed(base[i], base[t]):
                        report.skipped("prop10.monotonicity", _UNPLACED)
                        continue
                    ok = all(base[i].categories[rule] <= base[t].categories[rule] for rule in RULES)
                    report.check(
                        "prop10.monotonicity", ok,
                        f"{names[i]} dominates {names[t]} but {base[i].categories} vs {base[t].categories}",
                        payload_for(base[i], dominated=names[t]), seed,
                    )

    for r in base:
        c = r.categories
        if not _placed(r):
            for prop in sorted(which & {12, 13}):
                report.skipped(PROPOSITION_NAMES[prop], _UNPLACED)
            continue
        if 12 in which:
            report.check("prop12.relationship", c["negative"] <= c["positive"], f"{r.alternative}: {c}", payload_for(r), seed)
        if 13 in which:
            ok = c["negative"] <= c["net"] <= c["positive"]
            report.check("prop13.coherence", ok, f"{r.alternative}: {c}", payload_for(r), seed)

    if which & {5, 9}:
        _check_removals(problem, base, which, report, seed)
    if which & {6, 8}:
        _check_insertions(problem, base, which, report, seed)
    return report


def _interval_check(report, prop, side, h, new, result, problem, seed, mutation):
    lo, hi = STABILITY1_EXPECTED[(prop, side)]
    plo, phi = STABILITY1_PRINTED[(prop, side)]
    name = "prop5.stability1_remove" if prop == 5 else "prop6.stability1_insert"
    if not h + plo <= new <= h + phi:
        report.notes[f"{name}.outside_printed_interval"] += 1
    report.check(
        name,
        h + lo <= new <= h + hi,
        f"{result.alternative}: K{h} became K'{new} after {mutation}; expected {h + lo}..{h + hi}",
        lambda: _payload(problem, result.degrees.degrees, result.flows, alternative=result.alternative, mutation=mutation),
        seed,
    )


def _side_conditions(phi_a, phi_upper, phi_lower, ci_a, ci_upper, ci_lower, k, fusion: bool):
    """Flow-gap conditions of weak stability-2 for one binding ``r_l``.

    Returns the two margins (left side minus right side).
    """
    if fusion:
        first = (phi_upper - phi_a) - (ci_upper - ci_a) / (k + 1)
        second = (phi_a - phi_lower) - (ci_a - ci_lower) / (k + 1)
    else:
        first = (phi_a - phi_lower) - (ci_lower - ci_a) / (k + 1)
        second = (phi_upper - phi_a) - (ci_a - ci_upper) / (k + 1)
    return first, second


def _stability2(report, name, base_result, h, k, bindings, expected, new, problem, seed, mutation, fusion):
    """Assert invariance when the side conditions hold for every binding."""
    pos = base_result.flows.positive
    phi_a, phi_upper, phi_lower = pos[-1], pos[h - 1], pos[h]
    for label, ci_a, ci_upper, ci_lower in bindings:
        first, second = _side_conditions(phi_a, phi_upper, phi_lower, ci_a, ci_upper, ci_lower, k, fusion)
        if not (first > SIDE_MARGIN and second > SIDE_MARGIN):
            report.skipped(name, f"{base_result.alternative} in K{h}, {mutation}: side condition fails for r_l = {label}")
            return
    report.check(
        name,
        new == expected,
        f"{base_result.alternative}: K{h} became K'{new} after {mutation}; side conditions promised K'{expected}",
        lambda: _payload(problem, base_result.degrees.degrees, base_result.flows, alternative=base_result.alternative, mutation=mutation),
        seed,
    )


def _check_removals(problem, base, which, report, seed):
    k = problem.k
    if k < 2:
        for prop in sorted(which & {5, 9}):
            report.skipped("prop5.stability1_remove" if prop == 5 else "prop9.stability2_fusion", "no interior profile")
        return
    values = problem.profiles.values
    rows = k + 1
    for s in range(1, k):  # interior profiles only, 0-based
        reduced = _with_profiles(problem, np.delete(values, s, axis=0))
        after = _sort(reduced)
        mutation = f"removing r{s + 1}"
        for r, new in zip(base, after):
            h = r.categories["positive"]
            h_new = new.categories["positive"]
            if not (h and h_new):
                for prop in sorted(which & {5, 9}):
                    report.skipped(PROPOSITION_NAMES[prop], _UNPLACED)
                continue
            s1 = s + 1
            if 5 in which:
                if s1 == h:
                    pass
                else:
                    _interval_check(report, 5, "above" if s1 < h else "below", h, h_new, new, problem, seed, mutation)
            if 9 in which:
                if s1 in (h, h + 1):
                    continue
                d = r.degrees.degrees
                bindings = [
                    (f"r{l + 1}", d[-1, l], d[h - 1, l], d[h, l]) for l in range(rows)
                ]
                expected = h - 1 if s1 < h else h
                _stability2(report, "prop9.stability2_fusion", r, h, k, bindings, expected, h_new, problem, seed, mutation, True)


def _check_insertions(problem, base, which, report, seed):
    k = problem.k
    for g, profiles in _midpoint_profiles(problem):
        grown = _with_profiles(problem, profiles)
        mutation = f"inserting a profile between r{g} and r{g + 1}"
        if not satisfies_condition_8b(grown):
            for prop in sorted(which & {6, 8}):
                report.skipped(
                    "prop6.stability1_insert" if prop == 6 else "prop8.stability2_split",
                    f"{mutation} breaks strong preference between profiles",
                )
            continue
        after = _sort(grown)
        for r, new in zip(base, after):
            h = r.categories["positive"]
            h_new = new.categories["positive"]
            if not (h and h_new):
                for prop in sorted(which & {6, 8}):
                    report.skipped(PROPOSITION_NAMES[prop], _UNPLACED)
                continue
            if 6 in which:
                _interval_check(report, 6, "above" if g < h else "below", h, h_new, new, problem, seed, mutation)
            if 8 in which:
                if g == h:
                    continue
                d_new = new.degrees.degrees
                # Index shift of r_h and r_{h+1} inside the grown local set.
                up = h - 1 + (1 if g < h else 0)
                low = up + 1
                bindings = [
                    (f"r'{l + 1}", d_new[-1, l], d_new[up, l], d_new[low, l]) for l in range(k + 2)
                ]
                expected = h + 1 if g < h else h
                _stability2(report, "prop8.stability2_split", r, h, k, bindings, expected, h_new, problem, seed, mutation, False)


# ---------------------------------------------------------------------------
# Pairwise assignment consistency
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairwiseConsistency:
    first: str
    second: str
    categories: dict[str, int]
    degree_first_over_second: float
    degree_second_over_first: float
    consistent: bool

    @property
    def preferred(self) -> str | None:
        if self.degree_first_over_second > self.degree_second_over_first:
            return self.first
        if self.degree_second_over_first > self.degree_first_over_second:
            return self.second
        return None


def check_pairwise_consistency(problem: SortingProblem, first: str, second: str, rule: str = "net") -> PairwiseConsistency:
    """Does the better-assigned alternative also outrank the other one?

    Outranking methods do not guarantee this; the result documents whether the
    pair behaves transitively.
    """
    results = {r.alternative: r for r in sort_all(problem, (rule,))}
    for name in (first, second):
        if name not in results:
            raise StructuralError(f"unknown alternative {name!r}")
    pts = np.vstack([problem.alternatives.row(first), problem.alternatives.row(second)])
    d = np.asarray(choquet_degree_fn(problem.capacity, problem.options.form)(local_degrees(pts, problem.criteria)))
    forward, backward = float(d[0, 1]), float(d[1, 0])
    ca, cb = results[first].categories[rule], results[second].categories[rule]
    if ca == cb:
        consistent = True
    elif ca < cb:
        consistent = forward > backward
    else:
        consistent = backward > forward
    return PairwiseConsistency(first, second, {first: ca, second: cb}, forward, backward, consistent)


def condorcet_problem() -> SortingProblem:
    """Two categories, three maximised criteria with equal weights.

    Only the middle profile is fixed by the illustration; the outer profiles
    (5, 5, 5) and (0, 0, 0) just bound the alternatives.
    """
    criteria = tuple(CriterionSpec(f"g{j}", "maximize", "usual") for j in (1, 2, 3))
    profiles = ReferenceProfileSet(np.array([[5.0, 5, 5], [1, 2, 3], [0, 0, 0]]))
    alternatives = DecisionMatrix(("a_i", "a_t"), np.array([[3.0, 3, 1], [4, 1, 2]]))
    capacity = CapacityModel.additive([1 / 3, 1 / 3, 1 / 3])
    return SortingProblem(criteria, alternatives, profiles, capacity, SortOptions(validation="strong"))


# ---------------------------------------------------------------------------
# Batch suites
# ---------------------------------------------------------------------------


@dataclass
class EquivalenceResult:
    pairs: int
    max_deviation: float
    worst: dict[str, Any]


def check_choquet_equivalence(n_pairs: int = 10_000, seed: int = 0, n_range: tuple[int, int] = (2, 6)) -> EquivalenceResult:
    """Largest spread between the four Choquet forms and the level-set oracle."""
    rng = np.random.default_rng(seed)
    worst_dev, worst = 0.0, {}
    for _ in range(n_pairs):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        model_seed = int(rng.integers(2**63))
        model = gen_two_additive(n, model_seed, float(rng.uniform()), float(rng.uniform()))
        values = rng.uniform(0, 1, size=n) * 10.0 ** rng.uniform(-1, 2)
        if rng.random() < 0.2:
            values[rng.integers(n)] = values[rng.integers(n)]
        if rng.random() < 0.1:
            values[rng.integers(n)] = 0.0
        m = shapley_interaction_to_mobius(model)
        lattice = mobius_to_lattice(m)
        scores = (
            choquet_lattice(values, lattice),
            choquet_mobius(values, m),
            choquet_two_additive(values, m),
            choquet_shapley_form(values, model),
            oracle_choquet(values, lattice),
        )
        dev = max(scores) - min(scores)
        if dev > worst_dev:
            worst_dev = dev
            worst = {"n": n, "model_seed": model_seed, "values": values.tolist(), "scores": list(scores)}
    return EquivalenceResult(n_pairs, worst_dev, worst)


def run_property_suite(
    n_instances: int = 1000, seed: int = 0, which: Iterable[int] | None = None, **overrides
) -> PropertyReport:
    """Generate ``n_instances`` problems from consecutive seeds and check them all."""
    report = PropertyReport()
    for offset in range(n_instances):
        instance_seed = seed + offset
        cfg = random_config(instance_seed, **overrides)
        problem = gen_problem(cfg)
        report.merge(check_conditions(problem, seed=instance_seed), seed=instance_seed)
        props = which
        if props is None:
            props = ALL_PROPOSITIONS if satisfies_condition_8b(problem) else ALL_PROPOSITIONS - STRONG_PROPOSITIONS
        report.merge(check_propositions(problem, props, seed=instance_seed), seed=instance_seed)
    return report


@dataclass
class ReductionResult:
    problems: int
    alternatives: int
    max_degree_deviation: float
    max_flow_deviation: float
    category_mismatches: int


def check_reduction(n_problems: int = 100, seed: int = 0) -> ReductionResult:
    """Zero-interaction FlowSort-Choquet against the plain weighted-sum oracle."""
    max_deg = max_flow = 0.0
    mismatches = alternatives = 0
    for offset in range(n_problems):
        cfg = random_config(seed + offset, density=0.0)
        problem = gen_problem(cfg)
        weights = problem.capacity.shapley()
        engine = sort_all(problem, RULES)
        oracle = classic_flowsort_oracle(problem, weights)
        for mine, ref in zip(engine, oracle):
            alternatives += 1
            max_deg = max(max_deg, float(np.max(np.abs(mine.degrees.degrees - ref["degrees"]))))
            for rule in RULES:
                max_flow = max(max_flow, float(np.max(np.abs(mine.flows.of(rule) - ref["flows"].of(rule)))))
                if mine.categories[rule] != ref["categories"][rule]:
                    mismatches += 1
    return ReductionResult(n_problems, alternatives, max_deg, max_flow, mismatches)
