"""Problem files, scenario sets and report emission.

A problem file is one JSON document tagged ``"schema": "flowsort-choquet/1"``::

    {
      "schema": "flowsort-choquet/1",
      "criteria": [{"name": "Price", "direction": "minimize", "pf_type": "usual"}, ...],
      "categories": ["K1", "K2", "K3"],
      "profiles": [{"name": "r1", "values": {"Price": 15000, ...}}, ...],
      "alternatives": {"a1": {"Price": 16000, ...}, ...},
      "capacity": {"format": "shapley_interaction",
                   "shapley": {"Price": 0.25, ...},
                   "interactions": [{"criteria": ["Acceleration", "MaxSpeed"], "value": -0.08}]},
      "options": {"validation": "strict", "rules": ["positive", "negative", "net"], "form": "shapley"}
    }

Vectors may be objects keyed by criterion name or lists in criterion order.
``alternatives`` may also be a list of ``{"name": ..., "values": ...}``.
The capacity ``format`` is one of ``shapley_interaction``, ``mobius`` or
``lattice``; the latter two list ``{"subset": [names], "value": x}`` entries
under ``masses`` / ``values``.
"""

from __future__ import annotations

import csv
from decimal import ROUND_HALF_UP, Decimal
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .capacity import (
    CapacityLattice,
    CapacityModel,
    MobiusRepresentation,
    ShapleyInteractionModel,
    mask_of,
    members,
    validate_two_additive,
)
from .engine import RULES, AssignmentResult, SortingProblem, SortOptions, sort_all
from .errors import FlowSortError, Issue, StructuralError, ValidationReport
from .preference import CriterionSpec, DecisionMatrix, ReferenceProfileSet

SCHEMA = "flowsort-choquet/1"
SCENARIO_SCHEMA = "flowsort-choquet-scenarios/1"
REPORT_SCHEMA = "flowsort-choquet-report/1"
FORMATS = ("plain", "csv", "json")
CAPACITY_FORMATS = ("shapley_interaction", "mobius", "lattice")


class ProblemFileError(FlowSortError):
    """A problem or scenario file was rejected; ``report`` lists every issue."""

    exit_code = 1

    def __init__(self, message: str, report: ValidationReport):
        details = "\n".join(f"  - {issue}" for issue in report.issues)
        super().__init__(f"{message}\n{details}" if details else message)
        self.report = report


class ProblemParseError(ProblemFileError, StructuralError):
    """The document is not valid JSON or does not follow the schema."""

    exit_code = 2


class ProblemValidationError(ProblemFileError, ValueError):
    """The document is well formed but describes an invalid problem."""

    exit_code = 3


# ---------------------------------------------------------------------------
# Packaged fixtures
# ---------------------------------------------------------------------------


def fixture_path(name: str) -> Path:
    """Path of a shipped example file, e.g. ``fixture_path("car_example")``."""
    filename = name if name.endswith(".json") else f"{name}.json"
    path = Path(str(resources.files("flowsort_choquet") / "data" / filename))
    if not path.is_file():
        raise FileNotFoundError(f"no packaged fixture named {name!r}")
    return path


def resolve_path(spec: str | Path) -> Path:
    """An existing file path, or the name of a packaged fixture."""
    path = Path(spec)
    if path.is_file():
        return path
    try:
        return fixture_path(str(spec))
    except FileNotFoundError:
        raise FileNotFoundError(f"{spec}: no such file or packaged fixture") from None


def read_json(source: str | Path | Mapping) -> tuple[dict, Path | None]:
    if isinstance(source, Mapping):
        return dict(source), None
    path = resolve_path(source)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        report = ValidationReport()
        report.add("parse", f"invalid JSON: {exc.msg}", location=f"{path}:{exc.lineno}:{exc.colno}")
        raise ProblemParseError(f"cannot parse {path}", report) from None
    if not isinstance(doc, dict):
        report = ValidationReport()
        report.add("schema", "top level must be a JSON object", location=str(path))
        raise ProblemParseError(f"cannot parse {path}", report)
    return doc, path


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _Reader:
    """Collects schema issues instead of stopping at the first one."""

    def __init__(self):
        self.report = ValidationReport()

    def issue(self, location: str, message: str, code: str = "schema") -> None:
        self.report.add(code, message, location=location)

    def number(self, value, location: str, optional: bool = False) -> float | None:
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.issue(location, f"expected a number, got {value!r}")
            return None
        if not math.isfinite(value):
            self.issue(location, f"number must be finite, got {value!r}")
            return None
        return float(value)

    def vector(self, raw, names: Sequence[str], location: str) -> list[float] | None:
        if isinstance(raw, Mapping):
            unknown = [key for key in raw if key not in names]
            for key in unknown:
                self.issue(f"{location}/{key}", f"unknown criterion {key!r}")
            out = []
            for name in names:
                if name not in raw:
                    self.issue(f"{location}/{name}", "missing value")
                    out.append(None)
                else:
                    out.append(self.number(raw[name], f"{location}/{name}"))
        elif isinstance(raw, list):
            if len(raw) != len(names):
                self.issue(location, f"expected {len(names)} evaluations, got {len(raw)}")
                return None
            out = [self.number(v, f"{location}/{names[j]}") for j, v in enumerate(raw)]
        else:
            self.issue(location, "expected an object keyed by criterion or a list")
            return None
        return None if any(v is None for v in out) else out

    def criterion_index(self, key, names: Sequence[str], location: str) -> int | None:
        if isinstance(key, str):
            if key in names:
                return names.index(key)
            self.issue(location, f"unknown criterion {key!r}")
            return None
        if isinstance(key, int) and not isinstance(key, bool) and 1 <= key <= len(names):
            return key - 1
        self.issue(location, f"criteria are referenced by name or 1-based index, got {key!r}")
        return None

    def subset(self, raw, names: Sequence[str], location: str) -> int | None:
        if not isinstance(raw, list):
            self.issue(location, "subset must be a list of criteria")
            return None
        idx = [self.criterion_index(key, names, f"{location}[{i}]") for i, key in enumerate(raw)]
        if any(i is None for i in idx):
            return None
        if len(set(idx)) != len(idx):
            self.issue(location, "subset lists a criterion twice")
            return None
        return mask_of(idx)


def _parse_criteria(r: _Reader, raw) -> tuple[list[CriterionSpec], list[str]]:
    """Criterion specs plus every usable name, so that cross-references are
    still checked when a criterion itself is rejected."""
    if not isinstance(raw, list) or not raw:
        r.issue("criteria", "expected a non-empty list of criteria")
        return [], []
    out = []
    names = []
    seen = set()
    for i, item in enumerate(raw):
        where = f"criteria[{i}]"
        if not isinstance(item, Mapping) or not isinstance(item.get("name"), str):
            r.issue(where, "each criterion needs a string 'name'")
            continue
        name = item["name"]
        if name in seen:
            r.issue(where, f"duplicate criterion name {name!r}")
            continue
        seen.add(name)
        names.append(name)
        unknown = set(item) - {"name", "direction", "pf_type", "q", "p", "s"}
        for key in sorted(unknown):
            r.issue(f"{where}.{key}", "unknown field")
        thresholds = {key: r.number(item.get(key), f"{where}.{key}", optional=True) for key in ("q", "p", "s")}
        try:
            out.append(
                CriterionSpec(
                    name,
                    item.get("direction", "maximize"),
                    item.get("pf_type", "usual"),
                    **thresholds,
                )
            )
        except FlowSortError as exc:
            r.issue(where, str(exc))
    return out, names


def _parse_named_vectors(r: _Reader, raw, names: Sequence[str], where: str, allow_mapping: bool):
    entries = []
    if allow_mapping and isinstance(raw, Mapping):
        items = list(raw.items())
        for key, vec in items:
            entries.append((key, vec, f"{where}/{key}"))
    elif isinstance(raw, list):
        for i, item in enumerate(raw):
            if not isinstance(item, Mapping) or "values" not in item:
                r.issue(f"{where}[{i}]", "expected an object with 'values'")
                continue
            name = item.get("name")
            if name is not None and not isinstance(name, str):
                r.issue(f"{where}[{i}].name", "name must be a string")
                continue
            entries.append((name, item["values"], f"{where}/{name if name is not None else i}"))
    else:
        r.issue(where, "expected a list" + (" or an object keyed by name" if allow_mapping else ""))
        return [], []
    labels, rows = [], []
    for name, vec, location in entries:
        row = r.vector(vec, names, location)
        if row is not None:
            labels.append(name)
            rows.append(row)
    return labels, rows


def _parse_capacity(r: _Reader, raw, names: Sequence[str], where: str = "capacity") -> CapacityModel | None:
    if not isinstance(raw, Mapping):
        r.issue(where, "expected a capacity object")
        return None
    fmt = raw.get("format")
    n = len(names)
    if fmt not in CAPACITY_FORMATS:
        r.issue(f"{where}.format", f"format must be one of {', '.join(CAPACITY_FORMATS)}, got {fmt!r}")
        return None
    try:
        if fmt == "shapley_interaction":
            shapley = r.vector(raw.get("shapley"), names, f"{where}.shapley")
            interactions = {}
            for i, item in enumerate(raw.get("interactions", [])):
                loc = f"{where}.interactions[{i}]"
                if not isinstance(item, Mapping):
                    r.issue(loc, "expected {'criteria': [a, b], 'value': x}")
                    continue
                pair = item.get("criteria")
                value = r.number(item.get("value"), f"{loc}.value")
                if not isinstance(pair, list) or len(pair) != 2:
                    r.issue(f"{loc}.criteria", "an interaction names exactly two criteria")
                    continue
                j, s = (r.criterion_index(key, names, f"{loc}.criteria") for key in pair)
                if j is None or s is None or value is None:
                    continue
                key = (min(j, s), max(j, s))
                if j == s or key in interactions:
                    r.issue(loc, "interaction pairs must be distinct and listed once")
                    continue
                interactions[key] = value
            if shapley is None:
                return None
            return CapacityModel(ShapleyInteractionModel(np.array(shapley), interactions))
        key = "masses" if fmt == "mobius" else "values"
        entries = raw.get(key)
        if not isinstance(entries, list):
            r.issue(f"{where}.{key}", "expected a list of {'subset': [...], 'value': x}")
            return None
        table: dict[int, float] = {}
        for i, item in enumerate(entries):
            loc = f"{where}.{key}[{i}]"
            if not isinstance(item, Mapping):
                r.issue(loc, "expected {'subset': [...], 'value': x}")
                continue
            mask = r.subset(item.get("subset"), names, f"{loc}.subset")
            value = r.number(item.get("value"), f"{loc}.value")
            if mask is None or value is None:
                continue
            if mask in table:
                r.issue(loc, "subset listed twice")
                continue
            table[mask] = value
        if fmt == "mobius":
            max_order = raw.get("max_order")
            return CapacityModel(MobiusRepresentation(n, table, max_order))
        return CapacityModel(CapacityLattice.from_mapping(n, table))
    except FlowSortError as exc:
        r.issue(where, str(exc))
        return None


def _parse_options(r: _Reader, raw) -> SortOptions:
    if raw is None:
        return SortOptions()
    if not isinstance(raw, Mapping):
        r.issue("options", "expected an object")
        return SortOptions()
    unknown = set(raw) - {"validation", "rules", "form"}
    for key in sorted(unknown):
        r.issue(f"options.{key}", "unknown field")
    try:
        return SortOptions(
            validation=raw.get("validation", "strict"),
            rules=tuple(raw.get("rules", RULES)),
            form=raw.get("form", "shapley"),
        )
    except (FlowSortError, TypeError) as exc:
        r.issue("options", str(exc))
        return SortOptions()


def problem_from_dict(doc: Mapping, *, validate: bool = True, require_profiles: bool = True, origin: str = "") -> SortingProblem:
    """Build a :class:`SortingProblem` from a parsed document.

    Schema problems raise :class:`ProblemParseError`; an invalid problem
    (dominance between profiles, out-of-band evaluations, invalid capacity)
    raises :class:`ProblemValidationError`.  Both list every issue found.
    A report document carrying a ``problem`` entry is accepted as well.
    """
    if "problem" in doc and isinstance(doc["problem"], Mapping) and "criteria" not in doc:
        doc = doc["problem"]
    r = _Reader()
    schema = doc.get("schema")
    if schema != SCHEMA:
        r.issue("schema", f"expected schema tag {SCHEMA!r}, got {schema!r}")
    unknown = set(doc) - {"schema", "criteria", "categories", "profiles", "alternatives", "capacity", "options", "description", "qualitative"}
    for key in sorted(unknown):
        r.issue(key, "unknown field")
    criteria, names = _parse_criteria(r, doc.get("criteria"))

    profiles = None
    if names and (require_profiles or "profiles" in doc):
        pnames, prows = _parse_named_vectors(r, doc.get("profiles"), names, "profiles", allow_mapping=False)
        if len(prows) < 2:
            r.issue("profiles", "at least two limiting profiles are required")
        else:
            labels = doc.get("categories")
            if labels is not None and (not isinstance(labels, list) or not all(isinstance(x, str) for x in labels)):
                r.issue("categories", "expected a list of category labels")
                labels = None
            pnames = [p if p is not None else f"r{i + 1}" for i, p in enumerate(pnames)]
            try:
                profiles = ReferenceProfileSet(np.array(prows), labels, pnames)
            except FlowSortError as exc:
                r.issue("profiles", str(exc))

    alternatives = None
    if names:
        anames, arows = _parse_named_vectors(r, doc.get("alternatives", {}), names, "alternatives", allow_mapping=True)
        anames = [a if a is not None else f"a{i + 1}" for i, a in enumerate(anames)]
        try:
            alternatives = DecisionMatrix(tuple(anames), np.array(arows, dtype=float).reshape(len(arows), len(names)))
        except FlowSortError as exc:
            r.issue("alternatives", str(exc))

    capacity = _parse_capacity(r, doc.get("capacity"), names) if names else None
    if capacity is not None and capacity.n != len(names):
        r.issue("capacity", f"capacity covers {capacity.n} criteria, problem has {len(names)}")
        capacity = None
    options = _parse_options(r, doc.get("options"))
    if not r.report.ok:
        raise ProblemParseError(f"{origin or 'problem'}: file does not follow the {SCHEMA} schema", r.report)

    if profiles is None:
        # Matrix-only documents (no profiles) get a trivial band for baseline use.
        values = alternatives.values
        sign = np.array([1.0 if c.direction == "maximize" else -1.0 for c in criteria])
        best = np.where(sign > 0, values.max(axis=0), values.min(axis=0))
        worst = np.where(sign > 0, values.min(axis=0), values.max(axis=0))
        profiles = ReferenceProfileSet(np.vstack([best, worst]))
    problem = SortingProblem(tuple(criteria), alternatives, profiles, capacity, options)
    if validate:
        report = problem.validate()
        if not report.ok:
            raise ProblemValidationError(f"{origin or 'problem'}: invalid problem", locate_issues(report))
    return problem


def locate_issues(report: ValidationReport) -> ValidationReport:
    out = ValidationReport(truncated=report.truncated)
    for issue in report.issues:
        location = issue.location
        if location is None:
            location = "capacity"
        elif not location.startswith(("profiles", "alternatives", "capacity")):
            location = f"capacity/{location}"
        out.issues.append(Issue(issue.code, issue.message, location, issue.data))
    return out


def load_problem(source: str | Path | Mapping, *, validate: bool = True) -> SortingProblem:
    """Read and validate a problem file (path, fixture name or parsed dict)."""
    doc, path = read_json(source)
    return problem_from_dict(doc, validate=validate, origin=str(path) if path else "")


def _vector_dict(names, row) -> dict[str, float]:
    return {name: float(v) for name, v in zip(names, row)}


def capacity_to_dict(capacity: CapacityModel, names: Sequence[str]) -> dict:
    source = capacity.source
    if isinstance(source, ShapleyInteractionModel):
        return {
            "format": "shapley_interaction",
            "shapley": _vector_dict(names, source.shapley),
            "interactions": [
                {"criteria": [names[j], names[s]], "value": float(v)} for (j, s), v in sorted(source.interactions.items())
            ],
        }
    if isinstance(source, MobiusRepresentation):
        return {
            "format": "mobius",
            "max_order": source.max_order,
            "masses": [
                {"subset": [names[j] for j in members(mask)], "value": float(v)}
                for mask, v in sorted(source.masses.items(), key=lambda kv: (bin(kv[0]).count("1"), kv[0]))
                if mask
            ],
        }
    order = sorted(range(1, 1 << source.n), key=lambda mask: (bin(mask).count("1"), mask))
    return {
        "format": "lattice",
        "values": [{"subset": [names[j] for j in members(mask)], "value": float(source.values[mask])} for mask in order],
    }


def problem_to_dict(problem: SortingProblem) -> dict:
    """JSON-ready document that :func:`load_problem` reads back losslessly."""
    names = [c.name for c in problem.criteria]
    criteria = []
    for c in problem.criteria:
        item = {"name": c.name, "direction": c.direction.value, "pf_type": c.pf_type.value}
        item.update({key: float(v) for key, v in c.thresholds.items()})
        criteria.append(item)
    return {
        "schema": SCHEMA,
        "criteria": criteria,
        "categories": list(problem.profiles.labels),
        "profiles": [
            {"name": name, "values": _vector_dict(names, row)}
            for name, row in zip(problem.profiles.names, problem.profiles.values)
        ],
        "alternatives": {
            name: _vector_dict(names, row) for name, row in zip(problem.alternatives.names, problem.alternatives.values)
        },
        "capacity": capacity_to_dict(problem.capacity, names),
        "options": {
            "validation": problem.options.validation,
            "rules": list(problem.options.rules),
            "form": problem.options.form,
        },
    }


# ---------------------------------------------------------------------------
# Sorting and scenarios
# ---------------------------------------------------------------------------


@dataclass
class SortReport:
    problem: SortingProblem
    rules: tuple[str, ...]
    results: list[AssignmentResult]


def run_sort(problem: SortingProblem, rules: Sequence[str] | None = None, max_workers: int | None = None) -> SortReport:
    rules = tuple(rules or problem.options.rules)
    return SortReport(problem, rules, sort_all(problem, rules, max_workers=max_workers))


@dataclass
class Scenario:
    name: str
    capacity: CapacityModel


@dataclass
class ScenarioSet:
    base: SortingProblem
    scenarios: list[Scenario]
    rule: str = "net"


@dataclass
class ScenarioComparison:
    """One assignment column per scenario; ``changed`` marks differences from
    the first scenario."""

    rule: str
    scenarios: tuple[str, ...]
    alternatives: tuple[str, ...]
    labels: tuple[str, ...]
    categories: dict[str, list[int]]
    changed: dict[str, list[bool]]
    results: dict[str, list[AssignmentResult]] = field(repr=False, default_factory=dict)


def scenario_set_from_dict(doc: Mapping, base_dir: Path | None = None, origin: str = "") -> ScenarioSet:
    r = _Reader()
    if doc.get("schema") != SCENARIO_SCHEMA:
        r.issue("schema", f"expected schema tag {SCENARIO_SCHEMA!r}, got {doc.get('schema')!r}")
    if "base" in doc:
        base_doc = doc["base"]
        if isinstance(base_doc, str):
            candidate = (base_dir / base_doc) if base_dir else Path(base_doc)
            base_doc = candidate if candidate.is_file() else base_doc
            base = load_problem(base_doc, validate=False)
        else:
            base = problem_from_dict(base_doc, validate=False, origin=f"{origin} base")
    else:
        r.issue("base", "a scenario set needs a base problem")
        raise ProblemParseError(f"{origin or 'scenarios'}: schema errors", r.report)
    rule = doc.get("rule", "net")
    if rule not in RULES:
        r.issue("rule", f"rule must be one of {', '.join(RULES)}")
    names = [c.name for c in base.criteria]
    raw = doc.get("scenarios")
    scenarios = []
    seen = set()
    if not isinstance(raw, list) or not raw:
        r.issue("scenarios", "expected a non-empty list of scenarios")
        raw = []
    for i, item in enumerate(raw):
        where = f"scenarios[{i}]"
        if not isinstance(item, Mapping) or not isinstance(item.get("name"), str):
            r.issue(where, "each scenario needs a string 'name'")
            continue
        name = item["name"]
        if name in seen:
            raise StructuralError(f"{where}: duplicate scenario name {name!r}")
        seen.add(name)
        spec = item.get("capacity")
        if spec is None:
            spec = {"format": "shapley_interaction", "shapley": item.get("shapley"), "interactions": item.get("interactions", [])}
        capacity = _parse_capacity(r, spec, names, f"{where}.capacity")
        if capacity is not None:
            scenarios.append(Scenario(name, capacity))
    if not r.report.ok:
        raise ProblemParseError(f"{origin or 'scenarios'}: file does not follow the {SCENARIO_SCHEMA} schema", r.report)

    invalid = ValidationReport()
    for scenario in scenarios:
        report = scenario.capacity.validate()
        if scenario.capacity.kind == "shapley_interaction":
            report = validate_two_additive(scenario.capacity.source)
        for issue in report:
            invalid.issues.append(Issue(issue.code, issue.message, f"scenarios/{scenario.name}", issue.data))
    if not invalid.ok:
        raise ProblemValidationError(f"{origin or 'scenarios'}: invalid scenario capacity", invalid)
    return ScenarioSet(base, scenarios, rule)


def load_scenarios(source: str | Path | Mapping) -> ScenarioSet:
    doc, path = read_json(source)
    return scenario_set_from_dict(doc, path.parent if path else None, str(path) if path else "")


def run_scenarios(
    scenario_set: ScenarioSet, rule: str | None = None, max_workers: int | None = None
) -> ScenarioComparison:
    """Sort the base problem once per capacity override."""
    rule = rule or scenario_set.rule
    if rule not in RULES:
        raise StructuralError(f"unknown assignment rule {rule!r}")
    names = [s.name for s in scenario_set.scenarios]
    if len(set(names)) != len(names):
        raise StructuralError("scenario names must be unique")

    def run(scenario: Scenario):
        problem = scenario_set.base.with_capacity(scenario.capacity)
        return sort_all(problem, (rule,))

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outputs = list(pool.map(run, scenario_set.scenarios))
    else:
        outputs = [run(s) for s in scenario_set.scenarios]
    categories = {name: [r.categories[rule] for r in out] for name, out in zip(names, outputs)}
    first = categories[names[0]] if names else []
    changed = {name: [c != f for c, f in zip(cats, first)] for name, cats in categories.items()}
    return ScenarioComparison(
        rule,
        tuple(names),
        scenario_set.base.alternatives.names,
        scenario_set.base.profiles.labels,
        categories,
        changed,
        dict(zip(names, outputs)),
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _fmt3(x: float) -> str:
    # Half-up, as in hand-computed tables (0.3125 -> 0.313).
    out = str(Decimal(repr(float(x))).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))
    return "0.000" if out == "-0.000" else out


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    widths = [max([len(h)] + [len(row[i]) for row in rows]) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    return lines


_SYMBOL = {"positive": "phi+", "negative": "phi-", "net": "phi"}


def _sort_plain(report: SortReport) -> str:
    problem = report.problem
    labels = problem.profiles.labels
    pnames = problem.profiles.names
    flow_header = ["alternative"]
    for rule in RULES:
        flow_header += [f"{_SYMBOL[rule]}(a)"] + [f"{_SYMBOL[rule]}({p})" for p in pnames]
    flow_rows = []
    for r in report.results:
        row = [r.alternative]
        for rule in RULES:
            flows = r.flows.of(rule)
            row += [_fmt3(flows[-1])] + [_fmt3(v) for v in flows[:-1]]
        flow_rows.append(row)
    assign_header = ["alternative"] + list(report.rules)
    assign_rows = [[r.alternative] + [labels[r.categories[rule] - 1] for rule in report.rules] for r in report.results]
    lines = ["Choquet-flows"] + format_table(flow_header, flow_rows) + ["", "Assignments"] + format_table(assign_header, assign_rows)
    return "\n".join(lines) + "\n"


def _sort_csv(report: SortReport) -> str:
    pnames = report.problem.profiles.names
    labels = report.problem.profiles.labels
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["alternative"]
    for rule in RULES:
        header += [f"{rule}_a"] + [f"{rule}_{p}" for p in pnames]
    header += [f"category_{rule}" for rule in report.rules]
    writer.writerow(header)
    for r in report.results:
        row = [r.alternative]
        for rule in RULES:
            flows = r.flows.of(rule)
            row += [repr(float(flows[-1]))] + [repr(float(v)) for v in flows[:-1]]
        row += [labels[r.categories[rule] - 1] for rule in report.rules]
        writer.writerow(row)
    return buf.getvalue()


def sort_report_to_dict(report: SortReport) -> dict:
    labels = report.problem.profiles.labels
    return {
        "schema": REPORT_SCHEMA,
        "rules": list(report.rules),
        "results": [
            {
                "alternative": r.alternative,
                "categories": {rule: labels[r.categories[rule] - 1] for rule in report.rules},
                "category_index": {rule: r.categories[rule] for rule in report.rules},
                "flows": {
                    "local_set": list(r.flows.local_set),
                    "positive": r.flows.positive.tolist(),
                    "negative": r.flows.negative.tolist(),
                    "net": r.flows.net.tolist(),
                },
            }
            for r in report.results
        ],
        "problem": problem_to_dict(report.problem),
    }


def _scenario_plain(cmp: ScenarioComparison) -> str:
    header = ["alternative"] + list(cmp.scenarios)
    rows = []
    for i, name in enumerate(cmp.alternatives):
        row = [name]
        for s in cmp.scenarios:
            label = cmp.labels[cmp.categories[s][i] - 1]
            row.append(label + ("*" if cmp.changed[s][i] else ""))
        rows.append(row)
    lines = [f"Assignments by scenario ({cmp.rule} flow rule; * = differs from {cmp.scenarios[0] if cmp.scenarios else '-'})"]
    return "\n".join(lines + format_table(header, rows)) + "\n"


def _scenario_csv(cmp: ScenarioComparison) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alternative"] + list(cmp.scenarios) + [f"changed_{s}" for s in cmp.scenarios])
    for i, name in enumerate(cmp.alternatives):
        writer.writerow(
            [name]
            + [cmp.labels[cmp.categories[s][i] - 1] for s in cmp.scenarios]
            + [str(cmp.changed[s][i]).lower() for s in cmp.scenarios]
        )
    return buf.getvalue()


def scenario_comparison_to_dict(cmp: ScenarioComparison) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "rule": cmp.rule,
        "scenarios": [
            {
                "name": s,
                "categories": {a: cmp.labels[c - 1] for a, c in zip(cmp.alternatives, cmp.categories[s])},
                "changed": [a for a, flag in zip(cmp.alternatives, cmp.changed[s]) if flag],
                "flows": {
                    r.alternative: {"positive": r.flows.positive.tolist(), "negative": r.flows.negative.tolist(), "net": r.flows.net.tolist()}
                    for r in cmp.results.get(s, [])
                },
            }
            for s in cmp.scenarios
        ],
    }


def render_report(results: SortReport | ScenarioComparison, fmt: str = "plain") -> str:
    """Render sort or scenario results as ``plain`` text, ``csv`` or ``json``.

    Plain tables round flows to three decimals; csv and json keep full
    precision.  Output is deterministic for a given input.
    """
    if fmt not in FORMATS:
        raise StructuralError(f"unknown report format {fmt!r}; choose from {', '.join(FORMATS)}")
    if isinstance(results, SortReport):
        if fmt == "plain":
            return _sort_plain(results)
        if fmt == "csv":
            return _sort_csv(results)
        return json.dumps(sort_report_to_dict(results), indent=2) + "\n"
    if isinstance(results, ScenarioComparison):
        if fmt == "plain":
            return _scenario_plain(results)
        if fmt == "csv":
            return _scenario_csv(results)
        return json.dumps(scenario_comparison_to_dict(results), indent=2) + "\n"
    raise StructuralError(f"cannot render {type(results).__name__}")


def emit_report(results: SortReport | ScenarioComparison, fmt: str = "plain", out=None) -> str:
    """Render a report and write it to ``out`` (path, file object or None)."""
    text = render_report(results, fmt)
    if out is None:
        return text
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return text
