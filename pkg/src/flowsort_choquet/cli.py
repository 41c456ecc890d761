"""Command line interface.

Exit codes: 0 success, 1 verification found violations or output could not
be written, 2 unreadable or malformed input, 3 invalid problem, 4
computation inconsistency.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from .baselines import direct_choquet_scores, min_max_normalize
from .engine import FORMS, RULES, SortOptions, sort_all
from .errors import FlowSortError, InconsistencyError, PreconditionError, StructuralError
from .problem_io import (
    FORMATS,
    ProblemFileError,
    ProblemValidationError,
    emit_report,
    format_table,
    locate_issues,
    load_problem,
    load_scenarios,
    problem_from_dict,
    read_json,
    run_scenarios,
    run_sort,
)
from .verification import (
    ALL_PROPOSITIONS,
    check_choquet_equivalence,
    check_conditions,
    check_propositions,
    check_reduction,
    PROPOSITION_NAMES,
    run_property_suite,
    satisfies_condition_8b,
    STRONG_PROPOSITIONS,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INCONSISTENT = 4


def _rules(text: str) -> tuple[str, ...]:
    rules = tuple(r.strip() for r in text.split(",") if r.strip())
    bad = [r for r in rules if r not in RULES]
    if bad or not rules:
        raise argparse.ArgumentTypeError(f"rules are a comma list of {', '.join(RULES)}")
    return rules


def _props(text: str) -> list[int]:
    try:
        props = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("propositions are a comma list of integers 2..13") from None
    if not props or set(props) - ALL_PROPOSITIONS:
        raise argparse.ArgumentTypeError("propositions are a comma list of integers 2..13")
    return props


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowsort-choquet",
        description="Sort alternatives into ordered categories with Choquet-aggregated outranking flows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output(p):
        p.add_argument("--format", choices=FORMATS, default="plain", help="report format (default: plain)")
        p.add_argument("-o", "--output", help="write the report to this file instead of stdout")

    p = sub.add_parser("sort", help="sort the alternatives of a problem file")
    p.add_argument("problem", help="problem JSON file or packaged fixture name (e.g. car_example)")
    p.add_argument("--rules", type=_rules, help="comma list of positive,negative,net")
    p.add_argument("--validation", choices=("weak", "strict", "strong"), help="override the profile validation mode")
    p.add_argument("--form", choices=FORMS, help="Choquet evaluation form")
    p.add_argument("--workers", type=int, default=None, help="threads for large batches")
    add_output(p)

    p = sub.add_parser("scenarios", help="compare assignments across capacity scenarios")
    p.add_argument("scenarios", help="scenario set JSON file or packaged fixture name (e.g. car_scenarios)")
    p.add_argument("--rule", choices=RULES, help="assignment rule (default from file, else net)")
    p.add_argument("--workers", type=int, default=None)
    add_output(p)

    p = sub.add_parser("verify", help="check structural conditions and propositions")
    p.add_argument("problem", nargs="?", help="check one problem file instead of random instances")
    p.add_argument("--instances", type=int, default=1000, help="random problems to generate (default: 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--props", type=_props, help="comma list of propositions 2..13")
    p.add_argument("--equivalence", type=int, default=0, metavar="N", help="also compare the Choquet forms on N random pairs")
    p.add_argument("--reduction", type=int, default=0, metavar="N", help="also compare with weighted-sum FlowSort on N problems")
    p.add_argument("--format", choices=("plain", "json"), default="plain")
    p.add_argument("-o", "--output")

    p = sub.add_parser("baseline", help="direct Choquet scores after common-scale treatments")
    p.add_argument("problem", help="problem or matrix JSON file (profiles optional)")
    p.add_argument("--format", choices=("plain", "csv", "json"), default="plain")
    p.add_argument("-o", "--output")
    return parser


class OutputError(Exception):
    """The report could not be written."""


def _write(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    try:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {output}: {exc.strerror or exc}") from exc


def _cmd_sort(args) -> int:
    problem = load_problem(args.problem, validate=False)
    if args.validation or args.form:
        options = problem.options
        problem = replace(problem, options=SortOptions(args.validation or options.validation, options.rules, args.form or options.form))
    report = problem.validate()
    if not report.ok:
        raise ProblemValidationError(f"{args.problem}: invalid problem", locate_issues(report))
    result = run_sort(problem, args.rules, args.workers)
    _write(emit_report(result, args.format), args.output)
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    scenario_set = load_scenarios(args.scenarios)
    scenario_set.base.validate().raise_if_invalid("base problem is invalid")
    comparison = run_scenarios(scenario_set, args.rule, args.workers)
    _write(emit_report(comparison, args.format), args.output)
    return EXIT_OK


def _cmd_verify(args) -> int:
    sections = {}
    if args.problem:
        problem = load_problem(args.problem)
        report = check_conditions(problem)
        props = set(args.props or ALL_PROPOSITIONS)
        if not satisfies_condition_8b(problem):
            dropped = props & STRONG_PROPOSITIONS
            props -= STRONG_PROPOSITIONS
            for prop in sorted(dropped):
                report.skipped(PROPOSITION_NAMES[prop], "profiles are not strongly preferred")
        report.merge(check_propositions(problem, props))
    else:
        report = run_property_suite(args.instances, args.seed, args.props)
    sections["properties"] = report.to_dict()
    ok = report.ok
    lines = ["Properties"] + report.summary_lines()
    if report.notes:
        lines += [f"  note {name}: {count}" for name, count in sorted(report.notes.items())]
    for ce in report.counterexamples[:10]:
        lines.append(f"  counterexample [{ce.property}] seed={ce.seed}: {ce.message}")
    if args.equivalence:
        eq = check_choquet_equivalence(args.equivalence, args.seed)
        sections["equivalence"] = eq.__dict__
        passed = eq.max_deviation < 1e-9
        ok &= passed
        lines.append(f"Choquet forms on {eq.pairs} pairs: max deviation {eq.max_deviation:.3e} ({'ok' if passed else 'FAIL'})")
    if args.reduction:
        red = check_reduction(args.reduction, args.seed)
        sections["reduction"] = red.__dict__
        passed = red.max_flow_deviation <= 1e-12 and red.max_degree_deviation <= 1e-12 and red.category_mismatches == 0
        ok &= passed
        lines.append(
            f"Reduction on {red.problems} problems: degree dev {red.max_degree_deviation:.3e}, "
            f"flow dev {red.max_flow_deviation:.3e}, mismatches {red.category_mismatches} ({'ok' if passed else 'FAIL'})"
        )
    if args.format == "json":
        text = json.dumps({"ok": ok, **sections}, indent=2, default=_jsonable) + "\n"
    else:
        text = "\n".join(lines) + "\n"
    _write(text, args.output)
    return EXIT_OK if ok else EXIT_FAILED


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _cmd_baseline(args) -> int:
    doc, path = read_json(args.problem)
    has_profiles = "profiles" in doc or ("problem" in doc and "profiles" in doc["problem"])
    problem = problem_from_dict(doc, require_profiles=False, origin=str(path))
    names = problem.alternatives.names
    crit = [c.name for c in problem.criteria]
    normalized = min_max_normalize(problem.alternatives, problem.criteria)
    minmax = direct_choquet_scores(normalized, problem.capacity)
    qualitative = None
    if "qualitative" in doc:
        raw = doc["qualitative"]
        missing = [a for a in names if a not in raw]
        if missing:
            raise StructuralError(f"qualitative: no ratings for {', '.join(missing)}")
        rows = [[float(raw[a][c]) for c in crit] for a in names]
        qualitative = direct_choquet_scores(np.array(rows), problem.capacity)
    categories = None
    if has_profiles:
        categories = {r.alternative: r.categories["net"] for r in sort_all(problem, ("net",))}

    records = []
    for i, name in enumerate(names):
        rec = {"alternative": name, "normalized": dict(zip(crit, normalized.values[i].tolist())), "minmax_score": float(minmax[i])}
        if qualitative is not None:
            rec["qualitative_score"] = float(qualitative[i])
        if categories is not None:
            rec["flowsort_category"] = problem.profiles.labels[categories[name] - 1]
        records.append(rec)

    if args.format == "json":
        text = json.dumps({"results": records}, indent=2) + "\n"
    else:
        header = ["alternative"] + [f"norm_{c}" for c in crit] + ["minmax_score"]
        if qualitative is not None:
            header.append("qualitative_score")
        if categories is not None:
            header.append("flowsort_category")
        rows = []
        for rec in records:
            full = args.format == "csv"
            num = (lambda x: repr(x)) if full else (lambda x: f"{x:.3f}")
            row = [rec["alternative"]] + [num(rec["normalized"][c]) for c in crit] + [num(rec["minmax_score"])]
            if qualitative is not None:
                row.append(num(rec["qualitative_score"]))
            if categories is not None:
                row.append(rec["flowsort_category"])
            rows.append(row)
        if args.format == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
            text = buf.getvalue()
        else:
            text = "\n".join(format_table(header, rows)) + "\n"
    _write(text, args.output)
    return EXIT_OK


COMMANDS = {"sort": _cmd_sort, "scenarios": _cmd_scenarios, "verify": _cmd_verify, "baseline": _cmd_baseline}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InconsistencyError as exc:
        print(f"error: computation inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FlowSortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
