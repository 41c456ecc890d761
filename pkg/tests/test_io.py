import copy
import csv
import io
import json

import numpy as np
import pytest

from flowsort_choquet.engine import RULES, sort_all
from flowsort_choquet.errors import StructuralError
from flowsort_choquet.problem_io import (
    REPORT_SCHEMA,
    ProblemParseError,
    ProblemValidationError,
    emit_report,
    fixture_path,
    load_problem,
    load_scenarios,
    problem_from_dict,
    problem_to_dict,
    read_json,
    render_report,
    run_scenarios,
    run_sort,
)
from tables import SCENARIO_ASSIGNMENTS, SCENARIOS


@pytest.fixture
def car_doc():
    doc, _ = read_json("car_example")
    return copy.deepcopy(doc)


def test_fixture_names_resolve():
    assert fixture_path("car_example").name == "car_example.json"
    assert load_problem(fixture_path("car_example")).alternatives.names[0] == "a1"


def test_round_trip_is_lossless(car_problem):
    again = problem_from_dict(problem_to_dict(car_problem))
    assert again.alternatives.names == car_problem.alternatives.names
    assert np.array_equal(again.alternatives.values, car_problem.alternatives.values)
    assert np.array_equal(again.profiles.values, car_problem.profiles.values)
    assert np.array_equal(again.capacity.lattice.values, car_problem.capacity.lattice.values)
    assert again.criteria == car_problem.criteria
    assert again.options == car_problem.options


def test_report_document_reloads_as_problem(car_problem):
    doc = json.loads(render_report(run_sort(car_problem), "json"))
    assert doc["schema"] == REPORT_SCHEMA
    again = problem_from_dict(doc)
    assert [r.categories for r in sort_all(again)] == [r.categories for r in sort_all(car_problem)]


@pytest.mark.parametrize("fmt", ["mobius", "lattice"])
def test_alternative_capacity_formats(car_problem, fmt):
    names = [c.name for c in car_problem.criteria]
    doc = problem_to_dict(car_problem)
    if fmt == "lattice":
        lattice = car_problem.capacity.lattice.values
        doc["capacity"] = {
            "format": "lattice",
            "values": [
                {"subset": [n for j, n in enumerate(names) if mask >> j & 1], "value": float(lattice[mask])}
                for mask in range(1, len(lattice))
            ],
        }
    else:
        mobius = car_problem.capacity.mobius.masses
        doc["capacity"] = {
            "format": "mobius",
            "masses": [
                {"subset": [n for j, n in enumerate(names) if mask >> j & 1], "value": value}
                for mask, value in mobius.items()
                if mask and value != 0
            ],
        }
    again = problem_from_dict(doc)
    assert np.allclose(again.capacity.lattice.values, car_problem.capacity.lattice.values, atol=1e-12)


def test_list_vectors_are_accepted(car_doc):
    names = [c["name"] for c in car_doc["criteria"]]
    car_doc["alternatives"] = [{"name": a, "values": [v[n] for n in names]} for a, v in car_doc["alternatives"].items()]
    assert load_problem(car_doc).alternatives.names[-1] == "a10"


def test_malformed_json_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema": ')
    with pytest.raises(ProblemParseError) as info:
        load_problem(path)
    assert info.value.exit_code == 2


@pytest.mark.parametrize(
    "mutate, location",
    [
        (lambda d: d.update(schema="other"), "schema"),
        (lambda d: d["criteria"][0].update(direction="up"), "criteria[0]"),
        (lambda d: d["alternatives"]["a1"].pop("Price"), "alternatives/a1/Price"),
        (lambda d: d["capacity"].update(format="tree"), "capacity"),
    ],
)
def test_schema_errors_name_their_location(car_doc, mutate, location):
    mutate(car_doc)
    with pytest.raises(ProblemParseError) as info:
        problem_from_dict(car_doc)
    assert any(issue.location.startswith(location) for issue in info.value.report.issues), info.value


def test_invalid_capacity_is_a_validation_error(car_doc):
    car_doc["capacity"]["interactions"][0]["value"] = -0.6
    with pytest.raises(ProblemValidationError) as info:
        problem_from_dict(car_doc)
    assert info.value.exit_code == 3
    assert all(issue.location.startswith("capacity") for issue in info.value.report.issues)


def test_out_of_band_alternative_is_a_validation_error(car_doc):
    car_doc["alternatives"]["a1"]["Price"] = 14000
    with pytest.raises(ProblemValidationError) as info:
        problem_from_dict(car_doc)
    assert "alternatives/a1/Price" in str(info.value)


def test_problem_without_profiles(car_doc):
    car_doc.pop("profiles")
    with pytest.raises(ProblemParseError):
        problem_from_dict(car_doc)
    problem = problem_from_dict(car_doc, require_profiles=False)
    assert problem.k == 1


def test_plain_report_rounds_half_up(car_problem):
    text = render_report(run_sort(car_problem), "plain")
    lines = text.splitlines()
    assert lines[0] == "Choquet-flows"
    a1 = next(line for line in lines if line.startswith("a1 "))
    # phi-(a1) is exactly 0.3125.
    assert a1.split()[6] == "0.313"
    assert "Assignments" in lines


def test_csv_report_keeps_full_precision(car_problem):
    report = run_sort(car_problem)
    rows = list(csv.DictReader(io.StringIO(render_report(report, "csv"))))
    assert len(rows) == 10
    a1 = next(row for row in rows if row["alternative"] == "a1")
    assert float(a1["negative_a"]) == 0.3125
    assert a1["category_net"] == "K1"


def test_empty_alternatives_give_header_only(car_problem):
    report = run_sort(car_problem.with_alternatives([], np.zeros((0, 4))))
    assert len(render_report(report, "csv").splitlines()) == 1
    assert json.loads(render_report(report, "json"))["results"] == []
    assert "Assignments" in render_report(report, "plain")


def test_output_is_deterministic(car_problem):
    assert render_report(run_sort(car_problem), "json") == render_report(run_sort(car_problem), "json")


def test_emit_report_to_path(car_problem, tmp_path):
    out = tmp_path / "report.csv"
    text = emit_report(run_sort(car_problem, ("net",)), "csv", out)
    assert out.read_text() == text


def test_unknown_format(car_problem):
    with pytest.raises(StructuralError):
        render_report(run_sort(car_problem), "xml")


def test_scenario_table_except_ninth(car_scenarios):
    cmp = run_scenarios(car_scenarios)
    assert cmp.scenarios == SCENARIOS
    for i, name in enumerate(cmp.alternatives):
        if name != "a9":
            assert tuple(cmp.categories[s][i] for s in SCENARIOS) == SCENARIO_ASSIGNMENTS[name], name
    a2 = cmp.alternatives.index("a2")
    assert [cmp.changed[s][a2] for s in SCENARIOS] == [False, True, True, False, True, False, True]


def test_scenario_threads_match_serial(car_scenarios):
    assert run_scenarios(car_scenarios, max_workers=4).categories == run_scenarios(car_scenarios).categories


def test_scenario_reports(car_scenarios):
    cmp = run_scenarios(car_scenarios)
    plain = render_report(cmp, "plain")
    rows_plain = {line.split()[0]: line for line in plain.splitlines()[3:]}
    assert "*" not in rows_plain["a1"]
    assert rows_plain["a2"].count("*") == 4
    rows = list(csv.reader(io.StringIO(render_report(cmp, "csv"))))
    assert rows[0][:3] == ["alternative", "Scen0", "Scen1"]
    doc = json.loads(render_report(cmp, "json"))
    assert doc["scenarios"][1]["changed"][0] == "a2"


def _scenario_doc():
    doc, _ = read_json("car_scenarios")
    doc = copy.deepcopy(doc)
    doc["base"] = str(fixture_path("car_example"))
    return doc


def test_duplicate_scenario_names():
    doc = _scenario_doc()
    doc["scenarios"].append(dict(doc["scenarios"][0]))
    with pytest.raises(StructuralError):
        load_scenarios(doc)


def test_invalid_scenario_capacity_is_located():
    doc = _scenario_doc()
    doc["scenarios"][0] = {"name": "bad", "shapley": [0.1, 0.1, 0.1, 0.7], "interactions": [{"criteria": ["Price", "MaxSpeed"], "value": -0.5}]}
    with pytest.raises(ProblemValidationError) as info:
        load_scenarios(doc)
    assert info.value.report.issues[0].location == "scenarios/bad"


def test_scenario_rule_override(car_scenarios):
    for rule in RULES:
        assert run_scenarios(car_scenarios, rule).rule == rule
    with pytest.raises(StructuralError):
        run_scenarios(car_scenarios, "median")
