import copy
import json

import pytest

from flowsort_choquet.cli import EXIT_FAILED, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, main
from flowsort_choquet.problem_io import fixture_path, read_json


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_doc(tmp_path, doc, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_sort_fixture(capsys):
    code, out, _ = run(capsys, "sort", "car_example")
    assert code == EXIT_OK
    assert out.startswith("Choquet-flows")
    assert "a10" in out


def test_sort_json_rules(capsys):
    code, out, _ = run(capsys, "sort", "car_example", "--rules", "net", "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["rules"] == ["net"]
    assert {r["alternative"]: r["categories"]["net"] for r in doc["results"]}["a10"] == "K3"


def test_sort_to_file(capsys, tmp_path):
    out_path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "sort", "car_example", "--format", "csv", "-o", str(out_path))
    assert code == EXIT_OK and out == ""
    assert out_path.read_text().startswith("alternative,")


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "sort", "car_example", "-o", str(tmp_path / "missing" / "out.txt"))
    assert code == EXIT_FAILED
    assert "error" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "sort", "no_such_problem.json")
    assert code == EXIT_PARSE


def test_schema_error_exit_code(capsys, tmp_path):
    doc, _ = read_json("car_example")
    doc = copy.deepcopy(doc)
    doc["criteria"][0]["pf_type"] = "vee"
    code, _, err = run(capsys, "sort", write_doc(tmp_path, doc))
    assert code == EXIT_PARSE
    assert "criteria[0]" in err


def test_validation_error_exit_code(capsys, tmp_path):
    doc, _ = read_json("car_example")
    doc = copy.deepcopy(doc)
    doc["alternatives"]["a1"]["Price"] = 14000
    code, _, err = run(capsys, "sort", write_doc(tmp_path, doc))
    assert code == EXIT_VALIDATION
    assert "alternatives/a1/Price" in err


def test_bad_rules_argument(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sort", "car_example", "--rules", "median"])
    assert info.value.code == 2


def test_scenarios(capsys):
    code, out, _ = run(capsys, "scenarios", "car_scenarios")
    assert code == EXIT_OK
    assert "Scen6" in out.splitlines()[1]


def test_scenarios_duplicate_name(capsys, tmp_path):
    doc, _ = read_json("car_scenarios")
    doc = copy.deepcopy(doc)
    doc["base"] = str(fixture_path("car_example"))
    doc["scenarios"].append(doc["scenarios"][0])
    code, _, err = run(capsys, "scenarios", write_doc(tmp_path, doc))
    assert code == EXIT_PARSE
    assert "duplicate" in err


def test_verify_problem_reports_pair_sum_failure(capsys):
    code, out, _ = run(capsys, "verify", "car_example", "--format", "json")
    assert code == EXIT_FAILED
    doc = json.loads(out)
    outcomes = doc["properties"]["outcomes"]
    assert outcomes["condition4B"]["failed"] == 3
    assert outcomes["prop13.coherence"]["failed"] == 0


def test_verify_random_clean_subset(capsys):
    code, out, _ = run(capsys, "verify", "--instances", "10", "--props", "3,7,10", "--equivalence", "50", "--reduction", "3")
    assert "Choquet forms on 50 pairs" in out
    assert "mismatches 0 (ok)" in out
    # Condition 4.B is always checked and fails for redundant capacities.
    assert code == (EXIT_FAILED if "condition4B              FAIL" in out else EXIT_OK)


def test_baseline_with_qualitative_ratings(capsys):
    code, out, _ = run(capsys, "baseline", str(fixture_path("speed_consumption")), "--format", "json")
    assert code == EXIT_OK
    results = json.loads(out)["results"]
    assert [r["minmax_score"] for r in results] == pytest.approx([0.4, 0.52, 0.4], abs=1e-12)
    assert [r["qualitative_score"] for r in results] == pytest.approx([2.4, 2.4, 1.8], abs=1e-12)


def test_baseline_with_profiles(capsys):
    code, out, _ = run(capsys, "baseline", str(fixture_path("car_example")), "--format", "csv")
    assert code == EXIT_OK
    header = out.splitlines()[0].split(",")
    assert header[-1] == "flowsort_category"
