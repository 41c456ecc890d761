import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowsort_choquet import CapacityModel
from flowsort_choquet.capacity import choquet_lattice
from flowsort_choquet.engine import RULES, FlowTable, SortingProblem, SortOptions, assign, sort_all
from flowsort_choquet.errors import GenerationError, PreconditionError, StructuralError
from flowsort_choquet.preference import CriterionSpec, DecisionMatrix, ReferenceProfileSet
from flowsort_choquet.problem_io import problem_from_dict
from flowsort_choquet.verification import (
    STABILITY1_EXPECTED,
    STABILITY1_PRINTED,
    InstanceGenConfig,
    PropertyReport,
    check_choquet_equivalence,
    check_conditions,
    check_pairwise_consistency,
    check_propositions,
    check_reduction,
    condorcet_problem,
    gen_problem,
    gen_two_additive,
    matching_categories,
    oracle_choquet,
    random_config,
    run_property_suite,
    satisfies_condition_8b,
)


def test_oracle_integral_on_qualitative_example(two_criteria_model):
    assert oracle_choquet((3, 2), two_criteria_model.lattice) == pytest.approx(2.4, abs=1e-12)


@given(st.integers(2, 6), st.integers(0, 2**32), st.data())
def test_oracle_matches_shapley_form(n, seed, data):
    model = CapacityModel(gen_two_additive(n, seed))
    values = data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    assert oracle_choquet(values, model.lattice) == pytest.approx(float(model.choquet(np.array(values))), abs=1e-9)
    assert oracle_choquet(values, model.lattice) == pytest.approx(choquet_lattice(values, model.lattice), abs=1e-9)


@given(st.integers(0, 2**32), st.integers(2, 5))
def test_interval_scan_agrees_with_assignment(seed, k):
    rng = np.random.default_rng(seed)
    pos = np.sort(rng.random(k + 1))[::-1]
    neg = np.sort(rng.random(k + 1))
    a_pos = rng.choice([rng.uniform(pos[-1], pos[0]), pos[rng.integers(k + 1)]])
    a_neg = rng.choice([rng.uniform(neg[0], neg[-1]), neg[rng.integers(k + 1)]])
    positive, negative = np.append(pos, a_pos), np.append(neg, a_neg)
    table = FlowTable(tuple(f"r{i}" for i in range(k + 1)) + ("a",), positive, negative, positive - negative)
    for rule in ("positive", "negative"):
        assert matching_categories(table, rule) == [assign(table, rule)]


@pytest.mark.parametrize("kw", [{"n": 1}, {"n": 3, "density": 1.5}, {"n": 3, "magnitude": -0.1}, {"n": 3, "sign": "up"}])
def test_generator_rejects_bad_arguments(kw):
    kw.setdefault("seed", 0)
    with pytest.raises(GenerationError):
        gen_two_additive(**kw)


@pytest.mark.parametrize("mode", ["weak", "strict", "strong"])
@given(seed=st.integers(0, 2**32))
def test_generated_problems_validate_in_their_mode(mode, seed):
    problem = gen_problem(random_config(seed, mode=mode))
    assert problem.validate(mode).ok
    if mode == "strong":
        assert satisfies_condition_8b(problem)


def test_generator_mode_is_checked():
    with pytest.raises(GenerationError):
        gen_problem(InstanceGenConfig(mode="loose"))


def test_car_example_breaks_pair_sum_condition(car_problem):
    """Redundancy between acceleration and speed lets both directions of a
    pair add up to more than 1: for P = (0,1,0,0) and its complement the
    integrals are 0.25 and 0.25 + 0.15 + 0.33 + 0.10 = 0.83."""
    report = check_conditions(car_problem)
    assert report.outcomes["condition4B"].failed == 3
    assert {ce.message.split(":")[0] for ce in report.counterexamples} == {"a3", "a7", "a8"}
    assert all(ce.message.endswith("= 1.08") for ce in report.counterexamples)
    for name in ("condition3B", "condition5B", "condition6B", "condition7B", "condition8B", "proposition1"):
        assert report.outcomes[name].failed == 0, name


def test_equal_profiles_break_strict_separation():
    criteria = (CriterionSpec("x"), CriterionSpec("y"))
    profiles = ReferenceProfileSet(np.array([[3.0, 3.0], [2.0, 2.0], [2.0, 2.0], [1.0, 1.0]]))
    problem = SortingProblem(
        criteria, DecisionMatrix(("a",), np.array([[2.5, 2.5]])), profiles, CapacityModel.additive([0.5, 0.5]),
        SortOptions(validation="weak"),
    )
    report = check_conditions(problem)
    assert report.outcomes["condition7B"].failed == 1
    assert report.outcomes["proposition1"].failed == 1


def test_car_example_propositions(car_problem):
    report = check_propositions(car_problem, [2, 11, 13])
    assert report.ok
    assert report.outcomes["prop2.uniqueness"].passed > 0
    assert report.outcomes["prop11.conformity"].passed > 0


def test_car_example_all_propositions(car_problem):
    report = check_propositions(car_problem)
    assert report.ok, report.summary_lines()


def test_strong_propositions_need_strong_profiles():
    problem = gen_problem(InstanceGenConfig(mode="weak", gap_factor=(0.0, 0.0), seed=3))
    assert not satisfies_condition_8b(problem)
    with pytest.raises(PreconditionError):
        check_propositions(problem, [12])
    check_propositions(problem, [2, 4, 13])


def test_unknown_proposition():
    with pytest.raises(StructuralError):
        check_propositions(gen_problem(InstanceGenConfig()), [14])


def test_condorcet_pair_is_not_transitive():
    problem = condorcet_problem()
    results = {r.alternative: r for r in sort_all(problem)}
    assert results["a_i"].positive == 1 and results["a_t"].positive == 2
    assert results["a_i"].net == 1 and results["a_t"].net == 2
    pair = check_pairwise_consistency(problem, "a_i", "a_t")
    assert pair.degree_first_over_second == pytest.approx(1 / 3)
    assert pair.degree_second_over_first == pytest.approx(2 / 3)
    assert pair.preferred == "a_t"
    assert not pair.consistent


def test_pairwise_check_rejects_unknown_names():
    with pytest.raises(StructuralError):
        check_pairwise_consistency(condorcet_problem(), "a_i", "nope")


def test_stability_intervals_hold_and_printed_ones_do_not():
    report = run_property_suite(60, seed=500, which=[5, 6], interaction_sign="nonnegative")
    assert report.outcomes["prop5.stability1_remove"].failed == 0
    assert report.outcomes["prop6.stability1_insert"].failed == 0
    assert report.notes["prop6.stability1_insert.outside_printed_interval"] > 0
    # The two statements disagree only on the side where a renumbering shifts the index.
    assert STABILITY1_PRINTED[(5, "above")] == STABILITY1_EXPECTED[(5, "above")]
    assert STABILITY1_PRINTED[(6, "above")] == STABILITY1_EXPECTED[(6, "above")]


def test_suite_is_clean_without_redundancy():
    report = run_property_suite(40, seed=0, interaction_sign="nonnegative")
    assert report.ok, report.summary_lines()
    for name in ("prop8.stability2_split", "prop9.stability2_fusion"):
        assert report.outcomes[name].passed > 0


def test_redundancy_failures_follow_pair_sum_failures():
    report = run_property_suite(80, seed=0, which=[12, 13])
    failing = {name for name, o in report.outcomes.items() if o.failed}
    assert failing <= {"condition4B", "prop12.relationship", "prop13.coherence"}
    for ce in report.counterexamples:
        if ce.property.startswith(("prop12", "prop13")):
            problem = gen_problem(random_config(ce.seed))
            assert check_conditions(problem).outcomes["condition4B"].failed > 0


def test_counterexample_payload_replays():
    report = run_property_suite(30, seed=0, which=[2])
    ce = next(ce for ce in report.counterexamples if ce.property == "condition4B")
    problem = problem_from_dict(ce.payload["problem"], validate=False)
    assert check_conditions(problem).outcomes["condition4B"].failed > 0
    json.dumps(report.to_dict())


def test_report_merge_adds_counts():
    a, b = PropertyReport(), PropertyReport()
    a.check("x", True)
    b.check("x", False, "bad", {"k": 1}, seed=7)
    b.skipped("y", "why")
    a.merge(b)
    assert (a.outcomes["x"].passed, a.outcomes["x"].failed) == (1, 1)
    assert a.outcomes["y"].skipped == 1
    assert a.counterexamples[0].seed == 7
    assert not a.ok


def test_choquet_forms_agree():
    result = check_choquet_equivalence(500, seed=1)
    assert result.pairs == 500
    assert result.max_deviation < 1e-9


def test_zero_interaction_reduction():
    result = check_reduction(15, seed=2)
    assert result.category_mismatches == 0
    assert result.max_degree_deviation <= 1e-12
    assert result.max_flow_deviation <= 1e-12


def test_homogeneous_clone_and_neutrality_on_generated_problem():
    problem = gen_problem(InstanceGenConfig(n_criteria=3, n_categories=3, n_alternatives=12, seed=11, interaction_sign="nonnegative"))
    report = check_propositions(problem, [3, 4, 7, 10])
    assert report.ok
    assert report.outcomes["prop7.homogeneity"].passed > 0
    assert report.outcomes["prop10.monotonicity"].passed > 0


@pytest.mark.parametrize("rule", RULES)
def test_duplicate_alternative_gets_same_category(car_problem, rule):
    names = car_problem.alternatives.names + ("copy",)
    values = np.vstack([car_problem.alternatives.values, car_problem.alternatives.row("a3")])
    results = {r.alternative: r for r in sort_all(car_problem.with_alternatives(names, values), (rule,))}
    assert results["copy"].categories == results["a3"].categories
