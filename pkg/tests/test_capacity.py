import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowsort_choquet.capacity import (
    MAX_LATTICE_CRITERIA,
    CapacityLattice,
    CapacityModel,
    MobiusRepresentation,
    ShapleyInteractionModel,
    choquet_lattice,
    choquet_mobius,
    choquet_shapley_form,
    choquet_two_additive,
    interaction_index,
    lattice_to_mobius,
    mask_of,
    mobius_to_lattice,
    mobius_to_shapley_interaction,
    shapley_interaction_to_mobius,
    shapley_values,
    validate_lattice,
    validate_mobius,
    validate_two_additive,
)
from flowsort_choquet.errors import DomainError, PreconditionError, StructuralError
from flowsort_choquet.verification import gen_two_additive

# ---------------------------------------------------------------------------
# Independent oracles: explicit subset enumeration and the permutation form
# ---------------------------------------------------------------------------


def subsets(n):
    for size in range(n + 1):
        yield from itertools.combinations(range(n), size)


def oracle_mu(masses: dict, subset) -> float:
    """mu(A) = sum of m(T) over T contained in A, by enumeration."""
    return math.fsum(v for t, v in masses.items() if set(t) <= set(subset))


def oracle_masses_from_mu(mu: dict, n: int) -> dict:
    """m(A) = sum over B in A of (-1)^{|A-B|} mu(B)."""
    out = {}
    for a in subsets(n):
        out[a] = math.fsum((-1) ** (len(a) - len(b)) * mu[b] for size in range(len(a) + 1) for b in itertools.combinations(a, size))
    return out


def oracle_shapley(mu: dict, n: int) -> list[float]:
    out = []
    for j in range(n):
        rest = [i for i in range(n) if i != j]
        total = []
        for size in range(n):
            w = math.factorial(n - size - 1) * math.factorial(size) / math.factorial(n)
            for t in itertools.combinations(rest, size):
                total.append(w * (mu[tuple(sorted(t + (j,)))] - mu[t]))
        out.append(math.fsum(total))
    return out


def oracle_pair_interaction(mu: dict, n: int, j: int, s: int) -> float:
    rest = [i for i in range(n) if i not in (j, s)]
    total = []
    for size in range(n - 1):
        w = math.factorial(n - size - 2) * math.factorial(size) / math.factorial(n - 1)
        for t in itertools.combinations(rest, size):
            key = lambda extra: tuple(sorted(t + extra))
            total.append(w * (mu[key((j, s))] - mu[key((j,))] - mu[key((s,))] + mu[t]))
    return math.fsum(total)


def oracle_choquet_permutation(values, mu: dict) -> float:
    """Ascending-order definition with explicit upper sets."""
    order = sorted(range(len(values)), key=lambda j: values[j])
    total, previous = [], 0.0
    for pos, j in enumerate(order):
        upper = tuple(sorted(order[pos:]))
        total.append((values[j] - previous) * mu[upper])
        previous = values[j]
    return math.fsum(total)


def mu_table(cap: CapacityLattice) -> dict:
    return {t: cap[t] for t in subsets(cap.n)}


models = st.builds(
    gen_two_additive,
    n=st.integers(2, 6),
    seed=st.integers(0, 2**32),
    density=st.floats(0, 1),
    magnitude=st.floats(0, 1),
)
unit_values = st.integers(2, 6).flatmap(lambda n: st.lists(st.floats(0, 1), min_size=n, max_size=n))


# ---------------------------------------------------------------------------
# Worked examples
# ---------------------------------------------------------------------------


def test_car_model_lattice_is_valid(car_model):
    assert validate_lattice(car_model.lattice).ok


def test_two_criteria_masses_to_lattice():
    m = MobiusRepresentation.from_subsets(2, {(0,): 0.4, (1,): 0.4, (0, 1): 0.2})
    cap = mobius_to_lattice(m)
    assert cap[(0,)] == pytest.approx(0.4, abs=1e-15)
    assert cap[(1,)] == pytest.approx(0.4, abs=1e-15)
    assert cap[(0, 1)] == pytest.approx(1.0, abs=1e-15)
    assert cap[()] == 0.0


def test_car_lattice_round_trips_to_masses(car_model):
    back = lattice_to_mobius(car_model.lattice, max_order=2)
    direct = shapley_interaction_to_mobius(car_model.shapley_interaction)
    assert np.allclose(back.dense(), direct.dense(), atol=1e-12)


def test_two_criteria_masses_from_indices(two_criteria_model):
    m = two_criteria_model.mobius
    assert m[(0,)] == pytest.approx(0.4, abs=1e-15)
    assert m[(1,)] == pytest.approx(0.4, abs=1e-15)
    assert m[(0, 1)] == pytest.approx(0.2, abs=1e-15)


def test_car_masses(car_model):
    m = car_model.mobius
    expected = {(0,): 0.25, (1,): 0.25, (2,): 0.15, (3,): 0.33, (1, 2): -0.08, (2, 3): 0.10}
    for subset, value in expected.items():
        assert m[subset] == pytest.approx(value, abs=1e-12)
    # Independent solve of I_j = m({j}) + 1/2 sum_s m({j,s}).
    for j, shapley in enumerate([0.25, 0.21, 0.16, 0.38]):
        pair_sum = sum(v for (a, b), v in m.pairs.items() if j in (a, b))
        assert m.singletons[j] + pair_sum / 2 == pytest.approx(shapley, abs=1e-12)


def test_car_model_slack():
    model = ShapleyInteractionModel(np.array([0.25, 0.21, 0.16, 0.38]), {(1, 2): -0.08, (2, 3): 0.10})
    assert validate_two_additive(model).ok
    assert model.slacks()[2] == pytest.approx(0.07, abs=1e-15)


@pytest.mark.parametrize("values, expected", [((3, 2), 2.4), ((2, 3), 2.4), ((1, 3), 1.8)])
def test_qualitative_scale_integrals(two_criteria_model, values, expected):
    for form in (
        lambda v: choquet_lattice(v, two_criteria_model.lattice),
        lambda v: choquet_mobius(v, two_criteria_model.mobius),
        lambda v: choquet_two_additive(v, two_criteria_model.mobius),
        lambda v: choquet_shapley_form(v, two_criteria_model.shapley_interaction),
    ):
        assert form(values) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("values, expected", [((1, 0), 0.4), ((0.2, 1), 0.52), ((0, 1), 0.4)])
def test_normalized_scale_integrals(values, expected):
    m = MobiusRepresentation.from_subsets(2, {(0,): 0.4, (1,): 0.4, (0, 1): 0.2})
    assert choquet_mobius(values, m) == pytest.approx(expected, abs=1e-12)
    assert choquet_two_additive(values, m) == pytest.approx(expected, abs=1e-12)


def test_outranking_vector_integral(car_model):
    p = (0, 0, 1, 1)
    assert choquet_shapley_form(p, car_model.shapley_interaction) == pytest.approx(0.58, abs=1e-12)
    assert car_model.choquet(np.array(p, float)) == pytest.approx(0.58, abs=1e-12)


def test_pair_interaction_index_equals_pair_mass(car_model):
    cap = car_model.lattice
    assert interaction_index(cap, (2, 3)) == pytest.approx(0.10, abs=1e-12)
    assert oracle_pair_interaction(mu_table(cap), 4, 2, 3) == pytest.approx(0.10, abs=1e-12)


def test_shapley_values_recovered(car_model):
    assert np.allclose(shapley_values(car_model.mobius), [0.25, 0.21, 0.16, 0.38], atol=1e-12)
    assert np.allclose(oracle_shapley(mu_table(car_model.lattice), 4), [0.25, 0.21, 0.16, 0.38], atol=1e-12)


def test_symmetric_shapley_values():
    m = MobiusRepresentation.from_subsets(2, {(0,): 0.4, (1,): 0.4, (0, 1): 0.2})
    assert np.allclose(shapley_values(m), [0.5, 0.5], atol=1e-15)


# ---------------------------------------------------------------------------
# Validation and errors
# ---------------------------------------------------------------------------


def test_non_monotone_lattice_is_reported():
    cap = CapacityLattice.from_mapping(2, {(0,): 0.7, (1,): 0.2, (0, 1): 0.6})
    report = validate_lattice(cap)
    assert not report.ok
    assert "monotonicity" in report.codes()


def test_boundary_violations_are_reported():
    cap = CapacityLattice.from_mapping(2, {(0,): 0.3, (1,): 0.3, (0, 1): 0.9})
    assert "boundary.full" in validate_lattice(cap).codes()
    model = ShapleyInteractionModel(np.array([0.5, 0.6]), {})
    assert "boundary.sum" in validate_two_additive(model).codes()


def test_negative_slack_is_reported():
    model = ShapleyInteractionModel(np.array([0.1, 0.9]), {(0, 1): -0.4})
    report = validate_two_additive(model)
    assert "monotonicity" in report.codes()
    with pytest.raises(PreconditionError):
        choquet_shapley_form((0.5, 0.5), model)


def test_missing_lattice_subset_is_structural():
    with pytest.raises(StructuralError):
        CapacityLattice.from_mapping(2, {(0,): 0.5, (0, 1): 1.0})


def test_lattice_size_limit():
    with pytest.raises(StructuralError):
        CapacityLattice(MAX_LATTICE_CRITERIA + 1, np.zeros(2))


def test_higher_order_masses_rejected_by_pair_forms():
    m = MobiusRepresentation.from_subsets(3, {(0,): 0.3, (1,): 0.3, (2,): 0.3, (0, 1, 2): 0.1})
    assert m.order == 3
    with pytest.raises(PreconditionError):
        choquet_two_additive((0.1, 0.2, 0.3), m)
    with pytest.raises(PreconditionError):
        mobius_to_shapley_interaction(m)
    with pytest.raises(StructuralError):
        lattice_to_mobius(mobius_to_lattice(m), max_order=2)


def test_interaction_index_of_empty_set_is_undefined(car_model):
    with pytest.raises(DomainError):
        interaction_index(car_model.lattice, ())


@pytest.mark.parametrize("values", [(float("nan"), 0.1), (-0.1, 0.5)])
def test_invalid_values_raise_domain_error(two_criteria_model, values):
    with pytest.raises(DomainError):
        two_criteria_model.choquet(np.array(values))


def test_interaction_keys_must_be_distinct():
    with pytest.raises(StructuralError):
        ShapleyInteractionModel(np.array([0.5, 0.5]), {(0, 0): 0.1})


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------


@given(models)
def test_generated_models_are_valid(model):
    assert validate_two_additive(model).ok
    assert validate_lattice(CapacityModel(model).lattice).ok


@given(models)
def test_mobius_lattice_round_trip(model):
    m = shapley_interaction_to_mobius(model)
    cap = mobius_to_lattice(m)
    back = lattice_to_mobius(cap)
    assert np.allclose(back.dense(), m.dense(), atol=1e-12)
    masses = {tuple(members): m[members] for members in subsets(model.n)}
    for t in subsets(model.n):
        assert cap[t] == pytest.approx(oracle_mu(masses, t), abs=1e-12)


@given(models)
def test_shapley_interaction_round_trip(model):
    back = mobius_to_shapley_interaction(shapley_interaction_to_mobius(model))
    assert np.allclose(back.shapley, model.shapley, atol=1e-12)
    for key in set(back.interactions) | set(model.interactions):
        assert back.interactions.get(key, 0.0) == pytest.approx(model.interactions.get(key, 0.0), abs=1e-12)


@given(models)
def test_indices_match_definitions(model):
    cap = CapacityModel(model).lattice
    mu = mu_table(cap)
    assert np.allclose(oracle_shapley(mu, model.n), model.shapley, atol=1e-12)
    for j, s in itertools.combinations(range(model.n), 2):
        assert oracle_pair_interaction(mu, model.n, j, s) == pytest.approx(model.interactions.get((j, s), 0.0), abs=1e-12)


@given(models, st.data())
def test_forms_agree_with_permutation_oracle(model, data):
    values = data.draw(st.lists(st.floats(0, 1), min_size=model.n, max_size=model.n))
    cap_model = CapacityModel(model)
    expected = oracle_choquet_permutation(values, mu_table(cap_model.lattice))
    assert choquet_lattice(values, cap_model.lattice) == pytest.approx(expected, abs=1e-9)
    assert choquet_mobius(values, cap_model.mobius) == pytest.approx(expected, abs=1e-9)
    assert choquet_two_additive(values, cap_model.mobius) == pytest.approx(expected, abs=1e-9)
    assert choquet_shapley_form(values, model) == pytest.approx(expected, abs=1e-9)


@given(models, st.data())
def test_integral_is_monotone_and_bounded(model, data):
    n = model.n
    x = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    bump = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    y = np.minimum(x + bump, 1.0)
    cap_model = CapacityModel(model)
    cx, cy = cap_model.choquet(x), cap_model.choquet(y)
    assert cx <= cy + 1e-12
    assert x.min() - 1e-12 <= cx <= x.max() + 1e-12


@given(models)
def test_integral_of_indicator_is_capacity(model):
    cap_model = CapacityModel(model)
    for t in subsets(model.n):
        indicator = np.zeros(model.n)
        indicator[list(t)] = 1.0
        assert cap_model.choquet(indicator) == pytest.approx(cap_model.lattice[mask_of(t)], abs=1e-12)


def test_batched_evaluation_matches_rows(car_model, rng):
    values = rng.random((7, 3, 4))
    batched = car_model.choquet(values)
    assert batched.shape == (7, 3)
    for idx in np.ndindex(7, 3):
        assert batched[idx] == pytest.approx(choquet_lattice(values[idx], car_model.lattice), abs=1e-12)
