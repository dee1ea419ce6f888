"""Population model: fitness functions, raw table checks, kinship and rho."""

import numpy as np
import pytest

from evoweights.core.model import (
    FeatureSpec,
    FitnessKind,
    Population,
    RawTable,
    build_population,
    initial_fitness_range,
    kinship,
    organism_fitness,
    variant_fitness,
)
from evoweights.exceptions import ValidationError
from tests.helpers import SIMPLE_VALUES, population_from


def error_rows(excinfo):
    return [error.row for error in excinfo.value.errors]


# ===== VARIANT FITNESS =====

@pytest.mark.parametrize(
    "kind,column,expected",
    [
        ("percentage", [2.0, 1.0, 0.0], [1.0, 0.5, 0.0]),
        ("inverse", [300.0, 600.0, 1500.0], [0.8, 0.6, 0.0]),
        ("inverse_percentage", [10.0, 5.0, 4.0], [0.0, 0.5, 0.6]),
        ("boolean", [1.0, 0.0, None], [1.0, 1.0, 0.0]),
        ("percentage", [0.0, 0.0], [0.0, 0.0]),
        ("inverse", [0.0, 0.0], [1.0, 1.0]),
    ],
    ids=["percentage", "inverse", "inverse-long-name", "boolean", "zero-max-pct", "zero-max-inverse"],
)
def test_variant_fitness_values(kind, column, expected):
    values, _ = variant_fitness(kind, column)
    np.testing.assert_allclose(values, expected, atol=1e-12)


def test_missing_cells_are_zero_and_not_present():
    values, present = variant_fitness("percentage", [4.0, None, 2.0])
    np.testing.assert_allclose(values, [1.0, 0.0, 0.5])
    assert present.tolist() == [True, False, True]


def test_overlap_counts_matched_targets():
    column = [("wifi", "meal"), ("meal",), (), None]
    values, present = variant_fitness("overlap", column, ("wifi", "meal"))
    np.testing.assert_allclose(values, [1.0, 0.5, 0.0, 0.0])
    assert present.tolist() == [True, True, True, False]


@pytest.mark.parametrize(
    "kind,column,targets,row",
    [
        ("percentage", [1.0, -5.0], (), 2),
        ("percentage", [1.0, ("a",)], (), 2),
        ("overlap", [("a",), 3.0], ("a",), 2),
    ],
    ids=["negative", "label-in-numeric", "number-in-overlap"],
)
def test_variant_fitness_errors_carry_rows(kind, column, targets, row):
    with pytest.raises(ValidationError) as excinfo:
        variant_fitness(kind, column, targets)
    assert row in error_rows(excinfo)


def test_all_missing_column_is_rejected():
    with pytest.raises(ValidationError, match="only missing"):
        variant_fitness("percentage", [None, None])


def test_overlap_requires_labels():
    with pytest.raises(ValidationError):
        FeatureSpec(0, "overlap")


def test_fitness_kind_alias():
    assert FitnessKind.parse("Inverse") is FitnessKind.INVERSE_PERCENTAGE
    assert FitnessKind.parse("overlap") is FitnessKind.OVERLAP
    assert FitnessKind.parse(FitnessKind.PERCENTAGE) is FitnessKind.PERCENTAGE


@pytest.mark.parametrize(
    "kind,expected",
    [
        (FitnessKind.BOOLEAN, [1.0, 1.0]),
        (FitnessKind.PERCENTAGE, [0.5, 1.0]),
        (FitnessKind.INVERSE_PERCENTAGE, [0.5, 0.0]),
    ],
    ids=["boolean", "percentage", "inverse"],
)
def test_build_population_from_enum_specs(kind, expected):
    spec = FeatureSpec(0, kind)
    assert spec.kind is kind
    pop = build_population(RawTable(("price",), ((300.0,), (600.0,))), [spec])
    np.testing.assert_allclose(pop.gene(0), expected)


def test_build_population_from_overlap_enum_spec():
    table = RawTable(("extras",), ((("wifi", "meal"),), (("wifi",),)))
    pop = build_population(table, [FeatureSpec(0, FitnessKind.OVERLAP, ("wifi", "meal"))])
    np.testing.assert_allclose(pop.gene(0), [1.0, 0.5])


# ===== RAW TABLE =====

def test_raw_table_default_row_names():
    table = RawTable(("a",), ((1.0,), (2.0,)))
    assert table.row_names == ("row-1", "row-2")
    assert (table.n, table.m) == (2, 1)


def test_raw_table_reports_every_problem():
    with pytest.raises(ValidationError) as excinfo:
        RawTable(("a", "b"), ((1.0,), (-1.0, 2.0)))
    messages = [e.message for e in excinfo.value.errors]
    assert len(messages) == 2
    assert error_rows(excinfo) == [1, 2]
    assert excinfo.value.errors[1].column == "a"


def test_raw_table_without_rows():
    with pytest.raises(ValidationError, match="no data rows"):
        RawTable(("a",), ())


# ===== POPULATION =====

def test_simple_table_normalizes_to_expected_values(simple_pop):
    np.testing.assert_allclose(simple_pop.values, SIMPLE_VALUES, atol=1e-12)
    assert simple_pop.present.all()
    assert simple_pop.gene_names == ("price", "time", "stops")
    assert simple_pop.organism_names == ("A", "B", "C")


def test_population_is_read_only(simple_pop):
    with pytest.raises(ValueError):
        simple_pop.values[0, 0] = 0.5


def test_single_boolean_cell():
    pop = build_population(RawTable(("x",), ((1.0,),)), [FeatureSpec(0, "boolean")])
    np.testing.assert_array_equal(pop.values, [[1.0]])


@pytest.mark.parametrize(
    "values,present",
    [
        ([[1.5]], [[True]]),
        ([[0.5]], [[False]]),
        ([[np.nan]], [[True]]),
        ([[0.5, 0.5]], [[True]]),
    ],
    ids=["above-one", "value-at-missing", "nan", "shape-mismatch"],
)
def test_population_invariants(values, present):
    with pytest.raises(ValidationError):
        Population(np.array(values), np.array(present))


def test_build_population_needs_one_spec_per_column(simple_table):
    with pytest.raises(ValidationError) as excinfo:
        build_population(simple_table, [FeatureSpec(0, "inverse"), FeatureSpec(0, "inverse")])
    columns = {e.column for e in excinfo.value.errors}
    assert {"price", "time", "stops"} <= columns


def test_build_population_attaches_column_names():
    table = RawTable(("price", "tags"), ((1.0, ("a",)), (2.0, 3.0)))
    with pytest.raises(ValidationError) as excinfo:
        build_population(table, [FeatureSpec(0, "percentage"), FeatureSpec(1, "overlap", ("a",))])
    error = excinfo.value.errors[0]
    assert (error.column, error.row) == ("tags", 2)


# ===== DERIVED QUANTITIES =====

def test_organism_fitness_is_dot_product(simple_pop, uniform3):
    np.testing.assert_allclose(organism_fitness(simple_pop, uniform3), [0.8 / 3, 1.1 / 3, 1.1 / 3])


def test_organism_fitness_checks_shape(simple_pop):
    with pytest.raises(ValidationError):
        organism_fitness(simple_pop, [0.5, 0.5])


def test_gene_kinship_matches_reference_matrix(simple_pop):
    expected = [[1.0, 0.67, 0.63], [0.67, 1.0, 0.83], [0.63, 0.83, 1.0]]
    np.testing.assert_allclose(kinship(simple_pop, "gene").values, expected, atol=0.005)


def test_organism_kinship_values(simple_pop):
    kappa = kinship(simple_pop, "organism").values
    assert kappa[0, 1] == pytest.approx(0.820495, abs=1e-6)
    assert kappa[0, 2] == pytest.approx(0.627322, abs=1e-6)
    assert kappa[1, 2] == pytest.approx(0.737532, abs=1e-5)


@pytest.mark.parametrize("axis", ["gene", "organism"])
def test_kinship_symmetric_unit_diagonal(real_pop, axis):
    kappa = kinship(real_pop, axis).values
    np.testing.assert_array_equal(kappa, kappa.T)
    np.testing.assert_array_equal(np.diag(kappa), np.ones(kappa.shape[0]))
    assert np.all(kappa <= 1.0)


@pytest.mark.parametrize("axis", ["gene", "organism"])
def test_kinship_of_single_cell(axis):
    np.testing.assert_array_equal(kinship(population_from([[0.3]]), axis).values, [[1.0]])


def test_real_table_initial_fitness(real_pop):
    r0 = organism_fitness(real_pop, np.full(5, 0.2))
    expected = [0.2647, 0.4494, 0.6035, 0.3329, 0.4012, 0.4976, 0.5341, 0.5906, 0.5471, 0.62]
    np.testing.assert_allclose(r0, expected, atol=1e-4)
    assert int(np.argmin(r0)) == 0
    assert initial_fitness_range(r0).rho == pytest.approx(0.3553, abs=1e-4)


@pytest.mark.parametrize(
    "r0,rho",
    [([0.2, 0.5, 0.3], 0.3), ([0.4, 0.4], 0.4), ([0.0, 0.0], 1.0)],
    ids=["spread", "all-equal", "all-zero"],
)
def test_initial_fitness_range_fallbacks(r0, rho):
    assert initial_fitness_range(r0).rho == pytest.approx(rho)


def test_rounding_noise_counts_as_no_spread():
    high = np.nextafter(0.25, 1.0)
    assert initial_fitness_range([0.25, high]).rho == high


def test_population_storage_is_c_ordered():
    values = np.asfortranarray([[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1]])
    pop = population_from(values)
    assert pop.values.flags["C_CONTIGUOUS"]


@pytest.mark.parametrize("perm", [[0, 1, 2, 3], [3, 1, 0, 2], [2, 3, 1, 0]], ids=["identity", "mixed", "rotated"])
def test_tied_rows_fall_back_to_max_in_any_column_order(perm):
    # both rows hold the same values, so r0 ties mathematically
    values = np.array([[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1]])[:, perm]
    r0 = organism_fitness(population_from(values), np.full(4, 0.25))
    assert initial_fitness_range(r0).rho == pytest.approx(0.25, rel=1e-12)
