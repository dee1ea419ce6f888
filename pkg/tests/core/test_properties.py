"""
Property tests for the simulation kernels.

One engine iteration is compared with a direct evaluation of the update
equations written as plain loops over organisms and genes. Cell values are
drawn from a k/20 grid so that no subnormal numbers appear.
"""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from evoweights.core.engine import CLAMP_LOWER, CLAMP_UPPER, SimConfig, simulate
from evoweights.core.model import (
    FeatureSpec,
    RHO_TIE_TOLERANCE,
    RawTable,
    build_population,
    initial_fitness_range,
    kinship,
    organism_fitness,
)
from evoweights.core.strategies import MixMode, StrategyMix, os_balanced, selfish_transfer
from tests.helpers import population_from

GRID = st.integers(min_value=0, max_value=20).map(lambda k: k / 20.0)
WEIGHT = st.integers(min_value=0, max_value=20).map(lambda k: k / 20.0)

PROPERTY_SETTINGS = settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def tables(draw, min_genes=2, max_organisms=4, max_genes=4, full=False):
    """(values, present) with n in [1, 4] and m in [min_genes, 4]"""
    n = draw(st.integers(min_value=1, max_value=max_organisms))
    m = draw(st.integers(min_value=min_genes, max_value=max_genes))
    values = np.array(draw(st.lists(st.lists(GRID, min_size=m, max_size=m), min_size=n, max_size=n)))
    if full:
        present = np.ones((n, m), dtype=bool)
    else:
        flags = draw(st.lists(st.lists(st.booleans(), min_size=m, max_size=m), min_size=n, max_size=n))
        present = np.array(flags, dtype=bool)
        # every gene keeps at least one present cell
        present[0, :] = True
    return np.where(present, values, 0.0), present


@st.composite
def initial_gammas(draw, m):
    weights = draw(st.lists(st.integers(min_value=1, max_value=9), min_size=m, max_size=m))
    total = sum(weights)
    return tuple(w / total for w in weights)


def mixes():
    return st.tuples(WEIGHT, WEIGHT).map(
        lambda ab: StrategyMix({"dominant": ab[0], "altruistic": 1.0 - ab[0]},
                               {"balanced": ab[1], "selfish": 1.0 - ab[1]},
                               MixMode.SELF_CONSISTENT)
    )


# ===== ORACLE =====

def oracle_step(phi, present, gamma, alpha_gene, alpha_organism):
    """
    One iteration of the update equations, evaluated cell by cell

    Returns:
        (gamma after the step, alpha_gene after, alpha_organism after, effects)
    """
    n, m = len(phi), len(phi[0])
    r = [sum(gamma[j] * phi[i][j] for j in range(m)) for i in range(n)]

    rho = max(r) - min(r)
    if rho <= RHO_TIE_TOLERANCE * max(r):
        rho = max(r) if max(r) > 0 else 1.0

    gene_k = [[1.0 - math.sqrt(sum((phi[i][j] - phi[i][l]) ** 2 for i in range(n))) / n
               for l in range(m)] for j in range(m)]
    org_k = [[1.0 - math.sqrt(sum((phi[i][j] - phi[t][j]) ** 2 for j in range(m))) / m
              for t in range(n)] for i in range(n)]

    dom = [[0.0] * m for _ in range(n)]
    alt = [[0.0] * m for _ in range(n)]
    bal = [[0.0] * m for _ in range(n)]
    sel = [[0.0] * m for _ in range(n)]
    for i in range(n):
        transfer_i = sum(org_k[i][t] * (r[i] - r[t]) / rho for t in range(n) if t != i) / n
        for j in range(m):
            if not present[i][j]:
                continue
            dom[i][j] = 4.0 * gamma[j] ** 2 / n * (phi[i][j] - 0.5)
            if gamma[j] > 0:
                transfer_ij = 4.0 / m * sum(gamma[l] * gene_k[j][l] * (phi[i][l] - phi[i][j])
                                            for l in range(m) if l != j)
                alt[i][j] = dom[i][j] * transfer_ij / gamma[j]
            if r[i] > 0:
                mu = gamma[j] * phi[i][j] / r[i]
                bal[i][j] = -(2.0 * r[i] / n) * (mu - 1.0 / m)
                sel[i][j] = bal[i][j] * transfer_i / r[i]

    effects = {
        "dominant": sum(abs(v) for row in dom for v in row) / (n * m),
        "altruistic": sum(abs(v) for row in alt for v in row) / (n * m),
        "balanced": sum(sum(abs(row[j]) * gamma[j] for j in range(m)) for row in bal) / n,
        "selfish": sum(sum(abs(row[j]) * gamma[j] for j in range(m)) for row in sel) / n,
    }

    grown = []
    for j in range(m):
        delta = 0.0
        for i in range(n):
            delta += (alpha_gene["dominant"] * dom[i][j] + alpha_gene["altruistic"] * alt[i][j]
                      + alpha_organism["balanced"] * bal[i][j] + alpha_organism["selfish"] * sel[i][j])
        delta = min(max(delta, CLAMP_LOWER), CLAMP_UPPER)
        grown.append(gamma[j] * (1.0 + delta))
    new_gamma = [g / sum(grown) for g in grown]

    def advance(alpha):
        scaled = {name: weight * (1.0 + effects[name]) for name, weight in alpha.items()}
        return {name: value / sum(scaled.values()) for name, value in scaled.items()}

    return new_gamma, advance(alpha_gene), advance(alpha_organism), effects


def trajectory(pop, iterations=3, **kwargs):
    config = SimConfig(mix=kwargs.pop("mix", StrategyMix.preset("self_consistent")),
                       max_iterations=iterations, epsilon=1e-300, **kwargs)
    return simulate(pop, config)


def shared_prefix(first, second):
    """Series of two traces cut to the shorter run (an exact fixed point stops one early)"""
    k = min(len(first.records), len(second.records))
    return first.gamma_series()[:k], second.gamma_series()[:k], first.r_series()[:k], second.r_series()[:k]


# ===== ORACLE EQUIVALENCE =====

@given(data=st.data())
@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_one_iteration_matches_oracle(data):
    values, present = data.draw(tables())
    gamma0 = data.draw(initial_gammas(values.shape[1]))
    strategy_mix = data.draw(mixes())

    trace = trajectory(population_from(values, present), iterations=1, mix=strategy_mix, initial_gamma=gamma0)
    start, step = trace.records[0], trace.records[1]
    gamma, alpha_gene, alpha_organism, effects = oracle_step(
        values.tolist(), present.tolist(), start.gamma.tolist(), start.alpha_gene, start.alpha_organism
    )

    np.testing.assert_allclose(step.gamma, gamma, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(step.r, values @ np.array(gamma), rtol=1e-12, atol=1e-12)
    for name, expected in effects.items():
        np.testing.assert_allclose(step.delta_bar[name], expected, rtol=1e-12, atol=1e-12)
    for name in alpha_gene:
        np.testing.assert_allclose(step.alpha_gene[name], alpha_gene[name], rtol=1e-12, atol=1e-12)
    for name in alpha_organism:
        np.testing.assert_allclose(step.alpha_organism[name], alpha_organism[name], rtol=1e-12, atol=1e-12)


# ===== INVARIANTS =====

@given(table=tables(), strategy_mix=mixes())
@PROPERTY_SETTINGS
def test_gamma_and_alpha_stay_normalized(table, strategy_mix):
    trace = trajectory(population_from(*table), iterations=10, mix=strategy_mix)
    for record in trace.records:
        assert abs(record.gamma.sum() - 1.0) <= 1e-12
        assert np.all(record.gamma >= 0.0)
        assert abs(sum(record.alpha_gene.values()) - 1.0) <= 1e-12
        assert abs(sum(record.alpha_organism.values()) - 1.0) <= 1e-12


@given(data=st.data())
@PROPERTY_SETTINGS
def test_balanced_rows_sum_to_zero(data):
    values, present = data.draw(tables(min_genes=1, full=True))
    pop = population_from(values, present)
    gamma = np.array(data.draw(initial_gammas(pop.m)))
    r = organism_fitness(pop, gamma)
    row_sums = os_balanced(pop, gamma, r).values.sum(axis=1)
    np.testing.assert_allclose(row_sums[r > 0], 0.0, atol=1e-12)


@given(data=st.data())
@PROPERTY_SETTINGS
def test_selfish_transfers_cancel(data):
    values, present = data.draw(tables(min_genes=1))
    pop = population_from(values, present)
    gamma = np.array(data.draw(initial_gammas(pop.m)))
    r = organism_fitness(pop, gamma)
    transfer = selfish_transfer(r, kinship(pop, "organism"), initial_fitness_range(r))
    assert abs(transfer.sum()) <= 1e-12


@given(table=tables(), order=st.randoms(use_true_random=False))
@PROPERTY_SETTINGS
def test_row_permutation_keeps_gamma_trajectory(table, order):
    values, present = table
    perm = list(range(values.shape[0]))
    order.shuffle(perm)

    original = trajectory(population_from(values, present))
    shuffled = trajectory(population_from(values[perm], present[perm]))
    gamma_a, gamma_b, r_a, r_b = shared_prefix(original, shuffled)
    np.testing.assert_allclose(gamma_b, gamma_a, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(r_b, r_a[:, perm], rtol=1e-12, atol=1e-12)


@given(table=tables(), order=st.randoms(use_true_random=False))
@PROPERTY_SETTINGS
def test_column_permutation_permutes_gamma_trajectory(table, order):
    values, present = table
    perm = list(range(values.shape[1]))
    order.shuffle(perm)

    original = trajectory(population_from(values, present))
    shuffled = trajectory(population_from(values[:, perm], present[:, perm]))
    gamma_a, gamma_b, _, _ = shared_prefix(original, shuffled)
    np.testing.assert_allclose(gamma_b, gamma_a[:, perm], rtol=1e-12, atol=1e-12)


@given(
    rows=st.integers(min_value=1, max_value=4).flatmap(
        lambda m: st.lists(st.lists(st.integers(min_value=0, max_value=500), min_size=m, max_size=m),
                           min_size=1, max_size=4)
    ),
    kinds=st.lists(st.sampled_from(["percentage", "inverse"]), min_size=4, max_size=4),
    factor=st.integers(min_value=2, max_value=1000),
    column=st.integers(min_value=0, max_value=3),
)
@PROPERTY_SETTINGS
def test_integer_column_rescaling_keeps_trace(rows, kinds, factor, column):
    m = len(rows[0])
    column %= m
    names = tuple(f"g{j}" for j in range(m))
    specs = [FeatureSpec(j, kinds[j]) for j in range(m)]
    scaled_rows = [tuple(float(v * factor) if j == column else float(v) for j, v in enumerate(row)) for row in rows]

    base = build_population(RawTable(names, tuple(tuple(float(v) for v in row) for row in rows)), specs)
    scaled = build_population(RawTable(names, tuple(scaled_rows)), specs)
    np.testing.assert_array_equal(scaled.values, base.values)

    first, second = trajectory(base, iterations=5), trajectory(scaled, iterations=5)
    np.testing.assert_array_equal(first.gamma_series(), second.gamma_series())
    np.testing.assert_array_equal(first.r_series(), second.r_series())


@given(table=tables(), strategy_mix=mixes(), workers=st.integers(min_value=2, max_value=4))
@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_worker_count_is_bit_identical(table, strategy_mix, workers):
    pop = population_from(*table)
    single = trajectory(pop, iterations=5, mix=strategy_mix, workers=1)
    pooled = trajectory(pop, iterations=5, mix=strategy_mix, workers=workers)
    np.testing.assert_array_equal(single.gamma_series(), pooled.gamma_series())
    assert [r.alpha_gene for r in single.records] == [r.alpha_gene for r in pooled.records]
    assert [r.delta_bar for r in single.records] == [r.delta_bar for r in pooled.records]


@given(values=st.lists(st.lists(GRID, min_size=1, max_size=1), min_size=1, max_size=4))
@PROPERTY_SETTINGS
def test_single_gene_is_trivially_stable(values):
    trace = trajectory(population_from(values), iterations=10)
    assert trace.converged
    np.testing.assert_array_equal(trace.final.gamma, [1.0])
