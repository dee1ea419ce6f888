"""Test data and small builders shared by the test modules."""

import numpy as np

from evoweights.core.model import Population

SIMPLE_COLUMNS = ("price", "time", "stops")
SIMPLE_ROWS = (
    (300.0, 10.0, 2.0),
    (600.0, 5.0, 2.0),
    (1500.0, 4.0, 1.0),
)

REAL_COLUMNS = ("price", "time", "stops", "luggages", "rating")
REAL_ROWS = (
    (300.0, 10.0, 2.0, 0.0, 2.5),
    (600.0, 5.0, 2.0, 1.0, 3.0),
    (1500.0, 4.0, 1.0, 2.0, 4.0),
    (400.0, 8.0, 2.0, 0.0, 3.5),
    (500.0, 8.0, 2.0, 1.0, 3.0),
    (700.0, 5.0, 2.0, 1.0, 4.5),
    (900.0, 6.0, 1.0, 1.0, 4.0),
    (1100.0, 6.0, 1.0, 2.0, 3.5),
    (1300.0, 5.0, 2.0, 2.0, 5.0),
    (1700.0, 4.0, 1.0, 2.0, 5.0),
)
REAL_KINDS = ("inverse", "inverse", "inverse", "percentage", "percentage")

# Normalized simple table
SIMPLE_VALUES = np.array([
    [0.8, 0.0, 0.0],
    [0.6, 0.5, 0.0],
    [0.0, 0.6, 0.5],
])


def population_from(values, present=None, gene_names=(), organism_names=()) -> Population:
    """
    Population straight from a value matrix (all cells present by default)
    """
    values = np.asarray(values, dtype=float)
    if present is None:
        present = np.ones(values.shape, dtype=bool)
    return Population(values, present, tuple(gene_names), tuple(organism_names))
