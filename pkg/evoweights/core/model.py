"""
Population model
================

Turns a raw decision table into the immutable population of gene variant
fitness values and derives the static quantities used by every strategy:
organism fitness, gene/organism kinship and the initial fitness range.

Vocabulary:
    gene      -> data feature (column)
    organism  -> data row (candidate solution)
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from evoweights.exceptions import ErrorDetail, ValidationError

logger = logging.getLogger(__name__)

# A cell is a non-negative number, a tuple of labels, or None (missing)
Cell = Union[float, Tuple[str, ...], None]

# Fallback order for rho when the initial organism fitness has no spread
RHO_FINAL_FALLBACK = 1.0

# Spreads within this fraction of max(r0) are rounding noise of tied values
RHO_TIE_TOLERANCE = 1e-12


class FitnessKind(str, Enum):
    """Gene variant fitness functions"""

    BOOLEAN = "boolean"
    PERCENTAGE = "percentage"
    INVERSE_PERCENTAGE = "inverse_percentage"
    OVERLAP = "overlap"

    @classmethod
    def parse(cls, name: str) -> "FitnessKind":
        """Accept a member, the enum value or the short alias 'inverse' used in config files"""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        if key == "inverse":
            return cls.INVERSE_PERCENTAGE
        return cls(key)

    @property
    def is_numeric(self) -> bool:
        return self in (FitnessKind.PERCENTAGE, FitnessKind.INVERSE_PERCENTAGE)


class Axis(str, Enum):
    GENE = "gene"
    ORGANISM = "organism"


def cell_kind(cell: Cell) -> str:
    """Classify a cell as 'missing', 'number' or 'labels'"""
    if cell is None:
        return "missing"
    if isinstance(cell, tuple):
        return "labels"
    return "number"


# ============================================================================
# RAW TABLE & FEATURE SPECS
# ============================================================================

@dataclass(frozen=True)
class RawTable:
    """
    Input matrix of structured cells

    Args:
        column_names: One name per gene
        rows: n rows of exactly m cells each
        row_names: Optional organism names (defaults to row-1..row-n)

    Raises:
        ValidationError: With coordinates of every broken cell
    """

    column_names: Tuple[str, ...]
    rows: Tuple[Tuple[Cell, ...], ...]
    row_names: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "rows", tuple(tuple(row) for row in self.rows))
        if not self.row_names:
            object.__setattr__(self, "row_names", tuple(f"row-{i + 1}" for i in range(len(self.rows))))
        else:
            object.__setattr__(self, "row_names", tuple(self.row_names))

        errors = validate_table(self)
        if errors:
            raise ValidationError(errors)

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.column_names)

    def column(self, j: int) -> List[Cell]:
        return [row[j] for row in self.rows]


def validate_table(table: RawTable) -> List[ErrorDetail]:
    """
    Check shape and numeric cells of a raw table

    Returns:
        List of problems (empty if the table is valid)

    Notes:
        - n >= 1 and m >= 1
        - every row has exactly m cells
        - numeric cells are finite and >= 0
    """
    errors: List[ErrorDetail] = []
    m = len(table.column_names)

    if m < 1:
        errors.append(ErrorDetail("table has no feature columns"))
    if len(table.rows) < 1:
        errors.append(ErrorDetail("table has no data rows"))
    if len(table.row_names) != len(table.rows):
        errors.append(ErrorDetail(f"expected {len(table.rows)} row names, got {len(table.row_names)}"))

    for i, row in enumerate(table.rows, start=1):
        if len(row) != m:
            errors.append(ErrorDetail(f"row has {len(row)} cells, expected {m}", row=i))
            continue
        for j, cell in enumerate(row):
            if cell_kind(cell) != "number":
                continue
            value = float(cell)
            if not math.isfinite(value):
                errors.append(ErrorDetail("numeric cell is not finite", column=table.column_names[j], row=i))
            elif value < 0:
                errors.append(ErrorDetail(f"negative numeric cell {value!r}", column=table.column_names[j], row=i))

    return errors


@dataclass(frozen=True)
class FeatureSpec:
    """Fitness function configured for one column"""

    column: int
    kind: FitnessKind
    target_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", FitnessKind.parse(self.kind))
        object.__setattr__(self, "target_labels", tuple(self.target_labels or ()))
        if self.kind is FitnessKind.OVERLAP and not self.target_labels:
            raise ValidationError.single("overlap fitness requires a non-empty list of target labels")


# ============================================================================
# GENE VARIANT FITNESS
# ============================================================================

def variant_fitness(
        kind: Union[FitnessKind, str],
        column: Sequence[Cell],
        target_labels: Sequence[str] = ()
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Apply a gene variant fitness function to one column

    Args:
        kind: boolean | percentage | inverse_percentage | overlap
        column: Cells of the column (numbers, label tuples or None)
        target_labels: Labels scored by the overlap function

    Returns:
        (values, present) arrays of length n; missing cells give 0 / False

    Raises:
        ValidationError: Negative numbers, all-missing columns, mixed or
            unsuitable cell kinds (row coordinates attached)

    Notes:
        - percentage = a / max, inverse = 1 - a/max (max over present cells)
        - zero max: percentage -> 0, inverse -> 1 (zero cost is best)
        - overlap = matched targets / number of targets
    """
    kind = FitnessKind.parse(kind)
    cells = list(column)
    if not cells:
        raise ValidationError.single("column has no cells")

    kinds = [cell_kind(cell) for cell in cells]
    present = np.array([k != "missing" for k in kinds], dtype=bool)
    if not present.any():
        raise ValidationError.single("column has only missing cells")

    seen = {k for k in kinds if k != "missing"}
    if len(seen) > 1:
        first = next(k for k in kinds if k != "missing")
        odd_row = next(i for i, k in enumerate(kinds, start=1) if k not in ("missing", first))
        raise ValidationError.single("column mixes numbers and label lists", row=odd_row)

    values = np.zeros(len(cells), dtype=float)

    if kind is FitnessKind.BOOLEAN:
        values[present] = 1.0
        return values, present

    if kind.is_numeric:
        if "labels" in seen:
            raise ValidationError.single(
                f"label cell in {kind.value} column", row=kinds.index("labels") + 1
            )
        numbers = np.array([float(c) if c is not None else 0.0 for c in cells], dtype=float)
        errors = [
            ErrorDetail(f"negative numeric cell {float(numbers[i])!r}", row=int(i) + 1)
            for i in np.flatnonzero(present & (numbers < 0))
        ]
        errors += [
            ErrorDetail("numeric cell is not finite", row=int(i) + 1)
            for i in np.flatnonzero(present & ~np.isfinite(numbers))
        ]
        if errors:
            raise ValidationError(errors)

        col_max = numbers[present].max()
        if col_max == 0:
            logger.warning("⚠️ Column maximum is 0, using degenerate %s values", kind.value)
            values[present] = 1.0 if kind is FitnessKind.INVERSE_PERCENTAGE else 0.0
            return values, present

        ratio = numbers / col_max
        if kind is FitnessKind.PERCENTAGE:
            values[present] = ratio[present]
        else:
            values[present] = 1.0 - ratio[present]
        return values, present

    # Overlap
    targets = tuple(target_labels)
    if not targets:
        raise ValidationError.single("overlap fitness requires a non-empty list of target labels")
    if "number" in seen:
        raise ValidationError.single("numeric cell in overlap column", row=kinds.index("number") + 1)
    for i, cell in enumerate(cells):
        if cell is None:
            continue
        labels = set(cell)
        values[i] = sum(1 for label in targets if label in labels) / len(targets)
    return values, present


# ============================================================================
# POPULATION
# ============================================================================

@dataclass(frozen=True)
class Population:
    """
    Gene variant fitness matrix with presence mask

    Immutable: both arrays are stored read-only. Rows are organisms,
    columns are genes.
    """

    values: np.ndarray
    present: np.ndarray
    gene_names: Tuple[str, ...] = ()
    organism_names: Tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, order="C", copy=True)
        present = np.array(self.present, dtype=bool, order="C", copy=True)
        if values.ndim != 2 or values.shape != present.shape:
            raise ValidationError.single(
                f"population values {values.shape} and mask {present.shape} must be matching 2-D arrays"
            )
        n, m = values.shape
        if n < 1 or m < 1:
            raise ValidationError.single("population needs at least one organism and one gene")
        if not np.isfinite(values).all():
            raise ValidationError.single("population contains non-finite values")
        if np.any(values[~present] != 0.0):
            raise ValidationError.single("non-present cells must hold exactly 0")
        if np.any((values < 0.0) | (values > 1.0)):
            raise ValidationError.single("gene variant fitness must lie in [0, 1]")

        values.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "present", present)
        object.__setattr__(self, "gene_names",
                           tuple(self.gene_names) or tuple(f"gene-{j + 1}" for j in range(m)))
        object.__setattr__(self, "organism_names",
                           tuple(self.organism_names) or tuple(f"row-{i + 1}" for i in range(n)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def gene(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def organism(self, i: int) -> np.ndarray:
        return self.values[i, :]


def build_population(table: RawTable, specs: Sequence[FeatureSpec]) -> Population:
    """
    Build the population Phi(X) once, before any simulation

    Args:
        table: Validated raw table
        specs: Exactly one FeatureSpec per column

    Returns:
        Immutable Population

    Raises:
        ValidationError: Spec/column mismatch or fitness errors, with the
            column name attached to every problem
    """
    by_column = {}
    errors: List[ErrorDetail] = []
    for spec in specs:
        if not 0 <= spec.column < table.m:
            errors.append(ErrorDetail(f"fitness spec for unknown column index {spec.column}"))
        elif spec.column in by_column:
            errors.append(ErrorDetail("more than one fitness spec", column=table.column_names[spec.column]))
        else:
            by_column[spec.column] = spec
    for j, name in enumerate(table.column_names):
        if j not in by_column:
            errors.append(ErrorDetail("column has no fitness spec", column=name))
    if errors:
        raise ValidationError(errors)

    values = np.zeros((table.n, table.m), dtype=float)
    present = np.zeros((table.n, table.m), dtype=bool)
    for j, name in enumerate(table.column_names):
        spec = by_column[j]
        try:
            values[:, j], present[:, j] = variant_fitness(spec.kind, table.column(j), spec.target_labels)
        except ValidationError as e:
            errors.extend(ErrorDetail(err.message, column=name, row=err.row) for err in e.errors)
    if errors:
        raise ValidationError(errors)

    population = Population(values, present, table.column_names, table.row_names)
    logger.info("✅ Built population with %d organisms x %d genes", population.n, population.m)
    return population


# ============================================================================
# DERIVED QUANTITIES
# ============================================================================

def organism_fitness(pop: Population, gamma: Sequence[float]) -> np.ndarray:
    """
    Linear organism fitness r_i = sum_j gamma_j * phi_ij

    Raises:
        ValidationError: If gamma does not have one entry per gene
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (pop.m,):
        raise ValidationError.single(f"gene fitness has shape {gamma.shape}, expected ({pop.m},)")
    return np.sum(pop.values * gamma[None, :], axis=1)


@dataclass(frozen=True)
class KinshipMatrix:
    """Symmetric similarity matrix between genes or between organisms"""

    values: np.ndarray
    axis: Axis

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "axis", Axis(self.axis))


def kinship(pop: Population, axis: Union[Axis, str]) -> KinshipMatrix:
    """
    Kinship = 1 - Euclidean distance / vector length

    Args:
        pop: Population
        axis: 'gene' compares columns (length n), 'organism' compares rows (length m)
    """
    axis = Axis(axis)
    vectors = pop.values.T if axis is Axis.GENE else pop.values
    scale = vectors.shape[1]
    diff = vectors[:, None, :] - vectors[None, :, :]
    distance = np.sqrt(np.sum(diff * diff, axis=-1))
    return KinshipMatrix(1.0 - distance / scale, axis)


@dataclass(frozen=True)
class ScaleConstants:
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValidationError.single(f"rho must be positive, got {self.rho!r}")


def initial_fitness_range(r0: Sequence[float]) -> ScaleConstants:
    """
    Spread of the initial organism fitness

    Notes:
        - rho = max - min
        - all equal (spread <= RHO_TIE_TOLERANCE * max): rho = max
        - all zero: rho = 1
    """
    r0 = np.asarray(r0, dtype=float)
    high, low = float(r0.max()), float(r0.min())
    rho = high - low
    if rho > RHO_TIE_TOLERANCE * high:
        return ScaleConstants(rho)
    if high > 0:
        logger.warning("⚠️ Initial organism fitness has no spread, using rho = max(r0) = %.6g", high)
        return ScaleConstants(high)
    logger.warning("⚠️ Initial organism fitness is all zero, using rho = %s", RHO_FINAL_FALLBACK)
    return ScaleConstants(RHO_FINAL_FALLBACK)
