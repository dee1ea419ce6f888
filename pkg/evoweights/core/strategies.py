"""
Evolutionary strategies
=======================

Each strategy is a pure kernel over one (population, gamma, r) snapshot and
returns an n x m matrix of resource changes Delta_ij:

    gene side:      GS-Dominant, GS-Altruistic
    organism side:  OS-Balanced, OS-Selfish

Contributions at non-present cells are always 0.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from evoweights.core.model import KinshipMatrix, Population, ScaleConstants
from evoweights.exceptions import ErrorDetail, ValidationError

logger = logging.getLogger(__name__)

ALPHA_SUM_TOLERANCE = 1e-12


class Strategy(str, Enum):
    GS_DOMINANT = "gs_dominant"
    GS_ALTRUISTIC = "gs_altruistic"
    OS_BALANCED = "os_balanced"
    OS_SELFISH = "os_selfish"
    MIXED_GENE = "mixed_gene"
    MIXED_ORGANISM = "mixed_organism"


# Short names used for mixing weights (config files, traces, reports)
GENE_STRATEGIES: Dict[str, Strategy] = {
    "dominant": Strategy.GS_DOMINANT,
    "altruistic": Strategy.GS_ALTRUISTIC,
}
ORGANISM_STRATEGIES: Dict[str, Strategy] = {
    "balanced": Strategy.OS_BALANCED,
    "selfish": Strategy.OS_SELFISH,
}


class MixMode(str, Enum):
    FIXED = "fixed"
    SELF_CONSISTENT = "self_consistent"


class SelfishScale(str, Enum):
    """
    Denominator of OS-Selfish

    PRINTED divides by r_i, PER_EQUATION divides by 2 r_i. Both keep the
    sign pattern and the zero rows.
    """

    PRINTED = "printed"
    PER_EQUATION = "per_equation"


@dataclass(frozen=True)
class DeltaMatrix:
    """Per-strategy resource contributions, one row per organism"""

    strategy: Strategy
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if not np.isfinite(values).all():
            raise ValidationError.single(f"{Strategy(self.strategy).value} produced non-finite contributions")
        values.setflags(write=False)
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "values", values)

    def column_totals(self) -> np.ndarray:
        return self.values.sum(axis=0)


# ============================================================================
# STRATEGY MIX
# ============================================================================

def validate_weights(weights: Mapping[str, float], label: str) -> list:
    """
    Check one group of mixing weights

    Returns:
        List of ErrorDetail (empty if the weights are a valid convex mix)
    """
    errors = []
    if not weights:
        errors.append(ErrorDetail(f"{label} alphas must not be empty"))
        return errors
    for name, value in weights.items():
        if not np.isfinite(value) or value < 0:
            errors.append(ErrorDetail(f"{label} alpha '{name}' must be a non-negative number, got {value!r}"))
    total = float(sum(weights.values()))
    if abs(total - 1.0) > ALPHA_SUM_TOLERANCE:
        errors.append(ErrorDetail(f"{label} alphas must sum to 1 (got {total:.12g})"))
    return errors


@dataclass(frozen=True)
class StrategyMix:
    """
    Convex weights for combining strategies

    Args:
        gene_weights: e.g. {'dominant': 1.0, 'altruistic': 0.0}
        organism_weights: e.g. {'balanced': 1.0, 'selfish': 0.0}
        mode: fixed weights or self-consistent replicator dynamics on them
    """

    gene_weights: Dict[str, float] = field(default_factory=lambda: {"dominant": 1.0, "altruistic": 0.0})
    organism_weights: Dict[str, float] = field(default_factory=lambda: {"balanced": 1.0, "selfish": 0.0})
    mode: MixMode = MixMode.FIXED

    def __post_init__(self):
        object.__setattr__(self, "gene_weights", {str(k): float(v) for k, v in self.gene_weights.items()})
        object.__setattr__(self, "organism_weights", {str(k): float(v) for k, v in self.organism_weights.items()})
        object.__setattr__(self, "mode", MixMode(self.mode))
        errors = validate_weights(self.gene_weights, "gene") + validate_weights(self.organism_weights, "organism")
        if errors:
            raise ValidationError(errors)

    @classmethod
    def preset(cls, name: str) -> "StrategyMix":
        """
        Named strategy pairings

        Notes:
            - dombal: GS-Dominant + OS-Balanced
            - altsel: GS-Altruistic + OS-Selfish
            - self_consistent: all four at 0.5, evolved by replicator dynamics
        """
        key = name.strip().lower()
        if key == "dombal":
            return cls({"dominant": 1.0, "altruistic": 0.0}, {"balanced": 1.0, "selfish": 0.0})
        if key == "altsel":
            return cls({"dominant": 0.0, "altruistic": 1.0}, {"balanced": 0.0, "selfish": 1.0})
        if key == "self_consistent":
            return cls({"dominant": 0.5, "altruistic": 0.5}, {"balanced": 0.5, "selfish": 0.5},
                       MixMode.SELF_CONSISTENT)
        raise ValidationError.single(f"unknown strategy preset '{name}'")


# ============================================================================
# GENE STRATEGIES
# ============================================================================

def gs_dominant(pop: Population, gamma: Sequence[float]) -> DeltaMatrix:
    """
    GS-Dominant: Delta_ij = (4 gamma_j^2 / n) * (phi_ij - 1/2)

    Genes whose variants are above 50% gain fitness, the others lose it.
    """
    gamma = np.asarray(gamma, dtype=float)
    prefactor = 4.0 * gamma * gamma / pop.n
    values = prefactor[None, :] * (pop.values - 0.5)
    return DeltaMatrix(Strategy.GS_DOMINANT, np.where(pop.present, values, 0.0))


def altruistic_transfer(pop: Population, gamma: Sequence[float], gene_kinship: KinshipMatrix) -> np.ndarray:
    """
    Kinship-weighted transfer term of GS-Altruistic

        D~_ij = (4/m) * sum_{l != j} gamma_l * kappa_jl * (phi_il - phi_ij)
    """
    gamma = np.asarray(gamma, dtype=float)
    weights = gene_kinship.values * gamma[None, :]
    np.fill_diagonal(weights, 0.0)
    transfer = pop.values @ weights.T - pop.values * weights.sum(axis=1)[None, :]
    transfer = (4.0 / pop.m) * transfer
    return np.where(pop.present, transfer, 0.0)


def gs_altruistic(pop: Population, gamma: Sequence[float], gene_kinship: KinshipMatrix) -> DeltaMatrix:
    """
    GS-Altruistic: Delta_ij = Delta^dom_ij * D~_ij / gamma_j

    Notes:
        - Evaluated as (4 gamma_j / n)(phi_ij - 1/2) * D~_ij, which is the
          same expression with gamma_j cancelled; gamma_j = 0 gives 0
        - Takes gene_kinship instead of the dominant deltas so that the
          division by gamma_j never has to be evaluated
    """
    gamma = np.asarray(gamma, dtype=float)
    transfer = altruistic_transfer(pop, gamma, gene_kinship)
    values = (4.0 * gamma / pop.n)[None, :] * (pop.values - 0.5) * transfer
    return DeltaMatrix(Strategy.GS_ALTRUISTIC, np.where(pop.present, values, 0.0))


# ============================================================================
# ORGANISM STRATEGIES
# ============================================================================

def contribution_shares(pop: Population, gamma: Sequence[float], r: Sequence[float]) -> np.ndarray:
    """mu_ij = gamma_j phi_ij / r_i, rows with r_i = 0 are 0"""
    gamma = np.asarray(gamma, dtype=float)
    r = np.asarray(r, dtype=float)
    alive = r > 0
    safe_r = np.where(alive, r, 1.0)
    mu = pop.values * gamma[None, :] / safe_r[:, None]
    return np.where(alive[:, None], mu, 0.0)


def os_balanced(pop: Population, gamma: Sequence[float], r: Sequence[float]) -> DeltaMatrix:
    """
    OS-Balanced: Delta_ij = -(2 r_i / n) * (mu_ij - 1/m)

    An organism penalizes genes it depends on more than the m-th part of its
    fitness. Rows with r_i = 0 are 0.
    """
    r = np.asarray(r, dtype=float)
    mu = contribution_shares(pop, gamma, r)
    values = -(2.0 * r / pop.n)[:, None] * (mu - 1.0 / pop.m)
    values = np.where((r > 0)[:, None] & pop.present, values, 0.0)
    return DeltaMatrix(Strategy.OS_BALANCED, values)


def selfish_transfer(r: Sequence[float], organism_kinship: KinshipMatrix, scale: ScaleConstants) -> np.ndarray:
    """
    Kinship-weighted fitness advantage of each organism

        D~_i = (1/n) * sum_{t != i} kappa_it * (r_i - r_t) / rho
    """
    r = np.asarray(r, dtype=float)
    n = r.shape[0]
    advantage = organism_kinship.values * (r[:, None] - r[None, :])
    np.fill_diagonal(advantage, 0.0)
    return advantage.sum(axis=1) / (n * scale.rho)


def os_selfish(
        pop: Population,
        r: Sequence[float],
        organism_kinship: KinshipMatrix,
        scale: ScaleConstants,
        balanced_deltas: DeltaMatrix,
        selfish_scale: SelfishScale = SelfishScale.PRINTED
) -> DeltaMatrix:
    """
    OS-Selfish: Delta_ij = Delta^bal_ij * D~_i / (c r_i)

    Args:
        pop: Population
        r: Organism fitness of the snapshot
        organism_kinship: Kinship between organisms
        scale: Initial fitness range rho
        balanced_deltas: OS-Balanced on the same snapshot
        selfish_scale: c = 1 (printed) or c = 2 (per_equation)

    Returns:
        DeltaMatrix, rows with r_i = 0 are 0

    Notes:
        - No gamma argument: it enters only through balanced_deltas and r
    """
    r = np.asarray(r, dtype=float)
    factor = 1.0 if SelfishScale(selfish_scale) is SelfishScale.PRINTED else 2.0
    transfer = selfish_transfer(r, organism_kinship, scale)
    alive = r > 0
    ratio = np.where(alive, transfer / np.where(alive, factor * r, 1.0), 0.0)
    values = balanced_deltas.values * ratio[:, None]
    return DeltaMatrix(Strategy.OS_SELFISH, np.where(pop.present, values, 0.0))


# ============================================================================
# MIXING
# ============================================================================

def _combine(deltas: Mapping[str, DeltaMatrix], weights: Mapping[str, float], strategy: Strategy,
             label: str) -> DeltaMatrix:
    errors = validate_weights(weights, label)
    missing = [name for name, alpha in weights.items() if alpha != 0.0 and name not in deltas]
    errors += [ErrorDetail(f"no {label} contributions for strategy '{name}'") for name in missing]
    if errors:
        raise ValidationError(errors)

    shape = next(iter(deltas.values())).values.shape
    total = np.zeros(shape, dtype=float)
    for name, alpha in weights.items():
        if name in deltas:
            total = total + alpha * deltas[name].values
    return DeltaMatrix(strategy, total)


def mix(
        gene_deltas: Mapping[str, DeltaMatrix],
        organism_deltas: Mapping[str, DeltaMatrix],
        strategy_mix: StrategyMix
) -> Tuple[DeltaMatrix, DeltaMatrix]:
    """
    Linear combination of strategy contributions

    Args:
        gene_deltas: short name -> DeltaMatrix ('dominant', 'altruistic', ...)
        organism_deltas: short name -> DeltaMatrix ('balanced', 'selfish', ...)
        strategy_mix: Weights per side; any number of strategies is accepted

    Returns:
        (mixed gene contributions, mixed organism contributions)

    Raises:
        ValidationError: Weights not summing to 1 or a weighted strategy
            without contributions
    """
    return (
        _combine(gene_deltas, strategy_mix.gene_weights, Strategy.MIXED_GENE, "gene"),
        _combine(organism_deltas, strategy_mix.organism_weights, Strategy.MIXED_ORGANISM, "organism"),
    )


# ============================================================================
# SIGN SCENARIOS
# ============================================================================

@dataclass(frozen=True)
class StrategyDiagnostics:
    """
    Contribution shares and sign pairs of the two composite strategies

    gene_signs / organism_signs have shape (n, m, 2). Each entry is a signed
    magnitude level: 0 for an exact zero, +-1 normal, +-2 large, +-3 very large.
    The pair is (dominant factor, altruistic transfer) for genes and
    (balanced factor, selfish transfer) for organisms.
    """

    mu: np.ndarray
    gene_signs: np.ndarray
    organism_signs: np.ndarray


def signed_levels(x: np.ndarray) -> np.ndarray:
    """
    Sign with magnitude bucket relative to the median non-zero magnitude

    Notes:
        - |x| >= 3 * median -> 3, |x| >= 1.5 * median -> 2, otherwise 1
    """
    x = np.asarray(x, dtype=float)
    magnitude = np.abs(x)
    nonzero = magnitude[magnitude > 0]
    levels = np.zeros(x.shape, dtype=int)
    if nonzero.size == 0:
        return levels
    median = float(np.median(nonzero))
    levels[magnitude > 0] = 1
    levels[magnitude >= 1.5 * median] = 2
    levels[magnitude >= 3.0 * median] = 3
    return np.sign(x).astype(int) * levels


def sign_scenarios(
        pop: Population,
        gamma: Sequence[float],
        r: Sequence[float],
        gene_kinship: KinshipMatrix,
        organism_kinship: KinshipMatrix,
        scale: ScaleConstants
) -> StrategyDiagnostics:
    """
    Sign pairs of the altruistic and selfish contributions on one snapshot

    Returns:
        StrategyDiagnostics with mu and both sign-pair tensors
    """
    r = np.asarray(r, dtype=float)
    dominant = gs_dominant(pop, gamma).values
    balanced = os_balanced(pop, gamma, r).values
    gene_transfer = altruistic_transfer(pop, gamma, gene_kinship)
    organism_transfer = np.broadcast_to(selfish_transfer(r, organism_kinship, scale)[:, None], pop.values.shape)
    organism_transfer = np.where(pop.present & (r > 0)[:, None], organism_transfer, 0.0)

    gene_signs = np.stack([signed_levels(dominant), signed_levels(gene_transfer)], axis=-1)
    organism_signs = np.stack([signed_levels(balanced), signed_levels(organism_transfer)], axis=-1)
    return StrategyDiagnostics(contribution_shares(pop, gamma, r), gene_signs, organism_signs)
