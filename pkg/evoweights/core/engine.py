"""
Simulation engine
=================

Iterates the replicator dynamics of gene fitness:

    snapshot (gamma^k, r^k) -> strategies -> mix -> accumulate -> replicator -> r^(k+1)

until the gene fitness stops moving (L-inf change below epsilon) or the
iteration budget is used up. In self-consistent mode the mixing weights
evolve with their own replicator equation after every gamma update.
"""

import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from evoweights.core.model import (
    KinshipMatrix,
    Population,
    ScaleConstants,
    initial_fitness_range,
    kinship,
    organism_fitness,
)
from evoweights.core.strategies import (
    GENE_STRATEGIES,
    ORGANISM_STRATEGIES,
    DeltaMatrix,
    MixMode,
    SelfishScale,
    StrategyMix,
    gs_altruistic,
    gs_dominant,
    mix,
    os_balanced,
    os_selfish,
)
from evoweights.exceptions import ErrorDetail, SimulationError, ValidationError

logger = logging.getLogger(__name__)

# Delta_j is clamped to (-1, 1] so that gamma_j (1 + Delta_j) stays positive
CLAMP_LOWER = -1.0 + 1e-6
CLAMP_UPPER = 1.0
INITIAL_GAMMA_TOLERANCE = 1e-9


class GeneEffectScale(str, Enum):
    """MEAN averages |Delta| over all cells, PER_EQUATION multiplies that mean by m"""

    MEAN = "mean"
    PER_EQUATION = "per_equation"


class RunStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class GeneFitnessState:
    """Normalized gene fitness vector at iteration k"""

    gamma: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=float, copy=True)
        if gamma.ndim != 1 or gamma.size < 1:
            raise ValidationError.single("gene fitness must be a non-empty vector")
        if not np.isfinite(gamma).all() or np.any(gamma < 0):
            raise ValidationError.single("gene fitness must be finite and non-negative")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)


# ============================================================================
# CONFIGURATION
# ============================================================================

@dataclass(frozen=True)
class SimConfig:
    """
    Simulation settings

    Args:
        initial_gamma: Starting gene fitness (None = uniform 1/m)
        epsilon: Convergence tolerance on the L-inf change
        max_iterations: Iteration budget (also the early-stopping knob)
        mix: Strategy weights and mixing mode
        clamp: Clamp accumulated Delta_j to (-1, 1]
        gene_effect_scale: mean | per_equation for gene-side effects
        selfish_scale: printed | per_equation denominator of OS-Selfish
        workers: Threads used to evaluate independent strategy kernels
    """

    initial_gamma: Optional[Tuple[float, ...]] = None
    epsilon: float = 1e-8
    max_iterations: int = 500
    mix: StrategyMix = field(default_factory=StrategyMix)
    clamp: bool = True
    gene_effect_scale: GeneEffectScale = GeneEffectScale.MEAN
    selfish_scale: SelfishScale = SelfishScale.PRINTED
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gene_effect_scale", GeneEffectScale(self.gene_effect_scale))
        object.__setattr__(self, "selfish_scale", SelfishScale(self.selfish_scale))
        if self.initial_gamma is not None:
            object.__setattr__(self, "initial_gamma", tuple(float(g) for g in self.initial_gamma))

        errors: List[ErrorDetail] = []
        if not self.epsilon > 0:
            errors.append(ErrorDetail(f"epsilon must be > 0, got {self.epsilon!r}"))
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            errors.append(ErrorDetail(f"max_iterations must be an integer >= 1, got {self.max_iterations!r}"))
        if int(self.workers) != self.workers or self.workers < 1:
            errors.append(ErrorDetail(f"workers must be an integer >= 1, got {self.workers!r}"))
        if self.initial_gamma is not None:
            gamma = np.asarray(self.initial_gamma, dtype=float)
            if gamma.size == 0 or not np.isfinite(gamma).all() or np.any(gamma < 0):
                errors.append(ErrorDetail("initial_gamma must be finite and non-negative"))
            elif abs(gamma.sum() - 1.0) > INITIAL_GAMMA_TOLERANCE:
                errors.append(ErrorDetail(f"initial_gamma must sum to 1 (got {gamma.sum():.12g})"))
        if self.mix.mode is MixMode.SELF_CONSISTENT:
            unknown = [name for name in self.mix.gene_weights if name not in GENE_STRATEGIES]
            unknown += [name for name in self.mix.organism_weights if name not in ORGANISM_STRATEGIES]
            errors += [ErrorDetail(f"self-consistent mixing cannot evolve unknown strategy '{name}'")
                       for name in unknown]
        if errors:
            raise ValidationError(errors)

    def initial_state(self, m: int) -> GeneFitnessState:
        if self.initial_gamma is None:
            return GeneFitnessState(np.full(m, 1.0 / m))
        gamma = np.asarray(self.initial_gamma, dtype=float)
        if gamma.shape != (m,):
            raise ValidationError.single(f"initial_gamma has {gamma.size} entries, expected {m}")
        return GeneFitnessState(gamma / gamma.sum())


# ============================================================================
# TRACE
# ============================================================================

@dataclass(frozen=True)
class ClampEvent:
    iteration: int
    gene: int
    raw: float
    clamped: float


@dataclass(frozen=True)
class IterationRecord:
    """
    State after iteration k

    delta_bar, delta and clamp_events describe the step that produced this
    record (evaluated on snapshot k-1); they are empty for record 0.
    """

    k: int
    gamma: np.ndarray
    r: np.ndarray
    alpha_gene: Dict[str, float]
    alpha_organism: Dict[str, float]
    delta_bar: Dict[str, float] = field(default_factory=dict)
    delta: Optional[np.ndarray] = None
    clamp_events: Tuple[ClampEvent, ...] = ()


@dataclass(frozen=True)
class Trace:
    """Full iteration history of one simulation"""

    records: Tuple[IterationRecord, ...]
    status: RunStatus
    gene_names: Tuple[str, ...]
    organism_names: Tuple[str, ...]
    rho: float
    config: SimConfig

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def iterations(self) -> int:
        return self.records[-1].k

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    def gamma_series(self) -> np.ndarray:
        return np.vstack([record.gamma for record in self.records])

    def r_series(self) -> np.ndarray:
        return np.vstack([record.r for record in self.records])

    def clamp_events(self) -> List[ClampEvent]:
        return [event for record in self.records for event in record.clamp_events]


# ============================================================================
# STEP OPERATIONS
# ============================================================================

def accumulate(
        delta_g: DeltaMatrix,
        delta_w: DeltaMatrix,
        clamp: bool = True,
        iteration: int = 0
) -> Tuple[np.ndarray, List[ClampEvent]]:
    """
    Collect the contributions of all organisms per gene

    Args:
        delta_g: Mixed gene-strategy contributions
        delta_w: Mixed organism-strategy contributions
        clamp: Clamp each Delta_j to [-1 + 1e-6, 1]
        iteration: Iteration number stored on clamp events

    Returns:
        (Delta_j vector of length m, clamp events)

    Raises:
        SimulationError: Non-finite contributions or mismatched shapes
    """
    g, w = np.asarray(delta_g.values), np.asarray(delta_w.values)
    if g.shape != w.shape:
        raise SimulationError(f"gene contributions {g.shape} and organism contributions {w.shape} differ")
    if not (np.isfinite(g).all() and np.isfinite(w).all()):
        raise SimulationError("non-finite strategy contributions")

    delta = (g + w).sum(axis=0)
    events: List[ClampEvent] = []
    if clamp:
        clamped = np.clip(delta, CLAMP_LOWER, CLAMP_UPPER)
        for j in np.flatnonzero(clamped != delta):
            events.append(ClampEvent(iteration, int(j), float(delta[j]), float(clamped[j])))
            logger.warning("⚠️ Iteration %d: Delta_%d = %.6g clamped to %.6g",
                           iteration, j, delta[j], clamped[j])
        delta = clamped
    return delta, events


def replicator_step(state: GeneFitnessState, delta_j: Sequence[float]) -> GeneFitnessState:
    """
    gamma~_j = gamma_j (1 + Delta_j), then normalize to sum 1

    Raises:
        SimulationError: Delta_j <= -1 or a zero normalizer
    """
    delta_j = np.asarray(delta_j, dtype=float)
    if delta_j.shape != state.gamma.shape:
        raise SimulationError(f"Delta has shape {delta_j.shape}, expected {state.gamma.shape}")
    if not np.isfinite(delta_j).all():
        raise SimulationError("non-finite accumulated Delta")
    if np.any(delta_j <= -1.0):
        raise SimulationError("accumulated Delta_j <= -1 would make gene fitness negative; enable clamping")

    grown = state.gamma * (1.0 + delta_j)
    total = grown.sum()
    if total == 0:
        raise SimulationError("gene fitness normalizer is zero")
    return GeneFitnessState(grown / total, state.iteration + 1)


def strategy_effect(
        delta: DeltaMatrix,
        gamma: Sequence[float],
        axis: str,
        scale: GeneEffectScale = GeneEffectScale.MEAN
) -> float:
    """
    Absolute fitness effect of one strategy on a snapshot

    Notes:
        - organism axis: mean_i sum_j |Delta_ij| gamma_j
        - gene axis: mean_ij |Delta_ij| (times m with per_equation)
    """
    magnitude = np.abs(delta.values)
    if axis == "organism":
        return float((magnitude @ np.asarray(gamma, dtype=float)).mean())
    if axis != "gene":
        raise ValueError(f"unknown axis '{axis}'")
    effect = float(magnitude.mean())
    if GeneEffectScale(scale) is GeneEffectScale.PER_EQUATION:
        effect *= magnitude.shape[1]
    return effect


def alpha_replicator_step(alpha: Mapping[str, float], delta_bars: Mapping[str, float]) -> Dict[str, float]:
    """alpha~_s = alpha_s (1 + Delta-bar_s), then normalize within the group"""
    grown = {name: weight * (1.0 + delta_bars[name]) for name, weight in alpha.items()}
    total = sum(grown.values())
    if total <= 0:
        raise SimulationError("mixing weights normalizer is not positive")
    return {name: value / total for name, value in grown.items()}


# ============================================================================
# SIMULATION LOOP
# ============================================================================

@dataclass(frozen=True)
class StaticQuantities:
    """Quantities fixed for the whole run: both kinships and rho"""

    gene_kinship: KinshipMatrix
    organism_kinship: KinshipMatrix
    scale: ScaleConstants


@contextmanager
def _executor(workers: int) -> Iterator[Optional[Executor]]:
    if workers <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield pool


def evaluate_strategies(
        pop: Population,
        gamma: np.ndarray,
        r: np.ndarray,
        statics: StaticQuantities,
        selfish_scale: SelfishScale,
        pool: Optional[Executor] = None
) -> Dict[str, DeltaMatrix]:
    """
    All four strategies on one (gamma, r) snapshot

    Returns:
        short name -> DeltaMatrix; the result does not depend on the pool
    """
    kernels = {
        "dominant": lambda: gs_dominant(pop, gamma),
        "altruistic": lambda: gs_altruistic(pop, gamma, statics.gene_kinship),
        "balanced": lambda: os_balanced(pop, gamma, r),
    }
    if pool is None:
        deltas = {name: kernel() for name, kernel in kernels.items()}
    else:
        futures = {name: pool.submit(kernel) for name, kernel in kernels.items()}
        deltas = {name: futures[name].result() for name in kernels}
    deltas["selfish"] = os_selfish(pop, r, statics.organism_kinship, statics.scale,
                                   deltas["balanced"], selfish_scale)
    return deltas


def _run(pop: Population, config: SimConfig, evolve_alpha: bool) -> Trace:
    state = config.initial_state(pop.m)
    r = organism_fitness(pop, state.gamma)
    statics = StaticQuantities(kinship(pop, "gene"), kinship(pop, "organism"), initial_fitness_range(r))
    alpha_gene = dict(config.mix.gene_weights)
    alpha_organism = dict(config.mix.organism_weights)
    mode = MixMode.SELF_CONSISTENT if evolve_alpha else MixMode.FIXED

    records = [IterationRecord(0, state.gamma, r, dict(alpha_gene), dict(alpha_organism))]
    status = RunStatus.MAX_ITERATIONS
    logger.info("🔍 Simulating %d organisms x %d genes (%s mix, max %d iterations)",
                pop.n, pop.m, mode.value, config.max_iterations)

    if pop.m == 1:
        # A single gene keeps gamma = [1]; nothing competes
        records.append(IterationRecord(1, state.gamma, r, dict(alpha_gene), dict(alpha_organism),
                                       {}, np.zeros(1)))
        logger.info("✅ Single-gene population is trivially at equilibrium")
        return Trace(tuple(records), RunStatus.CONVERGED, pop.gene_names, pop.organism_names,
                     statics.scale.rho, config)

    with _executor(config.workers) as pool:
        for k in range(config.max_iterations):
            deltas = evaluate_strategies(pop, state.gamma, r, statics, config.selfish_scale, pool)
            effects = {
                name: strategy_effect(deltas[name], state.gamma, "gene", config.gene_effect_scale)
                for name in GENE_STRATEGIES
            }
            effects.update({
                name: strategy_effect(deltas[name], state.gamma, "organism")
                for name in ORGANISM_STRATEGIES
            })

            snapshot_mix = StrategyMix(alpha_gene, alpha_organism, mode)
            gene_side = {name: deltas[name] for name in GENE_STRATEGIES}
            organism_side = {name: deltas[name] for name in ORGANISM_STRATEGIES}
            mixed_g, mixed_w = mix(gene_side, organism_side, snapshot_mix)
            delta_j, events = accumulate(mixed_g, mixed_w, config.clamp, iteration=k + 1)
            new_state = replicator_step(state, delta_j)

            new_alpha_gene, new_alpha_organism = alpha_gene, alpha_organism
            if evolve_alpha:
                new_alpha_gene = alpha_replicator_step(alpha_gene, effects)
                new_alpha_organism = alpha_replicator_step(alpha_organism, effects)

            new_r = organism_fitness(pop, new_state.gamma)
            records.append(IterationRecord(
                k + 1, new_state.gamma, new_r, dict(new_alpha_gene), dict(new_alpha_organism),
                effects, delta_j, tuple(events)
            ))

            change = float(np.max(np.abs(new_state.gamma - state.gamma)))
            if evolve_alpha:
                change = max(change, _alpha_change(alpha_gene, new_alpha_gene),
                             _alpha_change(alpha_organism, new_alpha_organism))
            logger.debug("Iteration %d: gamma=%s change=%.3e", k + 1, np.round(new_state.gamma, 6), change)

            state, r = new_state, new_r
            alpha_gene, alpha_organism = new_alpha_gene, new_alpha_organism
            if change < config.epsilon:
                status = RunStatus.CONVERGED
                break

    if status is RunStatus.CONVERGED:
        logger.info("✅ Converged after %d iterations", records[-1].k)
    else:
        logger.info("⚠️ Stopped after %d iterations without reaching epsilon=%.1e",
                    records[-1].k, config.epsilon)
    return Trace(tuple(records), status, pop.gene_names, pop.organism_names, statics.scale.rho, config)


def _alpha_change(before: Mapping[str, float], after: Mapping[str, float]) -> float:
    return max(abs(after[name] - before[name]) for name in before)


def simulate(pop: Population, config: SimConfig) -> Trace:
    """
    Run the simulation with the configured mix

    Args:
        pop: Population built once before the run
        config: SimConfig; a self-consistent mix evolves its weights

    Returns:
        Trace with one record per iteration (record 0 = initial state)
    """
    return _run(pop, config, evolve_alpha=config.mix.mode is MixMode.SELF_CONSISTENT)


def simulate_self_consistent(pop: Population, config: SimConfig) -> Trace:
    """
    Run with mixing weights that evolve by their own replicator equation

    Gamma is updated with the snapshot weights alpha^k, then alpha advances.
    Convergence requires both gamma and alpha to settle.
    """
    unknown = [name for name in config.mix.gene_weights if name not in GENE_STRATEGIES]
    unknown += [name for name in config.mix.organism_weights if name not in ORGANISM_STRATEGIES]
    if unknown:
        raise ValidationError([ErrorDetail(f"self-consistent mixing cannot evolve unknown strategy '{name}'")
                               for name in unknown])
    return _run(pop, config, evolve_alpha=True)
