"""
Read-side analysis of simulation traces
=======================================

Rankings, evolutionary stable equilibrium reports, gene relevance and
trajectory velocities. Everything here is a pure function of an immutable
trace (plus the population it was computed on).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from evoweights.core.engine import ClampEvent, Trace
from evoweights.core.model import (
    KinshipMatrix,
    Population,
    ScaleConstants,
    initial_fitness_range,
    kinship,
    organism_fitness,
)
from evoweights.core.strategies import StrategyDiagnostics, sign_scenarios

logger = logging.getLogger(__name__)


# ============================================================================
# RANKING
# ============================================================================

@dataclass(frozen=True)
class RankEntry:
    index: int
    name: str
    fitness: float
    rank: int


@dataclass(frozen=True)
class Ranking:
    """Organisms sorted by fitness, best first"""

    entries: Tuple[RankEntry, ...]
    iteration: Optional[int] = None

    @property
    def order(self) -> Tuple[int, ...]:
        return tuple(entry.index for entry in self.entries)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(entry.name for entry in self.entries)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(e.rank, e.name, e.fitness) for e in self.entries],
            columns=["rank", "name", "fitness"],
        )


def rank(r: Sequence[float], names: Optional[Sequence[str]] = None, iteration: Optional[int] = None) -> Ranking:
    """
    Sort organisms by fitness

    Args:
        r: Organism fitness vector
        names: Organism names (defaults to row-1..row-n)
        iteration: Iteration the fitness was taken at

    Returns:
        Ranking sorted by fitness descending, ties by ascending row index

    Notes:
        - tied organisms share the smaller rank number (1, 1, 3, ...)
    """
    r = np.asarray(r, dtype=float)
    if names is None:
        names = [f"row-{i + 1}" for i in range(r.size)]

    frame = pd.DataFrame({"index": np.arange(r.size), "name": list(names), "fitness": r})
    frame["rank"] = frame["fitness"].rank(method="min", ascending=False).astype(int)
    # mergesort is stable, so equal fitness keeps the input order
    frame = frame.sort_values("fitness", ascending=False, kind="mergesort")

    entries = tuple(
        RankEntry(int(i), str(name), float(fitness), int(position))
        for i, name, fitness, position in zip(frame["index"], frame["name"], frame["fitness"], frame["rank"])
    )
    return Ranking(entries, iteration)


# ============================================================================
# TRAJECTORIES
# ============================================================================

def gamma_velocity(trace: Trace) -> pd.DataFrame:
    """
    Finite-difference speed of the gene fitness

    Returns:
        DataFrame indexed by iteration k >= 1, one column per gene,
        holding gamma^(k) - gamma^(k-1)
    """
    series = trace.gamma_series()
    velocity = np.diff(series, axis=0)
    index = pd.Index([record.k for record in trace.records[1:]], name="iteration")
    return pd.DataFrame(velocity, index=index, columns=list(trace.gene_names))


def gene_relevance(trace: Trace) -> pd.DataFrame:
    """
    Per-gene relevance table of a run

    Returns:
        DataFrame with columns gene, gamma_initial, gamma_final, change, rank,
        ordered by final gamma (ties by column order)
    """
    initial = trace.records[0].gamma
    final = trace.final.gamma
    frame = pd.DataFrame({
        "gene": list(trace.gene_names),
        "gamma_initial": initial,
        "gamma_final": final,
        "change": final - initial,
    })
    frame["rank"] = frame["gamma_final"].rank(method="min", ascending=False).astype(int)
    return frame.sort_values("gamma_final", ascending=False, kind="mergesort").reset_index(drop=True)


# ============================================================================
# ESE REPORT
# ============================================================================

@dataclass(frozen=True)
class EseReport:
    """
    Final state of a run

    velocity is gamma^(K) - gamma^(K-1) (zeros for a trace with only
    record 0). Kinships, rho and the sign diagnostics of the final
    snapshot are attached for reporting.
    """

    converged: bool
    status: str
    iterations: int
    gene_names: Tuple[str, ...]
    gamma: np.ndarray
    r: np.ndarray
    ranking: Ranking
    alpha_gene: Dict[str, float]
    alpha_organism: Dict[str, float]
    top_gene: str
    bottom_gene: str
    velocity: np.ndarray
    gene_kinship: KinshipMatrix
    organism_kinship: KinshipMatrix
    rho: float
    diagnostics: StrategyDiagnostics
    clamp_events: Tuple[ClampEvent, ...]


def summarize(trace: Trace, pop: Population) -> EseReport:
    """
    Build the ESE report of a trace

    Args:
        trace: Non-empty simulation trace
        pop: Population the trace was computed on

    Returns:
        Deterministic EseReport
    """
    final = trace.final
    if len(trace.records) > 1:
        velocity = final.gamma - trace.records[-2].gamma
    else:
        velocity = np.zeros_like(final.gamma)

    # argmax/argmin return the first index on ties
    top = int(np.argmax(final.gamma))
    bottom = int(np.argmin(final.gamma))

    gene_kinship = kinship(pop, "gene")
    organism_kinship = kinship(pop, "organism")
    diagnostics = sign_scenarios(pop, final.gamma, final.r, gene_kinship, organism_kinship,
                                 ScaleConstants(trace.rho))

    report = EseReport(
        converged=trace.converged,
        status=trace.status.value,
        iterations=trace.iterations,
        gene_names=tuple(trace.gene_names),
        gamma=final.gamma,
        r=final.r,
        ranking=rank(final.r, trace.organism_names, final.k),
        alpha_gene=dict(final.alpha_gene),
        alpha_organism=dict(final.alpha_organism),
        top_gene=trace.gene_names[top],
        bottom_gene=trace.gene_names[bottom],
        velocity=velocity,
        gene_kinship=gene_kinship,
        organism_kinship=organism_kinship,
        rho=trace.rho,
        diagnostics=diagnostics,
        clamp_events=tuple(trace.clamp_events()),
    )
    logger.info("📊 Top gene %s (%.4f), best organism %s",
                report.top_gene, final.gamma[top], report.ranking.entries[0].name)
    return report


# ============================================================================
# STATIC DIAGNOSTICS
# ============================================================================

@dataclass(frozen=True)
class StaticReport:
    """Everything known about a population before the first iteration"""

    population: Population
    gamma: np.ndarray
    r: np.ndarray
    gene_kinship: KinshipMatrix
    organism_kinship: KinshipMatrix
    rho: float
    diagnostics: StrategyDiagnostics


def static_analysis(pop: Population, gamma: Sequence[float]) -> StaticReport:
    """
    Kinships, initial organism fitness, rho and iteration-0 sign scenarios

    Args:
        pop: Population
        gamma: Initial gene fitness
    """
    gamma = np.asarray(gamma, dtype=float)
    r0 = organism_fitness(pop, gamma)
    scale = initial_fitness_range(r0)
    gene_kinship = kinship(pop, "gene")
    organism_kinship = kinship(pop, "organism")
    diagnostics = sign_scenarios(pop, gamma, r0, gene_kinship, organism_kinship, scale)
    return StaticReport(pop, gamma, r0, gene_kinship, organism_kinship, scale.rho, diagnostics)
