"""
Report builders: summary document and human-readable printouts
"""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from evoweights import __version__
from evoweights.components.analysis import EseReport, StaticReport, gene_relevance
from evoweights.core.engine import Trace
from evoweights.utils.formatters import (
    format_fitness,
    format_number,
    format_percentage,
    format_sign_pair,
    get_trend_emoji,
)


def _matrix(values) -> List[List[float]]:
    return [[float(v) for v in row] for row in np.asarray(values)]


def sign_pair_strings(signs: np.ndarray) -> List[List[str]]:
    """(n, m, 2) signed levels -> n x m grid of '(+,--)' strings"""
    return [[format_sign_pair(cell) for cell in row] for row in np.asarray(signs)]


def collect_warnings(report: EseReport, max_iterations: int) -> List[str]:
    warnings = [
        f"iteration {e.iteration}: Delta of gene '{report.gene_names[e.gene]}' "
        f"clamped from {format_number(e.raw)} to {format_number(e.clamped)}"
        for e in report.clamp_events
    ]
    if not report.converged:
        warnings.append(f"did not converge within {max_iterations} iterations")
    return warnings


def build_summary(
        report: EseReport,
        trace: Trace,
        config_echo: Dict[str, Any],
        trace_file: Optional[str] = None
) -> Dict[str, Any]:
    """
    Summary document of one run

    Args:
        report: EseReport from summarize()
        trace: Trace the report was built from
        config_echo: Effective configuration of the run
        trace_file: Trace CSV the gamma series refer to (if written)

    Returns:
        JSON-ready dict with keys meta, config_echo, converged, iterations,
        genes, organisms, alphas, warnings and the analysis attachments

    Notes:
        - contains no timestamps, so identical inputs give identical bytes
    """
    ref_prefix = trace_file or ""
    relevance = gene_relevance(trace)

    return {
        "meta": {
            "tool": "evoweights",
            "version": __version__,
            "status": report.status,
            "n_organisms": int(report.r.size),
            "n_genes": int(report.gamma.size),
        },
        "config_echo": config_echo,
        "converged": bool(report.converged),
        "iterations": int(report.iterations),
        "genes": [
            {
                "name": name,
                "gamma_final": float(gamma),
                "gamma_series_ref": f"{ref_prefix}#kind=gamma&name={name}",
            }
            for name, gamma in zip(report.gene_names, report.gamma)
        ],
        "organisms": [
            {"name": entry.name, "r_final": entry.fitness, "rank": entry.rank}
            for entry in report.ranking.entries
        ],
        "alphas": {
            "gene": {k: float(v) for k, v in report.alpha_gene.items()},
            "organism": {k: float(v) for k, v in report.alpha_organism.items()},
        },
        "warnings": collect_warnings(report, int(config_echo.get("max_iterations", report.iterations))),
        "top_gene": report.top_gene,
        "bottom_gene": report.bottom_gene,
        "velocity": {name: float(v) for name, v in zip(report.gene_names, report.velocity)},
        "rho": float(report.rho),
        "kinship": {
            "gene": _matrix(report.gene_kinship.values),
            "organism": _matrix(report.organism_kinship.values),
        },
        "final_signs": {
            "gene": sign_pair_strings(report.diagnostics.gene_signs),
            "organism": sign_pair_strings(report.diagnostics.organism_signs),
        },
        "gene_relevance": [
            {
                "gene": row.gene,
                "gamma_initial": float(row.gamma_initial),
                "gamma_final": float(row.gamma_final),
                "change": float(row.change),
                "rank": int(row.rank),
            }
            for row in relevance.itertuples(index=False)
        ],
    }


# ============================================================================
# TEXT REPORTS
# ============================================================================

def format_matrix(values, row_labels: Sequence[str], col_labels: Sequence[str], digits: int = 3) -> str:
    """Labelled fixed-point matrix"""
    frame = pd.DataFrame(np.asarray(values, dtype=float), index=list(row_labels), columns=list(col_labels))
    return frame.to_string(float_format=lambda v: format_fitness(v, digits))


def format_sign_matrix(signs: np.ndarray, row_labels: Sequence[str], col_labels: Sequence[str]) -> str:
    frame = pd.DataFrame(sign_pair_strings(signs), index=list(row_labels), columns=list(col_labels))
    return frame.to_string()


def format_static_report(static: StaticReport) -> str:
    """
    Printout of the analyze command

    Sections: population, gene kinship, organism kinship, initial organism
    fitness, rho and the iteration-0 sign scenarios of both composite
    strategies.
    """
    pop = static.population
    genes, organisms = list(pop.gene_names), list(pop.organism_names)

    message = f"🧬 Population ({pop.n} organisms x {pop.m} genes)\n"
    message += format_matrix(pop.values, organisms, genes) + "\n\n"
    message += "🔗 Gene kinship\n"
    message += format_matrix(static.gene_kinship.values, genes, genes) + "\n\n"
    message += "🔗 Organism kinship\n"
    message += format_matrix(static.organism_kinship.values, organisms, organisms) + "\n\n"

    message += "📊 Initial organism fitness\n"
    r0 = pd.DataFrame({"r": static.r}, index=organisms)
    message += r0.to_string(float_format=lambda v: format_fitness(v, 4)) + "\n"
    message += f"rho = {format_fitness(static.rho, 4)}\n\n"

    message += "± Gene strategy signs (dominant, altruistic)\n"
    message += format_sign_matrix(static.diagnostics.gene_signs, organisms, genes) + "\n\n"
    message += "± Organism strategy signs (balanced, selfish)\n"
    message += format_sign_matrix(static.diagnostics.organism_signs, organisms, genes) + "\n"
    return message


def format_run_overview(report: EseReport, top: int = 5) -> str:
    """Short text overview of a finished run"""
    if report.converged:
        message = f"✅ Converged after {report.iterations} iterations\n\n"
    else:
        message = f"⚠️ Stopped after {report.iterations} iterations (not converged)\n\n"

    message += "🧬 Gene fitness\n"
    for name, gamma, speed in zip(report.gene_names, report.gamma, report.velocity):
        message += f"{get_trend_emoji(speed)} {name}: {format_percentage(gamma)}\n"

    message += "\n🏆 Ranking\n"
    for entry in report.ranking.entries[:top]:
        message += f"{entry.rank}. {entry.name}: {format_fitness(entry.fitness, 4)}\n"

    if report.clamp_events:
        message += f"\n⚠️ {len(report.clamp_events)} clamp event(s)"
    return message
