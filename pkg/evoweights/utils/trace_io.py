"""
Persistence of simulation results: long-format trace CSV and summary JSON
"""

import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, TextIO, Union

import pandas as pd

from evoweights.core.engine import Trace
from evoweights.utils.formatters import NUMBER_FORMAT

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "kind", "name", "value"]
TRACE_KINDS = ("gamma", "r", "alpha_gene", "alpha_organism", "delta_bar")


@contextmanager
def open_output(path: Union[str, Path]) -> Iterator[TextIO]:
    """
    Context manager for an output file

    Creates missing parent directories and removes a partially written
    file if writing fails.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    f = open(path, "w", encoding="utf-8", newline="")
    try:
        yield f
    except Exception:
        f.close()
        path.unlink(missing_ok=True)
        raise
    else:
        f.close()


def trace_to_frame(trace: Trace) -> pd.DataFrame:
    """
    Flatten a trace into long format

    Args:
        trace: Simulation trace

    Returns:
        DataFrame with columns iteration, kind, name, value

    Notes:
        - per record: gamma per gene, r per organism, alpha_gene,
          alpha_organism, then delta_bar (records k >= 1 only)
        - names are gene/organism names or strategy short names
    """
    rows: List[tuple] = []
    for record in trace.records:
        k = record.k
        rows += [(k, "gamma", name, float(v)) for name, v in zip(trace.gene_names, record.gamma)]
        rows += [(k, "r", name, float(v)) for name, v in zip(trace.organism_names, record.r)]
        rows += [(k, "alpha_gene", name, float(v)) for name, v in record.alpha_gene.items()]
        rows += [(k, "alpha_organism", name, float(v)) for name, v in record.alpha_organism.items()]
        rows += [(k, "delta_bar", name, float(v)) for name, v in record.delta_bar.items()]

    frame = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    frame["iteration"] = frame["iteration"].astype("int64")
    frame["value"] = frame["value"].astype("float64")
    return frame


def write_trace_csv(trace: Trace, path: Union[str, Path]) -> Path:
    """
    Write the long-format trace CSV

    Notes:
        - header iteration,kind,name,value
        - 17 significant digits, '.' decimal separator, LF line endings
    """
    frame = trace_to_frame(trace)
    with open_output(path) as f:
        frame.to_csv(f, index=False, float_format=NUMBER_FORMAT, lineterminator="\n")
    logger.info("✅ Wrote %d trace rows to %s", len(frame), path)
    return Path(path)


def read_trace_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Re-read a trace CSV without losing any digit of the stored values"""
    frame = pd.read_csv(
        path,
        dtype={"iteration": "int64", "kind": str, "name": str},
        float_precision="round_trip",
        keep_default_na=False,
        encoding="utf-8",
    )
    unknown = sorted(set(frame["kind"]) - set(TRACE_KINDS))
    if unknown:
        raise ValueError(f"unknown trace kinds: {', '.join(unknown)}")
    return frame


def dumps_summary(summary: Dict[str, Any]) -> str:
    """Deterministic JSON text (insertion order kept, no timestamps)"""
    return json.dumps(summary, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_summary_json(summary: Dict[str, Any], path: Union[str, Path]) -> Path:
    with open_output(path) as f:
        f.write(dumps_summary(summary))
    logger.info("✅ Wrote summary to %s", path)
    return Path(path)
