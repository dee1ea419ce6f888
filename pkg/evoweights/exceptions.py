"""
Exception types shared by the engine and the command-line surface
"""

from dataclasses import dataclass, asdict
from typing import Dict, List, Optional, Sequence


@dataclass(frozen=True)
class ErrorDetail:
    """One validation problem with optional table coordinates (1-based data row)"""

    message: str
    column: Optional[str] = None
    row: Optional[int] = None

    def to_dict(self) -> Dict:
        return asdict(self)


class EvoWeightsError(Exception):
    """Base class for all errors raised by evoweights"""


class ValidationError(EvoWeightsError, ValueError):
    """
    Input table or configuration is invalid

    Args:
        errors: Every problem found, not only the first one

    Notes:
        - Validators collect problems into a list and the caller raises once,
          so the CLI can report all coordinates in a single pass
    """

    def __init__(self, errors: Sequence[ErrorDetail]):
        self.errors: List[ErrorDetail] = list(errors)
        super().__init__("; ".join(self._describe(e) for e in self.errors) or "validation failed")

    @staticmethod
    def _describe(error: ErrorDetail) -> str:
        where = []
        if error.column is not None:
            where.append(f"column '{error.column}'")
        if error.row is not None:
            where.append(f"row {error.row}")
        return f"{error.message} ({', '.join(where)})" if where else error.message

    @classmethod
    def single(cls, message: str, column: Optional[str] = None, row: Optional[int] = None) -> "ValidationError":
        return cls([ErrorDetail(message, column, row)])


class SimulationError(EvoWeightsError, RuntimeError):
    """Numerical failure while iterating the simulation"""
