"""
evoweights - feature relevance weights from evolutionary game dynamics
"""

__version__ = "0.1.0"

from evoweights.core.engine import SimConfig, Trace, simulate, simulate_self_consistent
from evoweights.core.model import FeatureSpec, FitnessKind, Population, RawTable, build_population
from evoweights.core.strategies import StrategyMix
from evoweights.exceptions import EvoWeightsError, SimulationError, ValidationError

__all__ = [
    '__version__',
    'SimConfig',
    'Trace',
    'simulate',
    'simulate_self_consistent',
    'FeatureSpec',
    'FitnessKind',
    'Population',
    'RawTable',
    'build_population',
    'StrategyMix',
    'EvoWeightsError',
    'SimulationError',
    'ValidationError',
]
