"""Agent-based citation-network growth simulator and analysis toolkit."""

from .distributions import FitnessLaw, OutDegreeDist, Phenotype, PhenotypeMode, RecencyTable
from .engine import SimConfig, run_simulation
from .graph import TemporalDiGraph

__version__ = "0.1.0"

__all__ = [
    "FitnessLaw",
    "OutDegreeDist",
    "Phenotype",
    "PhenotypeMode",
    "RecencyTable",
    "SimConfig",
    "TemporalDiGraph",
    "run_simulation",
    "__version__",
]
