"""Two-column probing presolve for mixed integer programs."""

from .config import Config, thread_pair_cap
from .errors import InstanceError, MpsParseError, ProvenInfeasible, SearchSpaceTooLarge
from .model import EQ, GE, LE, Literal, MipInstance, build_instance
from .mps import MetricsReport, read_metrics, read_mps, write_metrics, write_mps
from .parallel import implication_analysis, partition_variables, run_parallel
from .prepresolve import run_simple_presolve
from .probing import run_serial, select_candidates, score_pair
from .reductions import Reductions, apply_reductions

__all__ = [
    "Config",
    "EQ",
    "GE",
    "InstanceError",
    "LE",
    "Literal",
    "MetricsReport",
    "MipInstance",
    "MpsParseError",
    "ProvenInfeasible",
    "Reductions",
    "SearchSpaceTooLarge",
    "apply_reductions",
    "build_instance",
    "implication_analysis",
    "partition_variables",
    "read_metrics",
    "read_mps",
    "run_parallel",
    "run_serial",
    "run_simple_presolve",
    "score_pair",
    "select_candidates",
    "thread_pair_cap",
    "write_metrics",
    "write_mps",
]
