"""Time-dependent adjustment sets for longitudinal causal DAGs."""

from .graph import Dag, Role, load_dag, parse_dag, topological_order
from .dsep import DsepQuery, d_separated
from .swig import Regime, build_swig, sequential_exchangeability_holds
from .adjustment import (
    AdjustmentSet,
    algorithm1_reduce,
    def1_to_def2_notation,
    enumerate_def2_sets,
    is_sufficient_def1,
    is_sufficient_def2,
)

__version__ = "0.1.0"
