"""Maxmin participatory budgeting: exact solvers, LP rounding and axiom checks."""

from .core import (
    EmptyVoteWarning,
    Instance,
    InstanceError,
    Outcome,
    PBError,
    Project,
    ResourceLimitError,
    SolveResult,
    distinct_profile,
    hcbp_check,
    maxmin_value,
    minimax_disutility_value,
    scalable_limit,
    scale_down,
    utility,
)
from .exact import bnb_solve, brute_force, dp_solve, solve, winners
from .ingest import ParseError, generate, load, parse_native, parse_pabulib, write_native
from .relax import additive_bound_certificate, compute_lo_ho, lp_solve, minimax_bound_check, ordered_relax

__version__ = "0.1.0"
