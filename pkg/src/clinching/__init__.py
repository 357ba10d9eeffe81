"""Clinching auctions over polymatroids, with exact verification.

The core entry point is :func:`run`; :func:`verify_scenario` certifies the
result.  All arithmetic is over :class:`fractions.Fraction`.
"""
__version__ = "0.1.0"

from .auction import (  # noqa: E402
    AuctionTrace, Outcome, Scenario, check_invariants, clinch_amounts,
    clinch_amounts_multiunit, run, saturation_partition,
)
from .errors import (  # noqa: E402
    ClinchingError, GridMisalignmentError, InvariantViolation, MalformedFunctionError,
    PreconditionError, ScenarioError, UnsupportedSizeError,
)
from .payment import AbilityToPay, Agent, beta, demand  # noqa: E402
from .polymatroid import (  # noqa: E402
    SubmodularFunction, capped_eval, capped_table, greedy_max, is_feasible, tight_sets, validate,
)
from .scenario_io import emit_scenario, generate, parse_scenario  # noqa: E402
from .verification import (  # noqa: E402
    basic_checks, brute_force_clinch, ic_grid_check, pareto_check, vcg_baseline, verify_scenario,
)

__all__ = [
    "AbilityToPay", "Agent", "AuctionTrace", "ClinchingError", "GridMisalignmentError",
    "InvariantViolation", "MalformedFunctionError", "Outcome", "PreconditionError", "Scenario",
    "ScenarioError", "SubmodularFunction", "UnsupportedSizeError", "basic_checks", "beta",
    "brute_force_clinch", "capped_eval", "capped_table", "check_invariants", "clinch_amounts",
    "clinch_amounts_multiunit", "demand", "emit_scenario", "generate", "greedy_max",
    "ic_grid_check", "is_feasible", "parse_scenario", "pareto_check", "run",
    "saturation_partition", "tight_sets", "validate", "vcg_baseline", "verify_scenario",
]
