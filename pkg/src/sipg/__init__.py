"""Multi-sector infrastructure co-simulation platform.

The package couples four annual resource-dispatch models (agriculture,
water, energy split into petroleum and electricity, plus a closed-form
societal demand model) through either a single in-process engine or a
time-managed federation protocol over sockets.  Scenario documents carry
every parameter; all dispatch is deterministic linear programming.
"""

from sipg.lp import LinearProgram, LpSolution, solve
from sipg.scenario import Scenario, build_scenario, load_scenario, validate_document
from sipg.engine import SimulationResult, run_simulation

__all__ = [
    "LinearProgram",
    "LpSolution",
    "solve",
    "Scenario",
    "build_scenario",
    "load_scenario",
    "validate_document",
    "SimulationResult",
    "run_simulation",
]

__version__ = "1.0.0"
