"""Numerics for controlled diffusions on star networks with junction local time.

The package has three legs:

* :mod:`spiderhjb.hjb` — a monotone explicit finite-difference solver for the
  backward HJB system on the network, with a local-time derivative term in the
  junction condition;
* :mod:`spiderhjb.simulate` — a Monte Carlo engine for the controlled spider
  diffusion that tracks junction local time and accumulates running rewards;
* :mod:`spiderhjb.verify` — closed-form oracles and cross-checks that confront
  the two against each other and against known identities.

:mod:`spiderhjb.network` and :mod:`spiderhjb.model` hold the geometry and the
problem-data catalog; :mod:`spiderhjb.cli` is the command-line front end.
"""

from __future__ import annotations

from .model import (
    CATALOG,
    AssumptionReport,
    CoefficientBounds,
    ControlSets,
    ProblemData,
    RayCoefficient,
    SpinningMeasure,
    TerminalPayoff,
    VertexCost,
    controlled_drift_instance,
    diffraction_instance,
    kirchhoff_hamiltonian,
    l_dependent_spin_instance,
    local_time_cost_instance,
    ray_hamiltonian,
    reflecting_distance_payoff,
    spin_control_instance,
    terminal_payoff,
    validate_assumptions,
)
from .network import NetworkPoint, StarNetwork
from .hjb import (
    FeedbackPolicy,
    Grid,
    NumericalError,
    ValueField,
    build_grid,
    eval_value,
    export_value_csv,
    import_value_csv,
    solve_backward,
    solve_no_localtime,
    vertex_update,
)
from .simulate import (
    FirstPassageResult,
    PathState,
    SimConfig,
    SimulationError,
    SpiderPath,
    batch_rewards,
    constant_policy,
    estimate_value,
    export_paths_csv,
    first_passage_ladder,
    occupation_below,
    run_to_time,
    simulate_path,
    step,
)
from .verify import (
    CheckEntry,
    CheckReport,
    GadgetParams,
    OdeTestFunction,
    absorption_slope_bound,
    check_comparison_monotonicity,
    check_diffraction_law,
    check_dpp,
    check_localtime_rate,
    check_nonstickiness,
    check_truncation_robustness,
    check_value_characterization,
    export_check_csv,
    reflected_bm_oracle,
    scaled_drift_constants,
    solve_ode_gadget,
    summarize_reports,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "CATALOG",
    "CheckEntry",
    "CheckReport",
    "CoefficientBounds",
    "ControlSets",
    "FeedbackPolicy",
    "FirstPassageResult",
    "GadgetParams",
    "Grid",
    "NetworkPoint",
    "NumericalError",
    "OdeTestFunction",
    "PathState",
    "ProblemData",
    "RayCoefficient",
    "SimConfig",
    "SimulationError",
    "SpiderPath",
    "SpinningMeasure",
    "StarNetwork",
    "TerminalPayoff",
    "ValueField",
    "VertexCost",
    "absorption_slope_bound",
    "batch_rewards",
    "build_grid",
    "check_comparison_monotonicity",
    "check_diffraction_law",
    "check_dpp",
    "check_localtime_rate",
    "check_nonstickiness",
    "check_truncation_robustness",
    "check_value_characterization",
    "constant_policy",
    "controlled_drift_instance",
    "diffraction_instance",
    "estimate_value",
    "eval_value",
    "export_check_csv",
    "export_paths_csv",
    "export_value_csv",
    "first_passage_ladder",
    "import_value_csv",
    "kirchhoff_hamiltonian",
    "l_dependent_spin_instance",
    "local_time_cost_instance",
    "occupation_below",
    "ray_hamiltonian",
    "reflected_bm_oracle",
    "reflecting_distance_payoff",
    "run_to_time",
    "scaled_drift_constants",
    "simulate_path",
    "solve_backward",
    "solve_no_localtime",
    "solve_ode_gadget",
    "spin_control_instance",
    "step",
    "summarize_reports",
    "terminal_payoff",
    "validate_assumptions",
    "vertex_update",
    "__version__",
]
