"""Deterministic solver and verification toolkit for a prion proliferation
model with polymer joining."""

from .errors import PrionPdeError
from .grid import GridFunction, SizeGrid, build_grid, moment, project
from .kernels import (
    GrowthConstants,
    HypothesisFamily,
    KernelSet,
    ModelParams,
    TruncationLevel,
    ValidationReport,
    make_bounded_family,
    make_k0_family,
    make_powerlaw_family,
    make_special_family,
    plan_truncation_levels,
    truncate,
    validate_kernel_set,
    with_join_cutoff,
)
from .operators import (
    CharacteristicMap,
    FragTables,
    JoiningTables,
    characteristic_map,
    fragmentation_apply,
    g_functional,
    joining_apply,
    measure_operator_bounds,
    p_functional,
    speed,
    theta_inverse,
    theta_map,
    transport_apply,
    transport_remap,
)
from .oracle import (
    MomentOdeState,
    MomentRates,
    OracleTrajectory,
    compare,
    integrate_oracle,
    moment_ode_rhs,
    rates_from_kernel_set,
)
from .solver import SimulationState, SolverConfig, run, step
from .config import RunConfig, load_config, parse_config_text
from .diagnostics import (
    DiagnosticsLedger,
    RunResult,
    Snapshot,
    TestFunction,
    balance_residual,
    builtin_test_functions,
    consistency_residual,
    higher_moment_series,
    m2_bound_check,
    recompute_ledger,
    support_bound,
    uniform_integrability_report,
    vallee_poussin_weight,
    weak_form_residual,
)

__version__ = "0.1.0"

__all__ = [
    "PrionPdeError",
    "SizeGrid",
    "GridFunction",
    "build_grid",
    "moment",
    "project",
    "HypothesisFamily",
    "ModelParams",
    "GrowthConstants",
    "KernelSet",
    "TruncationLevel",
    "ValidationReport",
    "make_special_family",
    "make_k0_family",
    "make_powerlaw_family",
    "make_bounded_family",
    "with_join_cutoff",
    "validate_kernel_set",
    "truncate",
    "plan_truncation_levels",
    "CharacteristicMap",
    "characteristic_map",
    "theta_map",
    "theta_inverse",
    "transport_apply",
    "transport_remap",
    "FragTables",
    "fragmentation_apply",
    "JoiningTables",
    "joining_apply",
    "g_functional",
    "p_functional",
    "speed",
    "measure_operator_bounds",
    "MomentOdeState",
    "MomentRates",
    "OracleTrajectory",
    "moment_ode_rhs",
    "rates_from_kernel_set",
    "integrate_oracle",
    "compare",
    "SolverConfig",
    "SimulationState",
    "step",
    "run",
    "RunConfig",
    "load_config",
    "parse_config_text",
    "Snapshot",
    "RunResult",
    "DiagnosticsLedger",
    "TestFunction",
    "builtin_test_functions",
    "consistency_residual",
    "recompute_ledger",
    "balance_residual",
    "weak_form_residual",
    "support_bound",
    "m2_bound_check",
    "higher_moment_series",
    "vallee_poussin_weight",
    "uniform_integrability_report",
    "__version__",
]
