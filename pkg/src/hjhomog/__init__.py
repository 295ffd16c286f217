"""Numerical laboratory for state-constraint Hamilton-Jacobi equations on
periodically perforated planar domains: space-time metric costs by dynamic
programming, effective Hamiltonians by two independent routes, constrained /
whole-space / defect solvers, and quantitative convergence experiments."""

from .geometry import (DefectSpec, GeometryError, HoleShape,
                       LatticeResolutionError, NO_DEFECTS, PerforatedDomain,
                       SpaceTimeLattice, build_lattice)
from .hamiltonians import (FAMILIES, HamiltonianModel, ModelError, coeff_a,
                           eval_H, eval_L, legendre_oracle, make_model,
                           model_for_domain, potential_V, velocity_bound)
from .metric import (MetricField, NoAnchorError, metric_field, metric_value,
                     metric_values, optimal_path, path_to_csv,
                     shifted_pair_gap)
from .effective import (EffectiveRow, LbarTable, effective_lagrangian,
                        effective_table, hbar_cell, hbar_infsup, hbar_metric,
                        lbar_table, mbar_star, ubar_from_mbar)
from ._dp import NonConvergenceError
from .solvers import (InitialData, ValueField, ZERO, hopf_lax,
                      solve_tilde_ueps, solve_ueps, solve_weps)
from .experiments import (DefectTable, DiluteTable, EffectiveTable, RateTable,
                          defect_experiment, dilute_experiment,
                          effective_experiment, emit_report, line_defect_theta,
                          probe_grid, rate_experiment, snap_probe,
                          squares_detour_delta, validate_suite)

__version__ = "0.1.0"

__all__ = [
    "DefectSpec", "GeometryError", "HoleShape", "LatticeResolutionError",
    "NO_DEFECTS", "PerforatedDomain", "SpaceTimeLattice", "build_lattice",
    "FAMILIES", "HamiltonianModel", "ModelError", "coeff_a", "eval_H",
    "eval_L", "legendre_oracle", "make_model", "model_for_domain",
    "potential_V", "velocity_bound",
    "MetricField", "NoAnchorError", "metric_field", "metric_value",
    "metric_values", "optimal_path", "path_to_csv", "shifted_pair_gap",
    "EffectiveRow", "LbarTable", "effective_lagrangian", "effective_table",
    "hbar_cell", "hbar_infsup", "hbar_metric", "lbar_table", "mbar_star",
    "ubar_from_mbar",
    "InitialData", "NonConvergenceError", "ValueField", "ZERO", "hopf_lax",
    "solve_tilde_ueps", "solve_ueps", "solve_weps",
    "DefectTable", "DiluteTable", "EffectiveTable", "RateTable",
    "defect_experiment", "dilute_experiment", "effective_experiment",
    "emit_report", "line_defect_theta", "probe_grid", "rate_experiment",
    "snap_probe", "squares_detour_delta", "validate_suite",
    "__version__",
]
