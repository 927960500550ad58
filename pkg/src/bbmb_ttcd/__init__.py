"""Compact difference solvers for the periodic BBM-Burgers equation.

``run_ttcd`` is the temporal two-grid scheme (coarse nonlinear solve, linear
interpolation in time, fine linearised correction); ``solve_ncd`` is the
fully nonlinear reference scheme.
"""

from .compact import CompactOperator, compact_eigenvalues
from .config import ExperimentConfig, load_config, parse_config
from .diagnostics import (
    EnergySeries,
    energy_coarse,
    energy_fine,
    energy_series,
    max_difference,
    max_error_vs_exact,
    perturbation_response,
    rates,
    self_error_space,
    self_error_time,
)
from .errors import ConfigError, Diverged, NonConvergence, SingularMatrix, SolverError
from .experiments import RunReport, run_experiment
from .linsolve import BACKEND, CyclicTridiagonal, solve_cyclic_tridiagonal, solve_dense_lu
from .mesh import SpaceGrid, TimeGridPair, make_space_grid, make_time_grids
from .problems import builtin_problems
from .schemes import (
    IterationPolicy,
    PdeParams,
    StateLevel,
    Trajectory,
    initial_level,
    linearized_step,
    ncd_step,
    picard_iterate,
    solve_ncd,
)
from .twogrid import TtcdRun, interpolate_in_time, lift_w, run_ttcd

__version__ = "0.1.0"
