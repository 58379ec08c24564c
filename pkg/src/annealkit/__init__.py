"""Glauber Monte Carlo and closed macroscopic flows for transverse-field
Ising systems in Trotter representation."""

from .model import ModelParams, trotter_bond
from .lattice import (
    AvgObservables,
    SliceObservables,
    TrotterConfig,
    flip_delta_avg,
    flip_delta_slice,
    flip_rate,
    hamiltonian,
    local_field,
    observables_avg,
    observables_slice,
)
from .glauber import (
    InitSpec,
    SimSpec,
    Trajectory,
    TruncatedRunError,
    init_config,
    run,
    run_ensemble,
)
from .transfer import (
    ChainMoments,
    ChainParams,
    HeteroMoments,
    eigensystem,
    hetero_moments,
    moments,
    xi_exact,
    xi_expansion,
)
from .closure import (
    ClosureError,
    ClosureSolution,
    HeteroClosureSolution,
    InfeasibleTargetError,
    URoot,
    solve_u,
    solve_xy,
    solve_xy_hetero,
)
from .flows import (
    FLOW_KINDS,
    FlowError,
    FlowState,
    ferro_fixed_point,
    integrate,
    q_pm,
    relaxed_eps,
    rhs,
)
from .statics import (
    BifurcationReport,
    EquilibriumResult,
    free_energy_ferro,
    free_energy_noninteracting,
    partition_noninteracting_trotter,
    solve_m,
    toeplitz_spectrum,
)

__version__ = "0.1.0"
