"""Mean-field superconductor with a classical magnetic impurity, and
fidelity analysis of its partial (one- and two-site) states.

The pieces compose bottom-up: `lattice` and `model` define the geometry
and couplings, `bdg` converges the order-parameter field, `wick` and
`rdm` turn a converged solution into reduced density matrices, `metrics`
compares them, `sweep` walks the exchange coupling to locate the
first-order transition, and `oracle` cross-checks everything against
exact diagonalization on small clusters.
"""

from .bdg import BdgSolution, SolverOptions, eigensolve, fermi, gap_update, solve_self_consistent
from .config import RunConfig, default_config, load_config, save_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSpectrumError,
    DensityMatrixError,
    GapCollapseError,
    ShibaFidError,
    TransitionNotFoundError,
)
from .lattice import OPEN, PERIODIC, LatticeConfig
from .metrics import (
    FidelityRecord,
    c2_quotient,
    charge_spin_split,
    classical_fidelity,
    fidelity,
    h_overlap,
    holonomy_deviation,
)
from .model import (
    ModelParams,
    assemble_bdg_matrix,
    electronic_magnetization,
    in_gap_levels,
    uniform_gap,
)
from .oracle import fock_expectation, fock_ground_state, fock_oracle_rdm
from .rdm import DensityMatrix, one_site_rdm, partial_trace, two_site_rdm
from .sweep import (
    SweepPlan,
    SweepResult,
    TransitionEstimate,
    locate_transition,
    run_sweep,
    spatial_map,
)
from .wick import CorrelatorTable, build_correlators, orbitals_for_sites, wick_expectation

__version__ = "0.1.0"
