"""Semi-Lagrangian solver for coupled Hamilton-Jacobi / transport systems.

Public surface: Hamiltonian models with exact convex conjugates, a
padded simplicial lattice with P1 interpolation, the value-iteration
solver, mollified gradient fields, implicit characteristics, measure
push-forward, and structural diagnostics.
"""

from .errors import (
    ConfigError,
    DegenerateFit,
    EmptyCandidateSet,
    MissingTrajectory,
    NoContraction,
    NonFiniteResult,
    OutOfDomain,
    SemilagError,
    UnsupportedMeasure,
)
from .hamiltonians import (
    BUILTIN_MODELS,
    HamiltonianModel,
    LinearAtInfinity,
    Superlinear,
    bethe_salpeter,
    eikonal,
    legendre_transform,
    quadratic_potential,
    schrodinger,
    xi_search_radius,
    zero_potential,
)
from .lattice import (
    LatticeField,
    LatticeSpec,
    barycentric_weights,
    field_to_csv,
    interpolate,
    interpolate_many,
    make_spec,
    project,
)
from .mollify import MollifierKernel, SmoothedField, mollifier_kernel
from .hj import HjSolution, HjSolverConfig, sl_step, solve
from .flow import (
    CharacteristicEnsemble,
    FlowConfig,
    evolve,
    explicit_step,
    implicit_step,
    interpolate_trajectory,
    make_flow_config,
)
from .measure import (
    Atoms,
    DensityCallback,
    DiscreteMeasure,
    PiecewiseConstant,
    build_pushforward,
    mass,
    measure_to_csv,
    probe_dictionary,
    project_measure,
    pushforward,
    tail_mass,
    weak_star_distance,
)
from .diagnostics import (
    discrete_semiconcavity_constant,
    gradient_error,
    osl_constant,
    rate_regression,
    sample_pairs,
    sup_error,
)
from .config import RunConfig, build_run_config, load_config, parse_config_text

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
