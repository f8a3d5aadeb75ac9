"""Finite-dimensional laboratory for thermalisation limits of quantum random
walks: GNS data for normal states, pinching conditional expectations, walk
generator modifications and their limits, embedded walk and cocycle solvers,
Hudson-Parthasarathy certification and Lindblad extraction.
"""

from .cocycle import (
    EhGenerator,
    HamiltonianSpec,
    HpBlocks,
    HpReport,
    cocycle_matrix_element,
    eh_generator,
    f_from_hamiltonian,
    generator_convergence,
    hp_check,
    hp_proof_blocks,
    hp_solve,
    lindblad,
    lindblad_closed_form,
    loglog_slope,
    random_hamiltonian_spec,
    right_mult_seed,
)
from .condexp import CondExp, build_cond_exp, choi_matrix, validate_cond_exp
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .generators import (
    KIND_CONJUGATION,
    KIND_RAW_MATRIX,
    KIND_RIGHT_MULT,
    KIND_SUPEROP,
    LimitGenerator,
    WalkGenerator,
    check_cruc,
    effective_noise_count,
    inverse_modify,
    limit_generator,
    modify,
    modify_vacuum,
    noise_bound,
    walk_generator_conjugation,
    walk_generator_from_matrix,
    walk_generator_from_superop,
    walk_generator_right_unitary,
)
from .gns import (
    DensityState,
    GnsData,
    ampliate_pi,
    bracket,
    build_gns,
    delta_projections,
    density_state,
    p0_projections,
    pi_rep,
    slice_state,
    slice_state0,
)
from .linalg import (
    DimensionError,
    SubspaceSplit,
    Superoperator,
    dagger,
    decap_exp,
    dyad,
    kron,
    mat_exp,
    slice_op,
    superop_distance,
    superop_exp,
    unvec,
    vec,
)
from .walk import (
    StepFunction,
    WalkRun,
    dense_walk_oracle,
    dtau_coeffs,
    exp_inner,
    step_function,
    walk_matrix_element,
    walk_unitarity_check,
    zero_step_function,
)

__version__ = "0.1.0"
