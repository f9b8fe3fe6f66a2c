"""Numerical checks for environment-induced superselection (einselection).

Decides the necessary conditions (separability, nondemolition) for a
system + environment model, extracts its pointer basis when one exists, and
estimates the decoherence criteria from exact dynamics.
"""
from .analysis import (
    PointerBasis,
    SchmidtDecomposition,
    SeparabilityVerdict,
    check_nondemolition,
    check_separability,
    extract_pointer_basis,
    operator_schmidt,
)
from .criteria import (
    CriteriaReport,
    check_deviation_scaling,
    check_pointer_stability,
    check_time_average,
    check_vanishing,
    estimate_deviation,
    verdict_R1,
)
from .dynamics import (
    Trajectory,
    conditional_env_states,
    correlation_amplitude,
    evolve_dense,
    factorized_z,
    reduced_density,
)
from .errors import ConfigError, DimensionError, EinselectError, NotHermitianError, PointerBasisError
from .linalg import (
    evolve_unitary,
    herm_eig,
    hermitian_basis,
    kron,
    load_operator,
    partial_trace_env,
    save_operator,
)
from .models import (
    ModelSpec,
    build_heisenberg,
    build_nonseparable_xz,
    build_rotated_spin_bath,
    build_spin_bath,
    random_interaction,
)
from .system import CompositeSystem, ProductInitialState

__version__ = "0.1.0"
