"""Asymptotics and exact simulation of quantum walks with i.i.d. random coins."""

from .lattice_ops import BandedOperator, DROP_TOL, random_banded
from .ensembles import (
    CoinEnsemble,
    PhaseMoments,
    broken_links,
    build_ensemble,
    dephasing_uniform,
    gaussian_coin,
    is_irreducible,
    make_ensemble,
    phase_coin,
    phase_moments,
    rotation_coin,
    two_dim,
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
)
from .channel import (
    ContractivityCertificate,
    GeneralizedWalk,
    ShiftTable,
    WalkChannel,
    compose,
    line_walk,
    two_dim_walk,
)
from .asymptotics import (
    DiffusionResult,
    DriftAdjusted,
    DriftResult,
    FirstOrderSolution,
    ballistic_drift,
    diffusion_matrix,
    diffusion_quadratic_check,
    drift_subtract,
    gaussian_density,
    solve_first_order,
    solve_first_order_zero_mean,
)
from .oracle import (
    DensityBlockState,
    PositionDistribution,
    PureState,
    aggregate_standard_error,
    channel_step,
    monte_carlo,
    pure_unitary_step,
    simulate,
    total_variation_to_density,
)
from .errors import (
    CertificateRefusal,
    ConfigError,
    DegeneracyError,
    DegenerateCovarianceError,
    ResourceCapError,
    SeriesDivergenceError,
)

__version__ = "0.1.0"
