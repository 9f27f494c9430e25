"""Preconditioner quality analysis for weighted linear least-squares.

Builds preconditioners from approximate model matrices, measures the exact
spectrum of the preconditioned operator, verifies the containment and
condition-number bounds (including the weak-constraint 4D-Var block case),
and connects conditioning to PCG iteration counts.
"""

from .fourdvar import (
    BlockCovariances,
    DimensionMismatch,
    FourDVarLayout,
    FourDVarReport,
    UnsupportedVariant,
    apply_L,
    apply_Linv,
    assemble_L,
    assemble_Ltilde,
    assemble_state_system,
    background_spectrum_check,
    error_blocks,
    read_layout,
    rho_bound,
    write_layout,
)
from .gallery import (
    ExampleVariant,
    closed_form_condition,
    closed_form_eigs,
    example_instance,
    unweighted_relative_condition,
)
from .linalg import (
    NoConvergence,
    NotPositiveDefinite,
    SingularTriangular,
    SpdMatrix,
    cholesky,
    generalized_eigs,
    read_matrix,
    spd_condition,
    spectral_norm,
    sym_eigen,
    triangular_solve,
    write_matrix,
)
from .solvers import (
    BreakdownDetected,
    LinearOperator,
    PcgTrace,
    fourdvar_operators,
    pcg,
    wlsq_operators,
)
from .theory import (
    ErrorSummary,
    NotAdmissible,
    PrecondReport,
    SingularApproximation,
    SpectrumBall,
    admissible_error,
    approximation_error,
    condition_bound,
    error_budget,
    normal_matrix,
    preconditioned_spectrum,
    relative_condition,
    spectrum_radius,
    verify_spectrum,
)

__version__ = "0.1.0"
