"""Third-order tensor algebra over unitary transforms and robust tensor completion."""

from .experiments import (
    SyntheticProblem,
    corrupt,
    gen_lowrank,
    gen_mask,
    gen_smooth_lowrank,
    make_problem,
    psnr,
    relative_error,
    solve_data_pipeline,
    sweep,
)
from .prox import prox_ttnn, soft_threshold
from .solver import (
    KktResiduals,
    ObservationMask,
    SolverAbort,
    SolverConfig,
    SolverReport,
    default_lambda,
    kkt_residuals,
    project_omega,
    project_omega_complement,
    solve,
)
from .tensor import fold_mode3, frontal_slice, inner, norm_fro, norm_inf, norm_l1, unfold_mode3, zeros
from .tproduct import (
    TransformedTSvd,
    column_basis,
    conj_transpose,
    identity_tensor,
    incoherence,
    phi_product,
    project_t,
    project_t_perp,
    spectral_norm,
    ttnn,
    ttsvd,
    tube_basis,
)
from .transforms import UnitaryTransform, apply, apply_inverse, data_transform, db4_transform, fourier_transform

__version__ = "0.1.0"
