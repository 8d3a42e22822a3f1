"""Wavelet-sparse row-action image reconstruction toolkit."""

from .metrics import psnr, ssim
from .prox import (
    ThresholdRule,
    nng_penalty_eval,
    project_nonneg,
    prox_composed,
    prox_hard,
    prox_nng,
    prox_soft,
)
from .simulate import (
    NoiseModel,
    forward_simulate,
    make_delta_phantom,
    make_noise_model,
    make_shape_phantom,
    make_vascular_phantom,
    preprocess_matrix,
    synth_system_matrix,
)
from .solvers import (
    PowerIterationError,
    ReconReport,
    SolverConfig,
    SolverError,
    SystemMatrix,
    composite_objective,
    fista_reconstruct,
    kaczmarz_reconstruct,
    kaczmarz_sweep,
    landweber_step,
    power_iteration_opnorm,
    regkz_reconstruct,
    rel_change,
    ska_reconstruct,
    stop_check,
)
from .wavelet import (
    FilterPair,
    GridTooSmallError,
    PyramidShapeError,
    UdwtOperator,
    WaveletPyramid,
    dwt_single_level,
    udwt_adjoint,
    udwt_forward,
    udwt_inverse,
    udwt_inverse_decimated,
)

__version__ = "0.1.0"
