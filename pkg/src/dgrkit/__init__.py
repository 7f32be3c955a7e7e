"""dgrkit: online data-guided regulation of unknown LTI systems."""
from .errors import *  # noqa: F401,F403
from .sysmodel import LtiSystem, mode_excitation, perturb, step, vandermonde
from .numkernel import (
    operator_norm,
    pinv,
    pinv_append_column,
    range_projector,
    solve_dare,
    solve_discrete_lyapunov,
    spectral_radius,
)
from .regan import analyze, atilde, btilde, is_contractible, is_regularizable
from .regulator import (
    decompose_zw,
    dgr_init,
    dgr_step,
    fdgr_init,
    fdgr_step,
    g_alpha,
    identify,
)
from .bounds import (
    estimate_instability,
    instability_bounds,
    m_based_bound,
    trajectory_bound_series,
)

__version__ = "0.1.0"
