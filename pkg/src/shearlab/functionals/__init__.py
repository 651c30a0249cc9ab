from .oscillatory import Interval, IrregularityEstimate, default_xi_grid, osc_integral, rho_irregularity_norm
from .wei import (
    Flagged,
    WeiEstimate,
    affine_fit_residual,
    g_alpha,
    gamma_wei,
    k_alpha_eps,
    omega1,
    wei_F,
    wei_upper_bound,
    window_residuals,
)
from .regularity import besov_seminorm, holder_roughness, p_variation
