"""Right large deviation rate functions for the top eigenvalue or singular
value of free sums, products and rectangular sums of invariant random
matrix ensembles, with optional hard walls, plus finite-size Monte Carlo
validation."""

from .errors import (TopRateError, DegenerateDensity, OutOfSupport,
                     DomainExceeded, NonConvergence, InvalidShapeRatio,
                     InsufficientTail)
from .spectra import (SupportInterval, SpectralDensity, Ensemble,
                      RectEnsemble, EigenConfiguration, semicircle,
                      marchenko_pastur, quarter_circle, gauss_rect_lsvd,
                      dirac, tabulated, eval_density, weighted_nodes, cdf,
                      classical_positions, symmetrize, lsvd_to_square,
                      save_density_csv, load_density_csv, goe_ensemble,
                      wishart_ensemble, fixed_ensemble, gauss_rect_ensemble,
                      fixed_rect_ensemble, metropolis_wall_sample)
from .transforms import (Branch, TransformDomain, stieltjes, g_at_edge,
                         stieltjes_second, t_transform, t_second, f_q,
                         u_func, u_inv, d_transform, d_second, g2_from_d,
                         r_transform, s_transform, c_transform,
                         edge_from_inverse, bipz_p,
                         second_branch_from_quadratic, quadratic_residual,
                         plemelj_density, transform_domain)
from .freeconv import (ConvolutionModel, add_conv, mul_conv, rect_conv,
                       complex_stieltjes, density_on_support)
from .freenergy import (TiltFactor, TiltModel, tilt_model, with_x,
                        quenched_dtheta, annealed_factor_dtheta,
                        annealed_dtheta, tilt_diff)
from .ratefn import (RateCurve, rate_sum, rate_prod, rate_rect,
                     theta_star_sum, theta_star_prod, theta_star_rect,
                     psi_one_matrix, phi_one_rect, rate_rect_q0_reference,
                     effective_potential, tw_scaling_check)
from .rankone import (SpikeModel, bbp_top, spike_rate, bbp_rect_threshold,
                      Rk1PlusRk1, rk1rk1_density, rk1rk1_rate,
                      rk1rk1_exact_tail, rk1rk1_sample, rk1rk1_curve)
from .mcvalidate import (McConfig, McReport, sample_goe, sample_wishart,
                         sample_ginibre, haar_orthogonal, sample_model_top,
                         run_mc, empirical_rate, histogram_vs_density)
from .descriptors import (parse_ensemble, parse_rect_ensemble,
                          parse_mc_model, infer_shape_q)

__version__ = "0.1.0"
