"""Sampled certificates for smoothness, strong convexity and PL, plus GD rate checks."""

__version__ = "0.1.0"

from .bregman import bregman, bregman_ratio, gap_scaling_probe, relative_bounds_check  # noqa: E402, F401
from .certify import (Family, check_condition, check_family, estimate_L, estimate_mu,  # noqa: E402, F401
                      estimate_pl)
from .conjugate import (ConjugateSolverParams, conjugate_numeric, conjugate_quadratic,  # noqa: E402, F401
                        dual_shift_check, fenchel_identity_residual, inverse_gradient)
from .gd import (GDConfig, compare_rates, gd_run, gd_step, model_argmin,  # noqa: E402, F401
                 verify_descent_inequalities, verify_rate)
from .linalg import SampleCloud, dot, fd_gradient, norm, sample_pairs  # noqa: E402, F401
from .objectives import (ShiftMode, make_least_squares, make_negative_phi0, make_phi0,  # noqa: E402, F401
                         make_quadratic, make_quartic_1d, parse_function_spec, scaled_shift)
from .reports import CertReport, ConditionId  # noqa: E402, F401
