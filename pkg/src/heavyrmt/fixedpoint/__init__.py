"""Fixed-point equations for the limiting resolvent of heavy-tailed matrices."""

from .kernels import KernelSpec, PairMeasureSpec, bessel_ratio, kernel_g
from .pair import CovarianceEstimate, RhoSurface, covariance_C, solve_rho_pair
from .quadrature import TGrid, make_grid
from .solver import (
    RhoGrid,
    L_of_z,
    L_of_z_difference,
    log_profile,
    nystrom_matrix,
    rho_z_derivative,
    solve_rho,
    stieltjes_limit,
)

__all__ = [
    "CovarianceEstimate",
    "KernelSpec",
    "L_of_z",
    "L_of_z_difference",
    "PairMeasureSpec",
    "RhoGrid",
    "RhoSurface",
    "TGrid",
    "bessel_ratio",
    "covariance_C",
    "kernel_g",
    "log_profile",
    "make_grid",
    "nystrom_matrix",
    "rho_z_derivative",
    "solve_rho",
    "solve_rho_pair",
    "stieltjes_limit",
]
