"""Two-point fixed point and the covariance of resolvent traces.

For exploding-moment kernels the two-variable exponent splits as

    rho^{u,1}(t, s) = rho_z(t) + rho_z'(s) + D_u(t, s)
    rho^{2}(t, s)   = rho_z(t) + rho_z'(s) + D_0(t, s)

where ``D_u(t, s) = t s iint tau(t y, s e) E(y) E'(e) exp(u D_u(y, e)) dy de``
and ``E(y) = exp(i y z + rho_z(y))``.  Since ``tau`` is a finite sum of rank
one terms the discretised map is a sum of matrix products.  ``D_u(t, 0) = 0``
so the marginals are reproduced exactly.

Spectral parameters below the real axis are handled with oriented variables:
for ``Im z < 0`` the functions are evaluated at ``-t`` (``t >= 0``), where
``rho_z(-t) = conj(rho_{conj z}(t))``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import roots_legendre

from ..errors import ConfigurationError, DomainError, SolverError, UnsupportedFamilyError
from .kernels import KernelSpec, PairMeasureSpec, as_kernel
from .quadrature import TGrid, make_grid
from .solver import RhoGrid, solve_rho

log = logging.getLogger(__name__)


def _pair_spec(spec) -> PairMeasureSpec:
    if isinstance(spec, PairMeasureSpec):
        return spec
    kernel = as_kernel(spec)
    if kernel.family != "exploding":
        raise UnsupportedFamilyError(
            "the two-point fixed point is implemented for exploding-moment kernels only"
        )
    return PairMeasureSpec(kernel)


@dataclass
class _Marginal:
    """Oriented values of rho and E on a grid for one spectral parameter."""

    z: complex
    grid: TGrid
    rho: RhoGrid
    flip: bool

    @property
    def values(self) -> np.ndarray:
        return self.rho.values.conj() if self.flip else self.rho.values

    @property
    def exp_factor(self) -> np.ndarray:
        E = self.rho.exp_factor
        return E.conj() if self.flip else E

    def __call__(self, t):
        v = self.rho(t)
        return np.conj(v) if self.flip else v


def _marginal(z, kernel, grid, rho, tol) -> _Marginal:
    z = complex(z)
    if z.imag == 0:
        raise DomainError("spectral parameters must be off the real axis")
    flip = z.imag < 0
    upper = z.conjugate() if flip else z
    if rho is None or rho.z != upper or rho.grid is not grid:
        rho = solve_rho(upper, kernel, grid=grid, tol=tol)
    return _Marginal(z, grid, rho, flip)


def _factor_matrices(pair: PairMeasureSpec, grid: TGrid, t=None) -> List[Tuple[float, np.ndarray]]:
    """``A_i[k, q] = t_k w_q h_i(t_k y_q)`` for each rank-one term of tau."""
    t = grid.nodes if t is None else np.asarray(t, dtype=float)
    prod = t[:, None] * grid.nodes[None, :]
    return [(w, t[:, None] * grid.weights[None, :] * h) for w, h in pair.tau_factors(prod)]


def _apply(factors1, factors2, M) -> np.ndarray:
    out = np.zeros((factors1[0][1].shape[0], factors2[0][1].shape[0]), dtype=complex)
    for (w, A), (_, B) in zip(factors1, factors2):
        out += w * (A @ M @ B.T)
    return out


def _solve_D(factors1, factors2, P, u, init, tol, damping, max_iter):
    if u == 0:
        return _apply(factors1, factors2, P), 0, 0.0
    D = init.copy()
    theta = damping
    best, growth = np.inf, 0
    for it in range(1, max_iter + 1):
        new = _apply(factors1, factors2, P * np.exp(u * D))
        res = float(np.max(np.abs(new - D)))
        if not np.isfinite(res):
            raise SolverError("pair iteration diverged", residual=res, iterations=it)
        if res < tol:
            return new, it, res
        if res > best:
            growth += 1
            if growth >= 5 and theta > 1 / 64:
                theta /= 2
                growth = 0
        else:
            best, growth = res, 0
        D = (1 - theta) * D + theta * new
    raise SolverError(
        f"pair iteration did not converge (residual {res:.3e})", residual=res, iterations=max_iter
    )


@dataclass
class RhoSurface:
    """``rho^u`` on a product grid, in oriented coordinates ``t, s >= 0``."""

    z: complex
    z2: complex
    u: float
    grid1: TGrid
    grid2: TGrid
    rho1: np.ndarray
    rho2: np.ndarray
    D_u: np.ndarray
    D_0: np.ndarray
    iterations: int
    residual: float
    _pair: PairMeasureSpec = None
    _m1: _Marginal = None
    _m2: _Marginal = None
    _E1: np.ndarray = None
    _E2: np.ndarray = None

    @property
    def rho_u1(self) -> np.ndarray:
        return self.rho1[:, None] + self.rho2[None, :] + self.D_u

    @property
    def rho_2(self) -> np.ndarray:
        return self.rho1[:, None] + self.rho2[None, :] + self.D_0

    @property
    def values(self) -> np.ndarray:
        """``u rho^{u,1} + (1 - u) rho^{2}`` on the grid."""
        return self.u * self.rho_u1 + (1 - self.u) * self.rho_2

    def _D_at(self, t, s, u_weight) -> np.ndarray:
        f1 = _factor_matrices(self._pair, self.grid1, t)
        f2 = _factor_matrices(self._pair, self.grid2, s)
        if not f1:
            return np.zeros((len(t), len(s)), dtype=complex)
        P = np.outer(self._E1, self._E2)
        return _apply(f1, f2, P * np.exp(u_weight * (self.D_u if u_weight else 0)))

    def __call__(self, t, s):
        """``rho^u(t, s)`` at off-grid points (outer product of the two axes)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(t < 0) or np.any(s < 0):
            raise DomainError("oriented coordinates must be non-negative")
        base = self._m1(t)[:, None] + self._m2(s)[None, :]
        Du = self._D_at(t, s, self.u)
        D0 = self._D_at(t, s, 0.0)
        return base + self.u * Du + (1 - self.u) * D0


def solve_rho_pair(
    z,
    z2,
    u: float,
    spec,
    rho_z: Optional[RhoGrid] = None,
    rho_z2: Optional[RhoGrid] = None,
    grid1: Optional[TGrid] = None,
    grid2: Optional[TGrid] = None,
    tol: float = 1e-10,
    damping: float = 0.5,
    max_iter: int = 5000,
    init: Optional[np.ndarray] = None,
    **grid_options,
) -> RhoSurface:
    """Solve the two-point fixed point at ``(z, z2, u)``.

    ``rho^{2}`` needs only the marginals; ``rho^{u,1}`` is iterated from it.
    """
    if not 0 <= u <= 1:
        raise ConfigurationError("u must lie in [0, 1]")
    pair = _pair_spec(spec)
    kernel = pair.kernel
    z, z2 = complex(z), complex(z2)
    grid1 = grid1 or (rho_z.grid if rho_z is not None else make_grid(abs(z.imag), **grid_options))
    grid2 = grid2 or (rho_z2.grid if rho_z2 is not None else make_grid(abs(z2.imag), **grid_options))
    m1 = _marginal(z, kernel, grid1, rho_z, tol)
    m2 = _marginal(z2, kernel, grid2, rho_z2, tol)
    E1, E2 = m1.exp_factor, m2.exp_factor
    f1, f2 = _factor_matrices(pair, grid1), _factor_matrices(pair, grid2)
    shape = (len(grid1), len(grid2))
    if not f1:
        D0 = np.zeros(shape, dtype=complex)
        Du, its, res = D0, 0, 0.0
    else:
        P = np.outer(E1, E2)
        D0 = _apply(f1, f2, P)
        Du, its, res = _solve_D(f1, f2, P, u, D0 if init is None else init, tol, damping, max_iter)
    return RhoSurface(z, z2, u, grid1, grid2, m1.values, m2.values, Du, D0, its, res,
                      pair, m1, m2, E1, E2)


# The u-integrated profile is twice the covariance: at large Im z its leading
# term is 4/(z z')**3 while Var(Tr A**2)/N -> 2 gives 2/(z z')**3.  The halved
# value matches the moment-graph covariance series and Monte Carlo.
PROFILE_NORMALIZATION = 0.5


@dataclass(frozen=True)
class CovarianceEstimate:
    value: complex
    u_error: Optional[float]
    step: float


def _profile(pair, z, z2, grid1, grid2, u_nodes, u_weights, tol, damping):
    """``int_0^1 du iint (E E' (exp(Delta_u) - 1)) dy de / (y e)``."""
    kernel = pair.kernel
    m1 = _marginal(z, kernel, grid1, None, tol)
    m2 = _marginal(z2, kernel, grid2, None, tol)
    E1, E2 = m1.exp_factor, m2.exp_factor
    f1, f2 = _factor_matrices(pair, grid1), _factor_matrices(pair, grid2)
    P = np.outer(E1, E2)
    D0 = _apply(f1, f2, P)
    W = np.outer(grid1.weights / grid1.nodes, grid2.weights / grid2.nodes)
    total = 0.0 + 0.0j
    D = D0
    for u, wu in zip(u_nodes, u_weights):
        D, _, _ = _solve_D(f1, f2, P, u, D, tol, damping, 5000)
        delta = u * D + (1 - u) * D0
        total += wu * np.sum(W * P * np.expm1(delta))
    return total


def _gauss_unit(order: int):
    x, w = roots_legendre(order)
    return (x + 1) / 2, w / 2


def covariance_C(
    z,
    z2,
    spec,
    u_order: int = 8,
    step: float = 1e-3,
    tol: float = 1e-13,
    damping: float = 1.0,
    estimate_error: bool = False,
    **grid_options,
) -> CovarianceEstimate:
    """Limiting covariance of ``N**-1/2 (Tr G(z) - E Tr G(z))`` and its ``z2`` analogue.

    The mixed derivative in ``(z, z2)`` of the two-point profile is taken by
    central differences with step ``step * min(|Im z|, |Im z2|)`` on grids
    fixed at the base point.  With ``estimate_error`` the u-integral is
    repeated with twice the order and the difference reported.
    """
    pair = _pair_spec(spec)
    z, z2 = complex(z), complex(z2)
    if z.imag == 0 or z2.imag == 0:
        raise DomainError("spectral parameters must be off the real axis")
    h = step * min(abs(z.imag), abs(z2.imag))
    if not any(x > 0 for x, _ in pair.kernel.measure):
        return CovarianceEstimate(0j, 0.0 if estimate_error else None, h)
    grid1 = make_grid(abs(z.imag), **grid_options)
    grid2 = make_grid(abs(z2.imag), **grid_options)

    def mixed(order):
        un, uw = _gauss_unit(order)
        vals = {
            (a, b): _profile(pair, z + a * h, z2 + b * h, grid1, grid2, un, uw, tol, damping)
            for a in (1, -1)
            for b in (1, -1)
        }
        return (vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / (4 * h * h)

    value = PROFILE_NORMALIZATION * mixed(u_order)
    err = abs(PROFILE_NORMALIZATION * mixed(2 * u_order) - value) if estimate_error else None
    return CovarianceEstimate(complex(value), err, h)
