"""Fixed point ``rho_z(t) = t int_0^inf g(t y) exp(i y z + rho_z(y)) dy``.

The integral is discretised on a :class:`TGrid` (Nystrom method) and the
resulting finite system is solved by damped Picard iteration, continuing in
``Im z`` from a well-conditioned starting point.  The Nystrom interpolant
``t -> t sum_q w_q g(t y_q) E_q`` evaluates the solution anywhere.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DomainError, SolverError
from .kernels import KernelSpec, _g_unchecked, as_kernel
from .quadrature import TGrid, make_grid

log = logging.getLogger(__name__)

CONTINUATION_START = 8.0


def nystrom_matrix(kernel: KernelSpec, grid: TGrid, t) -> np.ndarray:
    """``K[i, q] = t_i w_q g(t_i y_q)`` so that ``rho(t) = K @ E``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((t.size, len(grid)), dtype=complex)
    pos = t > 0
    if np.any(pos):
        tp = t[pos][:, None]
        out[pos] = tp * grid.weights[None, :] * _g_unchecked(kernel, tp * grid.nodes[None, :])
    return out


@dataclass
class RhoGrid:
    """Solution of the fixed point at one ``z`` in the upper half-plane."""

    z: complex
    kernel: KernelSpec
    grid: TGrid
    values: np.ndarray
    iterations: int
    residual: float
    damping: float = 0.5
    _kmat: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def exp_factor(self) -> np.ndarray:
        """``E(y) = exp(i y z + rho(y))`` at the grid nodes."""
        return np.exp(1j * self.grid.nodes * self.z + self.values)

    @property
    def kmat(self) -> np.ndarray:
        if self._kmat is None:
            self._kmat = nystrom_matrix(self.kernel, self.grid, self.grid.nodes)
        return self._kmat

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("rho_z is evaluated at t >= 0")
        out = nystrom_matrix(self.kernel, self.grid, t.ravel()) @ self.exp_factor
        return out.reshape(t.shape) if t.ndim else complex(out[0])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("# schema=1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re_rho", "im_rho"])
        for t, v in zip(self.grid.nodes, self.values):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text


def _picard(kernel, grid, z, init, tol, damping, max_iter):
    kmat = nystrom_matrix(kernel, grid, grid.nodes)
    phase = 1j * grid.nodes * z
    rho = np.array(init, dtype=complex)
    theta = damping
    best = np.inf
    growth = 0
    for it in range(1, max_iter + 1):
        new = kmat @ np.exp(phase + rho)
        res = float(np.max(np.abs(new - rho)))
        if not np.isfinite(res):
            raise SolverError(f"iteration diverged at z={z}", residual=res, iterations=it)
        if res < tol:
            return new, it, res, kmat
        if res > best:
            growth += 1
            if growth >= 5 and theta > 1 / 64:
                theta /= 2
                growth = 0
        else:
            best = res
            growth = 0
        rho = (1 - theta) * rho + theta * new
    raise SolverError(
        f"no convergence at z={z} after {max_iter} iterations (residual {res:.3e})",
        residual=res,
        iterations=max_iter,
    )


def solve_rho(
    z,
    spec,
    grid: Optional[TGrid] = None,
    tol: float = 1e-10,
    damping: float = 0.5,
    max_iter: int = 20000,
    continuation: bool = True,
    **grid_options,
) -> RhoGrid:
    """Solve for ``rho_z`` on a grid; ``Im z`` must be positive.

    Without continuation the iteration starts from ``rho = 0``; with it, the
    solution is tracked from ``Im z = 8`` down by halving, each stage warm
    started from the previous interpolant.
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("solve_rho needs Im z > 0; use conjugate symmetry below the axis")
    kernel = as_kernel(spec)
    gamma = kernel.singular_exponent
    ladder = []
    if continuation:
        y = CONTINUATION_START
        while y > z.imag * 1.0000001:
            ladder.append(y)
            y /= 2
    ladder.append(z.imag)

    prev = None
    for k, im in enumerate(ladder):
        zk = complex(z.real, im)
        last = k == len(ladder) - 1
        g = grid if (last and grid is not None) else make_grid(im, gamma, **grid_options)
        init = np.zeros(len(g), complex) if prev is None else prev(g.nodes)
        values, its, res, kmat = _picard(kernel, g, zk, init, tol, damping, max_iter)
        prev = RhoGrid(zk, kernel, g, values, its, res, damping, kmat)
        log.debug("rho at z=%s: %d iterations, residual %.2e", zk, its, res)
    return prev


def stieltjes_limit(z, rho: Optional[RhoGrid] = None, spec=None, **solve_options) -> complex:
    """Limiting ``E (1/N) Tr (z - A)**-1 = -i int_0^inf exp(i t z + rho_z(t)) dt``."""
    z = complex(z)
    if z.imag < 0:
        return stieltjes_limit(z.conjugate(), rho, spec, **solve_options).conjugate()
    if rho is None:
        rho = solve_rho(z, spec, **solve_options)
    return -1j * rho.grid.integrate(rho.exp_factor)


def rho_z_derivative(rho: RhoGrid) -> np.ndarray:
    """``d rho_z / dz`` at the grid nodes from the linearised fixed point."""
    E = rho.exp_factor
    y = rho.grid.nodes
    kmat = rho.kmat
    lhs = np.eye(len(y)) - kmat * E[None, :]
    return np.linalg.solve(lhs, kmat @ (1j * y * E))


def L_of_z(z, spec=None, rho: Optional[RhoGrid] = None, **solve_options) -> complex:
    """``L(z) = int_0^inf (1/t)(i t + d rho_z(t)/dz) exp(i t z + rho_z(t)) dt``.

    This is ``d/dz`` of ``int (exp(i t z + rho_z(t)) - 1) dt / t``, the
    derivative of the limiting mean correction profile; see
    :func:`L_of_z_difference` for the finite-difference route.
    """
    z = complex(z)
    if z.imag < 0:
        return L_of_z(z.conjugate(), spec, rho, **solve_options).conjugate()
    if rho is None:
        rho = solve_rho(z, spec, **solve_options)
    sigma = rho_z_derivative(rho)
    y = rho.grid.nodes
    return rho.grid.integrate((1j + sigma / y) * rho.exp_factor)


def log_profile(rho: RhoGrid) -> complex:
    """``int_0^inf (exp(i t z + rho_z(t)) - 1) dt / t`` truncated at the grid end."""
    y = rho.grid.nodes
    return rho.grid.integrate(np.expm1(1j * y * rho.z + rho.values) / y)


def L_of_z_difference(z, spec, h: float = None, tol: float = 1e-12, **grid_options) -> complex:
    """Central difference of :func:`log_profile` on a fixed grid."""
    z = complex(z)
    if z.imag < 0:
        return L_of_z_difference(z.conjugate(), spec, h, tol, **grid_options).conjugate()
    kernel = as_kernel(spec)
    h = 1e-4 * z.imag if h is None else h
    grid = make_grid(z.imag, kernel.singular_exponent, **grid_options)
    plus = log_profile(solve_rho(z + h, kernel, grid=grid, tol=tol))
    minus = log_profile(solve_rho(z - h, kernel, grid=grid, tol=tol))
    return (plus - minus) / (2 * h)
