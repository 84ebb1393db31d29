"""Composite Gauss rules on ``[0, t_max]`` graded towards the origin."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ..errors import ConfigurationError

DEFAULT_DECAY = 40.0


@dataclass(frozen=True)
class TGrid:
    """Quadrature nodes and weights for ``int_0^t_max F(t) dt``.

    When ``singular_exponent`` is nonzero the innermost panel uses a
    Gauss-Jacobi rule for ``t**gamma`` and the stored weight absorbs the
    factor ``t**-gamma``, so plain ``sum(weights * F(nodes))`` stays exact
    for ``F = t**gamma * polynomial`` on that panel.
    """

    nodes: np.ndarray
    weights: np.ndarray
    t_max: float
    singular_exponent: float = 0.0

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values) -> complex:
        return complex(np.sum(self.weights * values))


@lru_cache(maxsize=64)
def _legendre(n: int):
    return roots_legendre(n)


@lru_cache(maxsize=64)
def _jacobi(n: int, gamma: float):
    return roots_jacobi(n, 0.0, gamma)


def _panel(a: float, b: float, order: int):
    x, w = _legendre(order)
    h = (b - a) / 2
    return a + h * (x + 1), h * w


def make_grid(
    im_z: float,
    singular_exponent: float = 0.0,
    order: int = 12,
    panel_width: float = 1.0,
    t_min: float = 1e-6,
    ratio: float = 3.0,
    decay: float = DEFAULT_DECAY,
    t_max: float = None,
) -> TGrid:
    """Graded grid for integrands damped like ``exp(-t im_z)``.

    Geometric panels run from ``t_min`` up to ``min(1, t_max)`` with the given
    ratio; uniform panels of width at most ``panel_width`` cover the rest up to
    ``t_max = decay / im_z``.
    """
    if im_z <= 0:
        raise ConfigurationError("grid construction needs |Im z| > 0")
    if order < 2 or ratio <= 1 or t_min <= 0:
        raise ConfigurationError("invalid grid parameters")
    t_max = decay / im_z if t_max is None else float(t_max)
    t_min = min(t_min, t_max / 10)
    breaks = [t_min]
    knee = min(1.0, t_max)
    while breaks[-1] * ratio < knee:
        breaks.append(breaks[-1] * ratio)
    breaks.append(knee)
    if t_max > knee:
        n_uniform = int(np.ceil((t_max - knee) / panel_width))
        breaks.extend(np.linspace(knee, t_max, n_uniform + 1)[1:].tolist())

    gamma = float(singular_exponent)
    xj, wj = _jacobi(order, gamma) if gamma else _legendre(order)
    h = t_min / 2
    inner_nodes = h * (xj + 1)
    inner_weights = h ** (1 + gamma) * wj * inner_nodes ** (-gamma)
    nodes, weights = [inner_nodes], [inner_weights]
    for a, b in zip(breaks[:-1], breaks[1:]):
        x, w = _panel(a, b, order)
        nodes.append(x)
        weights.append(w)
    return TGrid(np.concatenate(nodes), np.concatenate(weights), t_max, gamma)
