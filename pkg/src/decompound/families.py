"""Named truth families for experiments and tests."""

from __future__ import annotations

import numpy as np

from .grid import CircleGrid, GridFunction
from .model import LevyDensity


def uniform(grid: CircleGrid, delta: float, intensity: float = 1.0) -> LevyDensity:
    """Constant jump density nu = lambda."""
    return LevyDensity(GridFunction(grid, np.full(grid.n_points, intensity)), delta)


def exp_cosine(grid: CircleGrid, delta: float, amplitude: float = 0.2,
               shift: float = 0.1) -> LevyDensity:
    """nu = exp(a cos(2 pi x) + shift), a smooth analytic density."""
    v = amplitude * np.cos(2 * np.pi * grid.points) + shift
    return LevyDensity(GridFunction(grid, np.exp(v)), delta)


def sine_pair(grid: CircleGrid, delta: float):
    """The non-identifiable pair (4 pi / Delta)(sin 2 pi x)_{+/-}.

    Both have intensity 4/Delta > pi/Delta; their increment laws coincide.
    """
    s = np.sin(2 * np.pi * grid.points)
    nu1 = LevyDensity(GridFunction(grid, (4 * np.pi / delta) * np.clip(s, 0.0, None)), delta)
    nu2 = LevyDensity(GridFunction(grid, (4 * np.pi / delta) * np.clip(-s, 0.0, None)), delta)
    return nu1, nu2


def spline_bump(grid: CircleGrid, delta: float, base: float = 0.8,
                amplitude: float = 0.8, width: float = 0.25) -> LevyDensity:
    """base + amplitude * (1 - (x/width)^2)^4 on |x| < width: a C^3 bump."""
    x = grid.points
    t = np.clip(x / width, -1.0, 1.0)
    bump = (1.0 - t * t) ** 4
    return LevyDensity(GridFunction(grid, base + amplitude * bump), delta)


FAMILIES = {
    "uniform": uniform,
    "exp_cosine": exp_cosine,
    "spline_bump": spline_bump,
}


def make_truth(name: str, grid: CircleGrid, delta: float, params: dict | None = None) -> LevyDensity:
    if name not in FAMILIES:
        raise ValueError(f"unknown truth family {name!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[name](grid, delta, **(params or {}))
