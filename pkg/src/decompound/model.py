"""Compound Poisson observation model on the circle.

A jump density nu > 0 on I with intensity lambda = integral of nu and time
lag Delta determines the increment law

    P_nu = e^{-Delta*lambda} sum_k Delta^k nu^{*k} / k!,

an atom e^{-Delta*lambda} at 0 plus an absolutely continuous part.  The
characteristic function is phi_nu(k) = exp(Delta(F nu(k) - lambda)) and the
deconvolution measure pi_nu has Fourier symbol 1/phi_nu.  Likelihoods are
taken w.r.t. the fixed reference P_Lambda = e^{-Delta} delta_0 +
(1 - e^{-Delta}) Lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    AtomicMeasure,
    CircleGrid,
    GridFunction,
    dft,
    from_half_spectrum,
    half_spectrum,
    integrate,
)


@dataclass(frozen=True)
class LevyDensity:
    """Grid-sampled jump density with lag Delta.

    Values must be nonnegative; exact zeros are tolerated so that the
    non-identifiable example pairs can be represented.  Operations that
    divide by nu enforce a strict lower bound themselves.
    """

    density: GridFunction
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if np.min(self.density.values) < 0:
            raise ValueError("levy density must be nonnegative")

    @property
    def grid(self) -> CircleGrid:
        return self.density.grid

    @property
    def values(self) -> np.ndarray:
        return self.density.values

    @property
    def intensity(self) -> float:
        return integrate(self.density)

    @property
    def identifiable(self) -> bool:
        """Assumption: lambda < pi / Delta makes nu recoverable from P_nu."""
        return self.intensity < np.pi / self.delta

    def as_measure(self) -> AtomicMeasure:
        return AtomicMeasure(0.0, self.density)


def levy_from_values(grid: CircleGrid, values, delta: float) -> LevyDensity:
    return LevyDensity(GridFunction(grid, np.asarray(values, dtype=float)), delta)


def levy_from_log(grid: CircleGrid, log_values, delta: float) -> LevyDensity:
    return levy_from_values(grid, np.exp(np.asarray(log_values, dtype=float)), delta)


@dataclass(frozen=True)
class IncrementSample:
    """Observed increments X_i in I; exact zeros mark no-jump windows."""

    values: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def n(self) -> int:
        return len(self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for x in self.values:
                fh.write(format(x, ".17g") + "\n")

    @staticmethod
    def from_csv(path) -> "IncrementSample":
        with open(path, "r", encoding="utf-8") as fh:
            vals = [float(line) for line in fh if line.strip()]
        return IncrementSample(np.array(vals))


def char_fn(nu: LevyDensity, k_range) -> np.ndarray:
    """phi_nu(k) = exp(Delta * (F nu(k) - lambda)); phi_nu(0) = 1."""
    f = dft(nu.density, k_range)
    return np.exp(nu.delta * (f - nu.intensity))


def _half_cf(nu: LevyDensity) -> np.ndarray:
    """phi_nu(k) for k = 0..N/2 via the real-FFT layout."""
    f = half_spectrum(nu.values)
    return np.exp(nu.delta * (f - nu.intensity))


def increment_law(nu: LevyDensity) -> AtomicMeasure:
    """P_nu by spectral inversion: atom e^{-Delta*lambda}, density from phi_nu."""
    atom = float(np.exp(-nu.delta * nu.intensity))
    coeffs = _half_cf(nu) - atom
    dens = from_half_spectrum(coeffs, nu.grid.n_points)
    return AtomicMeasure(atom, GridFunction(nu.grid, dens))


def increment_law_series(nu: LevyDensity, tol: float = 1e-12, max_terms: int = 400) -> AtomicMeasure:
    """P_nu by the truncated convolution-series route (cross-check oracle).

    Accumulates e^{-Delta*lambda} sum_m Delta^m nu^{*m}/m! with direct
    (non-FFT) circular convolutions until the Poisson tail weight
    (Delta*lambda)^m / m! drops below tol.
    """
    lam = nu.intensity
    dl = nu.delta * lam
    n = nu.grid.n_points
    vals = nu.values
    conv_matrix = np.empty((n, n))
    for j in range(n):
        conv_matrix[j] = np.roll(vals[::-1], j + 1)  # row j holds nu(x_j - x_m)
    total = np.zeros(n)
    term = vals.copy()  # nu^{*m}, starting at m = 1
    m = 1
    coef = nu.delta  # Delta^m / m!
    pois = dl  # (Delta*lambda)^m / m!, the tail control
    while True:
        total += coef * term
        if pois * dl / (m + 1) < tol:
            break
        m += 1
        if m > max_terms:
            raise RuntimeError(f"convolution series did not reach tol={tol} in {max_terms} terms")
        term = conv_matrix @ term / n
        coef *= nu.delta / m
        pois *= dl / m
    atom = float(np.exp(-dl))
    return AtomicMeasure(atom, GridFunction(nu.grid, atom * total))


def deconv_measure(nu: LevyDensity) -> AtomicMeasure:
    """pi_nu with F pi_nu(k) = 1/phi_nu(k); atom e^{+Delta*lambda}."""
    atom = float(np.exp(nu.delta * nu.intensity))
    coeffs = 1.0 / _half_cf(nu) - atom
    dens = from_half_spectrum(coeffs, nu.grid.n_points)
    return AtomicMeasure(atom, GridFunction(nu.grid, dens))


def simulate_increments(nu: LevyDensity, n: int, rng: np.random.Generator) -> IncrementSample:
    """Draw n i.i.d. increments from P_nu.

    Per window: N ~ Poisson(Delta*lambda) jumps, each drawn from mu = nu/lambda
    by inverse CDF (piecewise-linear CDF on the grid cells), summed modulo 1.
    N = 0 yields an exact zero.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return IncrementSample(np.empty(0))
    grid = nu.grid
    lam = nu.intensity
    counts = rng.poisson(nu.delta * lam, size=n)
    total = int(counts.sum())
    out = np.zeros(n)
    if total > 0:
        # cell owned by grid point x_j is (x_j - 1/N, x_j]; mass nu(x_j)/N
        probs = nu.values / nu.values.sum()
        cells = rng.choice(grid.n_points, size=total, p=probs)
        u = rng.random(total)
        jumps = grid.points[cells] - u * grid.spacing
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        sums = np.add.reduceat(jumps, np.minimum(starts, total - 1))
        out = np.asarray(grid.wrap(sums))
        out[counts == 0] = 0.0
    return IncrementSample(out)


def _log_ac_density(law: AtomicMeasure, x_nonzero: np.ndarray) -> np.ndarray:
    q = law.density.interp(x_nonzero)
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise ValueError("increment density not positive at sample points; grid under-resolved")
    return np.log(q)


def log_likelihood(nu: LevyDensity, sample: IncrementSample) -> float:
    """log of prod_i p_nu(X_i) with p_nu = dP_nu / dP_Lambda.

    X_i = 0 contributes Delta*(1 - lambda); X_i != 0 contributes
    log q_nu(X_i) - log(1 - e^{-Delta}) with q_nu linearly interpolated.
    """
    x = sample.values
    zero = x == 0.0
    n_zero = int(zero.sum())
    law = increment_law(nu)
    ll = n_zero * nu.delta * (1.0 - nu.intensity)
    if n_zero < len(x):
        logs = _log_ac_density(law, x[~zero])
        ll += float(np.sum(logs)) - (len(x) - n_zero) * np.log(-np.expm1(-nu.delta))
    if not np.isfinite(ll):
        raise ValueError("non-finite log-likelihood; grid under-resolved")
    return float(ll)


def kl_divergence(nu0: LevyDensity, nu: LevyDensity) -> float:
    """K(P_{nu0}, P_nu) = atom term + quadrature of q0 log(q0/q)."""
    law0 = increment_law(nu0)
    law = increment_law(nu)
    atom_term = law0.atom0 * (np.log(law0.atom0) - np.log(law.atom0))
    q0 = law0.density.values
    q = law.density.values
    if np.min(q0) <= 0 or np.min(q) <= 0:
        raise ValueError("KL needs strictly positive increment densities")
    return float(atom_term + np.mean(q0 * (np.log(q0) - np.log(q))))
