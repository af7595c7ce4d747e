"""Spectral-cutoff plug-in estimation of lambda and nu from increments.

The empirical characteristic function phi_n is passed through the principal
branch of the complex logarithm, Phi_n(k) = Delta^{-1} Log phi_n(k) (set to 0
when phi_n(k) = 0), and the intensity and the Fourier coefficients of nu are
read off:

    lambda_hat = -(1/K) sum_{k=1}^K Re Phi_n(k),
    F nu_hat(k) = (Phi_n(k) + lambda_hat) 1_{|k| <= K}.

When lambda * Delta < pi the same formulas applied to the population CF are
exact up to the cutoff bias, which is bounded by ||nu||_{L^2} / sqrt(K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CircleGrid, GridFunction, half_spectrum, idft
from .model import IncrementSample, LevyDensity, char_fn
from .wavelets import WaveletBasis, WaveletCoeffs, analyze


@dataclass(frozen=True)
class SpectralConfig:
    cutoff: int  # K
    delta_exponent: float  # the H(delta) smoothing exponent, > 1/2
    delta: float  # observation lag

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError("cutoff K must be >= 2")
        if self.delta_exponent <= 0.5:
            raise ValueError("delta_exponent must exceed 1/2")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


def ecf(sample: IncrementSample, k_range) -> np.ndarray:
    """phi_n(k) = (1/n) sum_j exp(2 pi i k X_j), chunked over frequencies."""
    ks = np.atleast_1d(np.asarray(k_range, dtype=np.int64))
    x = sample.values
    out = np.empty(len(ks), dtype=complex)
    chunk = max(1, int(2_000_000 // max(len(x), 1)))
    for a in range(0, len(ks), chunk):
        kk = ks[a : a + chunk]
        out[a : a + chunk] = np.exp(2j * np.pi * np.outer(kk, x)).mean(axis=1)
    return out


def principal_log_cf(cf_values: np.ndarray, delta: float) -> np.ndarray:
    """Phi(k) = Delta^{-1} Log cf(k), principal branch; 0 where cf(k) = 0."""
    cf = np.asarray(cf_values, dtype=complex).copy()
    # Branch choices must not depend on rounding noise: CF values within float
    # error of the negative real axis (the cut) are snapped onto it, so that
    # mathematically equal CFs always map to the same branch.
    snap = np.abs(cf.imag) < 1e-12 * np.abs(cf)
    cf[snap] = cf[snap].real
    out = np.zeros(len(cf), dtype=complex)
    nz = cf != 0
    out[nz] = np.log(cf[nz]) / delta
    return out


def lambda_from_cf(cf_pos: np.ndarray, cfg: SpectralConfig) -> float:
    """Intensity estimate from CF values at k = 1..K."""
    phi = principal_log_cf(cf_pos[: cfg.cutoff], cfg.delta)
    return float(-np.mean(phi.real))


def spectral_lambda(sample: IncrementSample, cfg: SpectralConfig) -> float:
    if sample.n == 0:
        raise ValueError("empty sample")
    return lambda_from_cf(ecf(sample, np.arange(1, cfg.cutoff + 1)), cfg)


def levy_coeffs_from_cf(cf_pos: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    """F nu_hat(k) for k = 0..K from CF values at k = 1..K.

    The k = 0 entry is lambda_hat itself (F nu(0) = lambda).
    """
    lam = lambda_from_cf(cf_pos, cfg)
    phi = principal_log_cf(cf_pos[: cfg.cutoff], cfg.delta)
    return np.concatenate(([lam + 0j], phi + lam))


def render_levy(grid: CircleGrid, coeffs_pos: np.ndarray) -> GridFunction:
    """Inverse DFT of the truncated coefficients (clipped at the grid Nyquist)."""
    kmax = min(len(coeffs_pos) - 1, grid.n_points // 2)
    ks = np.arange(-kmax, kmax + 1)
    cs = np.concatenate((np.conj(coeffs_pos[1 : kmax + 1])[::-1], coeffs_pos[: kmax + 1]))
    return idft(grid, ks, cs)


def spectral_levy(sample: IncrementSample, cfg: SpectralConfig, grid: CircleGrid):
    """Estimate (lambda_hat, coefficient array k=0..K, nu_hat on the grid)."""
    cf = ecf(sample, np.arange(1, cfg.cutoff + 1))
    coeffs = levy_coeffs_from_cf(cf, cfg)
    return float(coeffs[0].real), coeffs, render_levy(grid, coeffs)


def population_levy(nu: LevyDensity, cfg: SpectralConfig, grid: CircleGrid | None = None):
    """The estimator applied to the population CF of nu (bias diagnostics)."""
    cf = char_fn(nu, np.arange(1, cfg.cutoff + 1))
    coeffs = levy_coeffs_from_cf(cf, cfg)
    g = grid or nu.grid
    return float(coeffs[0].real), coeffs, render_levy(g, coeffs)


def _fourier_weights(ks: np.ndarray, delta_exponent: float) -> np.ndarray:
    k = np.abs(ks).astype(float)
    w = np.ones(len(ks))
    nz = k > 0
    w[nz] = 1.0 / (k[nz] * np.log(np.e + k[nz]) ** (2 * delta_exponent))
    return w


def h_delta_norm_fourier(coeffs_pos: np.ndarray, delta_exponent: float) -> float:
    """Fourier-side H(delta) norm from coefficients at k = 0..K.

    Weight |k|^{-1} log(e+|k|)^{-2 delta}, with the k = 0 weight set to 1;
    negative frequencies contribute by Hermitian symmetry.
    """
    c = np.asarray(coeffs_pos, dtype=complex)
    ks = np.arange(len(c))
    w = _fourier_weights(ks, delta_exponent)
    total = w[0] * abs(c[0]) ** 2 + 2.0 * np.sum(w[1:] * np.abs(c[1:]) ** 2)
    return float(np.sqrt(total))


def grid_fourier_coeffs(f: GridFunction, kmax: int | None = None) -> np.ndarray:
    """Coefficients F f(k), k = 0..kmax, of a grid function."""
    c = half_spectrum(f.values)
    return c if kmax is None else c[: kmax + 1]


def h_delta_norm(f: GridFunction, delta_exponent: float, basis: WaveletBasis,
                 J: int | None = None) -> float:
    """Wavelet-side H(delta) norm: sum 2^{-l} l^{-2 delta} <f, psi_lk>^2.

    The levels l in {-1, 0} get weight 1 (the l^{-2 delta} factor is not
    defined there).
    """
    J = basis.J_max if J is None else J
    c = analyze(basis, f, J)
    total = 0.0
    for l, a, b in WaveletCoeffs.level_slices(J):
        w = 1.0 if l <= 0 else 2.0 ** (-l) * float(l) ** (-2 * delta_exponent)
        total += w * float(np.sum(c.flat[a:b] ** 2))
    return float(np.sqrt(total))


ESTIMATE_COLUMNS = {
    "quantity": "lambda_hat, levy_coeff, or levy_grid",
    "index": "frequency k for coefficients, grid index j for density values",
    "real": "real part (value itself for real quantities)",
    "imag": "imaginary part (0 for real quantities)",
}


def estimate_to_csv(path, lam_hat: float, coeffs_pos: np.ndarray, nu_hat: GridFunction) -> None:
    """Serialise (lambda_hat, F nu_hat(k), nu_hat grid values) to one tidy CSV."""
    from .reporting import write_csv

    rows = [{"quantity": "lambda_hat", "index": 0, "real": float(lam_hat), "imag": 0.0}]
    for k, c in enumerate(np.asarray(coeffs_pos, dtype=complex)):
        rows.append({"quantity": "levy_coeff", "index": k, "real": float(c.real), "imag": float(c.imag)})
    for j, v in enumerate(nu_hat.values):
        rows.append({"quantity": "levy_grid", "index": j, "real": float(v), "imag": 0.0})
    write_csv(path, ESTIMATE_COLUMNS, rows)
