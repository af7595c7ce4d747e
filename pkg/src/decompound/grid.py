"""Grid arithmetic on the circle I = (-1/2, 1/2].

The circle is treated as a compact group under addition modulo 1 and is
discretised by N equispaced points with 0 on the grid.  Measures are split
into a point mass at 0 plus a sampled Lebesgue density, so that the atom
channel of the increment law stays exact.  All quadrature is the left
Riemann sum, which on the circle coincides with the trapezoid rule and is
exact for band-limited integrands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CircleGrid:
    """Equispaced grid on (-1/2, 1/2] with x_0 = 0 exactly."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 4 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 4, got {n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_points

    @property
    def points(self) -> np.ndarray:
        """Grid coordinates in I, indexed by the circular index j (x_j = j/N mod 1)."""
        n = self.n_points
        x = np.arange(n) / n
        x[x > 0.5] -= 1.0
        return x

    def wrap(self, x):
        """Map real coordinates into I = (-1/2, 1/2] (addition modulo 1)."""
        y = np.mod(np.asarray(x, dtype=float), 1.0)
        return np.where(y > 0.5, y - 1.0, y)

    def index_weights(self, x):
        """Circular linear-interpolation stencil for points x: (i0, i1, w)."""
        u = np.mod(np.asarray(x, dtype=float), 1.0) * self.n_points
        i0 = np.floor(u).astype(np.int64) % self.n_points
        w = u - np.floor(u)
        i1 = (i0 + 1) % self.n_points
        return i0, i1, w


@dataclass(frozen=True)
class GridFunction:
    """Real function sampled on a CircleGrid."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"values must have length {self.grid.n_points}, got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)

    def interp(self, x):
        """Periodic linear interpolation at arbitrary points of I."""
        i0, i1, w = self.grid.index_weights(x)
        v = self.values
        return v[i0] * (1.0 - w) + v[i1] * w


def integrate(f: GridFunction) -> float:
    """Period-1 quadrature: the mean of the samples."""
    return float(np.mean(f.values))


def dft(f: GridFunction, k_range) -> np.ndarray:
    """Fourier coefficients F f(k) = integral of f(x) e^{2 pi i k x} dx.

    Riemann-sum discretisation, exact for band-limited f.  Frequencies must
    satisfy |k| <= N/2.
    """
    ks = np.atleast_1d(np.asarray(k_range, dtype=np.int64))
    n = f.grid.n_points
    if np.any(np.abs(ks) > n // 2):
        raise ValueError(f"frequencies must satisfy |k| <= {n // 2}")
    full = np.fft.ifft(f.values)  # (1/N) sum f_j e^{2 pi i j k / N}
    return full[np.mod(ks, n)]


def idft(grid: CircleGrid, k_range, coeffs) -> GridFunction:
    """Trigonometric synthesis f(x_j) = sum_k c_k e^{-2 pi i k x_j}.

    Inverse of dft on band-limited sequences; the coefficient list must be
    Hermitian (c_{-k} = conj(c_k)) for the result to be real.
    """
    ks = np.atleast_1d(np.asarray(k_range, dtype=np.int64))
    cs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if ks.shape != cs.shape:
        raise ValueError("k_range and coeffs must have matching shapes")
    n = grid.n_points
    if np.any(np.abs(ks) > n // 2):
        raise ValueError(f"frequencies must satisfy |k| <= {n // 2}")
    spec = np.zeros(n, dtype=complex)
    np.add.at(spec, np.mod(ks, n), cs)
    vals = np.fft.fft(spec)  # fft(c)[j] = sum_k c_k e^{-2 pi i j k / N}
    if np.max(np.abs(vals.imag)) > 1e-9 * max(1.0, np.max(np.abs(vals.real))):
        raise ValueError("coefficients are not Hermitian; synthesis is not real")
    return GridFunction(grid, vals.real.copy())


def half_spectrum(f: np.ndarray) -> np.ndarray:
    """F f(k) for k = 0..N/2 of a real sample vector (our transform convention)."""
    n = len(f)
    return np.conj(np.fft.rfft(f)) / n


def from_half_spectrum(c: np.ndarray, n: int) -> np.ndarray:
    """Real samples from coefficients F f(k), k = 0..N/2."""
    return np.fft.irfft(np.conj(c) * n, n=n)


def convolve_values(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quadrature circular convolution of densities: (1/N) sum_m a_m b_{j-m}."""
    n = len(a)
    return np.fft.irfft(np.fft.rfft(a) * np.fft.rfft(b), n=n) / n


def correlate_values(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Reflected convolution (a(-.) * b)(x_j) = (1/N) sum_m a_m b_{j+m}."""
    n = len(a)
    return np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n=n) / n


def reflect_values(a: np.ndarray) -> np.ndarray:
    """Samples of x -> a(-x): index map j -> (-j) mod N."""
    return np.roll(a[::-1], 1)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite signed measure: atom0 * delta_0 + density * Lebesgue."""

    atom0: float
    density: GridFunction

    @property
    def grid(self) -> CircleGrid:
        return self.density.grid

    @property
    def total_mass(self) -> float:
        return self.atom0 + integrate(self.density)

    def fourier(self, k_range) -> np.ndarray:
        """F m(k) = atom0 + F density(k)."""
        return self.atom0 + dft(self.density, k_range)

    def scaled(self, c: float) -> "AtomicMeasure":
        return AtomicMeasure(c * self.atom0, GridFunction(self.grid, c * self.density.values))


def dirac(grid: CircleGrid, mass: float = 1.0) -> AtomicMeasure:
    return AtomicMeasure(mass, GridFunction(grid, np.zeros(grid.n_points)))


def circ_convolve(a: AtomicMeasure, b: AtomicMeasure) -> AtomicMeasure:
    """(c1 d0 + f1) * (c2 d0 + f2) = c1 c2 d0 + (c1 f2 + c2 f1 + f1 * f2)."""
    if a.grid.n_points != b.grid.n_points:
        raise ValueError("grid mismatch")
    f1, f2 = a.density.values, b.density.values
    dens = a.atom0 * f2 + b.atom0 * f1 + convolve_values(f1, f2)
    return AtomicMeasure(a.atom0 * b.atom0, GridFunction(a.grid, dens))


def reflect(m: AtomicMeasure) -> AtomicMeasure:
    """The measure m(-.); the atom at 0 is unchanged."""
    return AtomicMeasure(m.atom0, GridFunction(m.grid, reflect_values(m.density.values)))
