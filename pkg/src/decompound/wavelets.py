"""Periodized orthonormal wavelet bases of L^2(I) sampled on a CircleGrid.

Levels are indexed l = -1, 0, 1, ..., with psi_{-1,0} the constant function 1
and 2^l wavelets at level l >= 1 (one at l = 0).  Basis vectors are produced
by running the orthonormal two-channel filter bank with circular wrapping on
the grid (the discrete cascade); this keeps the quadrature Gram matrix equal
to the identity up to rounding at every level, including the coarse ones
where the periodised filters overlap themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CircleGrid, GridFunction


def daubechies_filter(vanishing_moments: int) -> np.ndarray:
    """Orthonormal low-pass filter with the given number of vanishing moments.

    Computed by spectral factorisation of the Daubechies half-band polynomial
    (minimum-phase root selection); p = 1 reproduces the Haar filter.
    """
    p = int(vanishing_moments)
    if p < 1:
        raise ValueError("vanishing_moments must be >= 1")
    if p == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    # P(y) = sum_{k<p} C(p-1+k, k) y^k evaluated at y = -(z-1)^2 / (4z).
    from math import comb

    # Coefficients of z^{p-1} P(y(z)) as a polynomial in z (degree 2p-2).
    poly = np.zeros(2 * p - 1)
    base = np.array([-0.25, 0.5, -0.25])  # -(z-1)^2/4 as [z^2, z^1, z^0]
    for k in range(p):
        term = np.array([1.0])
        for _ in range(k):
            term = np.convolve(term, base)
        # multiply by z^{p-1-k} to clear the z^{-k} from y^k
        padded = np.zeros(2 * p - 1)
        offset = p - 1 - k
        padded[offset : offset + len(term)] = comb(p - 1 + k, k) * term[::-1]
        poly += padded
    roots = np.roots(poly[::-1])
    inside = roots[np.abs(roots) < 1.0]
    q = np.array([1.0])
    for r in inside:
        q = np.convolve(q, [1.0, -r])
    q = np.real(q)
    h = np.array([1.0])
    for _ in range(p):
        h = np.convolve(h, [0.5, 0.5])
    h = np.convolve(h, q)
    h *= np.sqrt(2.0) / np.sum(h)
    return h


def _highpass(h: np.ndarray) -> np.ndarray:
    """Quadrature mirror filter g[n] = (-1)^n h[L-1-n]."""
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _synthesis_stage(approx: np.ndarray, detail: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """One inverse filter-bank stage with circular wrapping: length m -> 2m."""
    m = len(approx)
    out = np.zeros(2 * m)
    pos = (2 * np.arange(m)[:, None] + np.arange(len(h))[None, :]) % (2 * m)
    np.add.at(out, pos, np.outer(approx, h) + np.outer(detail, g))
    return out


@dataclass(frozen=True)
class WaveletCoeffs:
    """Triangular coefficient array c_{lk}, l = -1..J-1, k = 0..(2^l v 1)-1.

    Stored flat in level-major order; total length 2^J.
    """

    J: int
    flat: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.flat, dtype=float)
        if v.shape != (2**self.J,):
            raise ValueError(f"flat must have length {2**self.J}, got {v.shape}")
        object.__setattr__(self, "flat", v)

    @staticmethod
    def zeros(J: int) -> "WaveletCoeffs":
        return WaveletCoeffs(J, np.zeros(2**J))

    @staticmethod
    def level_slices(J: int):
        """[(l, start, stop)] for levels l = -1..J-1 within the flat layout."""
        out, pos = [], 0
        for l in range(-1, J):
            width = max(2**l, 1)
            out.append((l, pos, pos + width))
            pos += width
        return out

    def level(self, l: int) -> np.ndarray:
        for ll, a, b in self.level_slices(self.J):
            if ll == l:
                return self.flat[a:b]
        raise ValueError(f"level {l} not present at J={self.J}")

    def __getitem__(self, lk) -> float:
        l, k = lk
        return float(self.level(l)[k])


class WaveletBasis:
    """Cached samples of a periodized orthonormal basis on a grid.

    family is "haar" or "daubechies"; the Daubechies order is the number of
    vanishing moments (>= 3 recommended for the smoothness regimes used here,
    default 4).
    """

    def __init__(self, grid: CircleGrid, family: str = "daubechies",
                 vanishing_moments: int = 4, max_level: int | None = None):
        fam = family.lower()
        if fam == "haar":
            h = daubechies_filter(1)
            vanishing_moments = 1
        elif fam == "daubechies":
            if vanishing_moments < 2:
                raise ValueError("daubechies family requires >= 2 vanishing moments")
            h = daubechies_filter(vanishing_moments)
        else:
            raise ValueError(f"unknown family {family!r}")
        self.family = fam
        self.vanishing_moments = vanishing_moments
        self.grid = grid
        n = grid.n_points
        cap = int(np.log2(n)) - 3  # deepest level l = J-1 with 2^J <= N/4
        self.max_level = cap if max_level is None else min(max_level, cap)
        if self.max_level < 1:
            raise ValueError("grid too small for any wavelet level")
        self._h = h
        self._g = _highpass(h)
        self._samples = self._build_samples()

    @property
    def J_max(self) -> int:
        """Largest admissible truncation level J (levels l <= J-1 available)."""
        return self.max_level + 1

    def _mother(self, l: int) -> np.ndarray:
        """Synthesize one basis vector of level l on the full grid."""
        n = self.grid.n_points
        coeff_len = max(2**l, 1)
        vec_a = np.zeros(coeff_len)
        vec_d = np.zeros(coeff_len)
        if l == -1:
            vec_a[0] = 1.0
        else:
            vec_d[0] = 1.0
        cur = _synthesis_stage(vec_a, vec_d, self._h, self._g)
        while len(cur) < n:
            cur = _synthesis_stage(cur, np.zeros(len(cur)), self._h, self._g)
        return cur * np.sqrt(n)

    def _build_samples(self) -> np.ndarray:
        """Columns psi_{lk} in flat (l,k) order; shifts of the level mother."""
        n = self.grid.n_points
        cols = []
        for l in range(-1, self.J_max):
            mother = self._mother(l)
            width = max(2**l, 1)
            stride = n // width
            for k in range(width):
                cols.append(np.roll(mother, k * stride))
        return np.column_stack(cols)

    def sample(self, l: int, k: int) -> GridFunction:
        """Samples of psi_{lk} as a GridFunction."""
        flat = 0
        for ll, a, b in WaveletCoeffs.level_slices(self.J_max):
            if ll == l:
                if not 0 <= k < b - a:
                    raise ValueError(f"k={k} out of range at level {l}")
                flat = a + k
                break
        else:
            raise ValueError(f"level {l} beyond basis capacity {self.J_max - 1}")
        return GridFunction(self.grid, self._samples[:, flat].copy())

    def matrix(self, J: int) -> np.ndarray:
        """N x 2^J array of the basis samples for levels l <= J-1."""
        if not 1 <= J <= self.J_max:
            raise ValueError(f"J must be in 1..{self.J_max}, got {J}")
        return self._samples[:, : 2**J]

    def gram_deviation(self, J: int) -> float:
        """max |G - I| of the quadrature Gram matrix at truncation J."""
        m = self.matrix(J)
        g = m.T @ m / self.grid.n_points
        return float(np.max(np.abs(g - np.eye(2**J))))


def analyze(basis: WaveletBasis, f: GridFunction, J: int) -> WaveletCoeffs:
    """c_{lk} = quadrature of f * psi_{lk} for all levels l <= J-1."""
    if 2**J > basis.grid.n_points // 4:
        raise ValueError(f"J={J} too deep for grid of {basis.grid.n_points} points")
    m = basis.matrix(J)
    return WaveletCoeffs(J, m.T @ f.values / basis.grid.n_points)


def synthesize(basis: WaveletBasis, c: WaveletCoeffs) -> GridFunction:
    """sum_{lk} c_{lk} psi_{lk}; inverse of analyze on V_J."""
    m = basis.matrix(c.J)
    return GridFunction(basis.grid, m @ c.flat)


def project_Vj(basis: WaveletBasis, f: GridFunction, j: int) -> GridFunction:
    """L^2 projection onto V_j = span{psi_{lk}: l <= j-1}."""
    return synthesize(basis, analyze(basis, f, j))


def localization_bound_check(basis: WaveletBasis, j: int) -> float:
    """sup_x sum_k |psi_{jk}(x)| / 2^{(j v 0)/2}; bounded in j for these bases."""
    if j == -1:
        return 1.0
    width = max(2**j, 1)
    total = np.zeros(basis.grid.n_points)
    for k in range(width):
        total += np.abs(basis.sample(j, k).values)
    return float(np.max(total) / 2 ** (max(j, 0) / 2))
