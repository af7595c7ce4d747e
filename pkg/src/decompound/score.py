"""Score operator calculus for the increment law.

The score of a log-scale perturbation h is

    A_nu(h) = Delta * d[(h nu - (int h dnu) delta_0) * P_nu] / dP_nu,

an element of L^2_0(P_nu) carried here as a PnuFunction with an explicit
value on the atom {0} plus grid values off the atom.  The inverse, adjoint
A*_nu(w) = Delta P_nu(-.) * w, adjoint inverse (A*_nu)^{-1}(g) =
(1/Delta) pi_nu(-.) * g, influence functions and the Cramer-Rao bound are
all realised through circular convolutions with the atom channel kept exact.

Discretisation convention for "psi(0) = 0": whenever a Dirac mass evaluates
a grid function at the point 0, the value 0 is used; Lebesgue quadratures
keep the raw sample (a single grid point carries no Lebesgue mass).  With
this convention the centring identity int (A*)^{-1}(g) dP_nu = 0 and the
bilinear identity int A(h) A(psi~) dP = -<h, psi> hold to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    AtomicMeasure,
    CircleGrid,
    GridFunction,
    circ_convolve,
    convolve_values,
    correlate_values,
)
from .model import LevyDensity, IncrementSample, deconv_measure, increment_law, log_likelihood

DENSITY_FLOOR = 1e-6


@dataclass(frozen=True)
class PnuFunction:
    """Element of L^2(P_nu): value at the atom {0} plus values off the atom."""

    atom_value: float
    values: GridFunction

    @property
    def grid(self) -> CircleGrid:
        return self.values.grid

    def evaluate(self, x) -> np.ndarray:
        """Pointwise evaluation: atom value at exact zeros, interpolation off 0."""
        x = np.asarray(x, dtype=float)
        out = self.values.interp(x)
        return np.where(x == 0.0, self.atom_value, out)


def pnu_integral(law: AtomicMeasure, f: PnuFunction) -> float:
    """int f dP_nu = atom * f(0) + quadrature(f * q_nu)."""
    return float(law.atom0 * f.atom_value + np.mean(f.values.values * law.density.values))


def pnu_inner(law: AtomicMeasure, f: PnuFunction, g: PnuFunction) -> float:
    """<f, g>_{L^2(P_nu)} with the atom channel weighted by P_nu({0})."""
    return float(
        law.atom0 * f.atom_value * g.atom_value
        + np.mean(f.values.values * g.values.values * law.density.values)
    )


def pnu_norm2(law: AtomicMeasure, f: PnuFunction) -> float:
    return pnu_inner(law, f, f)


def _require_floor(arr: np.ndarray, what: str, floor: float = DENSITY_FLOOR) -> None:
    if np.min(arr) < floor:
        raise ValueError(f"{what} must be bounded below by {floor}")


def score_measure(nu: LevyDensity, m: AtomicMeasure, law: AtomicMeasure | None = None) -> PnuFunction:
    """Extended score A_nu on the domain of measures kappa_a + c delta_0.

    Multiplies the input measure by nu, convolves with P_nu and takes the
    Radon-Nikodym derivative; the delta_0 component lies in the kernel.
    """
    if law is None:
        law = increment_law(nu)
    q = law.density.values
    _require_floor(q, "increment density", 0.0)
    f = nu.values * m.density.values  # density of nu * (a.c. part)
    mean_f = float(np.mean(f))
    vals = nu.delta * (law.atom0 * f + convolve_values(f, q) - mean_f * q) / q
    atom = -nu.delta * mean_f
    return PnuFunction(atom, GridFunction(nu.grid, vals))


def score(nu: LevyDensity, h, law: AtomicMeasure | None = None) -> PnuFunction:
    """A_nu(h) for a log-scale direction h given as grid samples."""
    if isinstance(h, AtomicMeasure):
        return score_measure(nu, h, law)
    values = h.values if isinstance(h, GridFunction) else np.asarray(h, dtype=float)
    m = AtomicMeasure(0.0, GridFunction(nu.grid, values))
    return score_measure(nu, m, law)


def score_inverse(nu: LevyDensity, g: PnuFunction, law: AtomicMeasure | None = None,
                  tol: float = 1e-8) -> AtomicMeasure:
    """Inverse score: (1/(Delta nu)) pi_nu * (g P_nu), an atom + density measure.

    Requires g centred under P_nu; the result reproduces g under score().
    """
    if law is None:
        law = increment_law(nu)
    center = pnu_integral(law, g)
    scale = max(1.0, np.sqrt(pnu_norm2(law, g)))
    if abs(center) > tol * scale:
        raise ValueError(f"score_inverse requires a centred input; int g dP = {center:.3e}")
    _require_floor(nu.values, "levy density")
    pi = deconv_measure(nu)
    g_meas = AtomicMeasure(g.atom_value * law.atom0, GridFunction(nu.grid, g.values.values * law.density.values))
    conv = circ_convolve(pi, g_meas)
    inv_scale = 1.0 / nu.delta
    atom = inv_scale * conv.atom0 / nu.values[0]
    dens = inv_scale * conv.density.values / nu.values
    return AtomicMeasure(atom, GridFunction(nu.grid, dens))


def adjoint(nu: LevyDensity, w: PnuFunction, law: AtomicMeasure | None = None) -> GridFunction:
    """A*_nu(w) = Delta P_nu(-.) * w as a function in L^2(nu).

    The atom of P_nu(-.) hits the off-atom values of w; the atom value of w
    never enters (it sits on a Lebesgue-null set of the output domain).
    """
    if law is None:
        law = increment_law(nu)
    wv = w.values.values
    vals = nu.delta * (law.atom0 * wv + correlate_values(law.density.values, wv))
    return GridFunction(nu.grid, vals)


def adjoint_inverse(nu: LevyDensity, g, pi: AtomicMeasure | None = None) -> PnuFunction:
    """(A*_nu)^{-1}(g) = (1/Delta) pi_nu(-.) * g as a PnuFunction.

    The input's value at the grid point 0 is zeroed where the atom channel of
    pi_nu(-.) evaluates it (the 1_{0^c} convention); quadrature terms keep the
    raw samples, which makes int (A*)^{-1}(g) dP_nu vanish identically.
    """
    gv = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    if pi is None:
        pi = deconv_measure(nu)
    conv = correlate_values(pi.density.values, gv)
    inv_scale = 1.0 / nu.delta
    atom = inv_scale * conv[0]  # e^{Delta*lambda} * g(0) term dropped: g(0) := 0
    vals = inv_scale * (pi.atom0 * gv + conv)
    return PnuFunction(float(atom), GridFunction(nu.grid, vals))


def influence(nu: LevyDensity, psi, law: AtomicMeasure | None = None):
    """Efficient influence representer for the functional int psi dnu.

    Returns (psi_tilde, c): the absolutely continuous part of
    -A~_nu[(A*_nu)^{-1}(psi/nu)] and the coefficient of its delta_0 part.
    """
    psiv = psi.values if isinstance(psi, GridFunction) else np.asarray(psi, dtype=float)
    _require_floor(nu.values, "levy density")
    if law is None:
        law = increment_law(nu)
    w = adjoint_inverse(nu, psiv / nu.values)
    m = score_inverse(nu, w, law)
    psi_tilde = GridFunction(nu.grid, -m.density.values)
    c = -m.atom0
    return psi_tilde, float(c)


def cramer_rao(nu0: LevyDensity, psi, law: AtomicMeasure | None = None) -> float:
    """Lower bound ||(A*_nu0)^{-1}[psi 1_{0^c}]||^2_{L^2(P_nu0)} for int psi dnu."""
    if law is None:
        law = increment_law(nu0)
    w = adjoint_inverse(nu0, psi)
    return pnu_norm2(law, w)


def lan_inner(nu: LevyDensity, f, g, law: AtomicMeasure | None = None) -> float:
    """<f, g>_LAN = <A_nu(f), A_nu(g)>_{L^2(P_nu)}."""
    if law is None:
        law = increment_law(nu)
    return pnu_inner(law, score(nu, f, law), score(nu, g, law))


def multilinear_score(nu: LevyDensity, *ws, law: AtomicMeasure | None = None) -> PnuFunction:
    """Multilinear form Delta^k d[(w1 nu - d0 int w1 dnu) * ... * P_nu]/dP_nu.

    Supported for k in {1, 2, 3}; k = 1 coincides with score on grid inputs.
    """
    k = len(ws)
    if not 1 <= k <= 3:
        raise ValueError("multilinear_score supports 1 to 3 arguments")
    if law is None:
        law = increment_law(nu)
    conv: AtomicMeasure | None = None
    for w in ws:
        wv = w.values if isinstance(w, GridFunction) else np.asarray(w, dtype=float)
        f = nu.values * wv
        factor = AtomicMeasure(-float(np.mean(f)), GridFunction(nu.grid, f))
        conv = factor if conv is None else circ_convolve(conv, factor)
    conv = circ_convolve(conv, law)
    scale = nu.delta**k
    atom = scale * conv.atom0 / law.atom0
    vals = scale * conv.density.values / law.density.values
    return PnuFunction(float(atom), GridFunction(nu.grid, vals))


def log_density_path_derivatives(nu0: LevyDensity, w, s: float = 0.0):
    """First and second s-derivatives of log(dP_{nu^(s)}/dP_Lambda) along
    nu^(s) = exp(s*w + log nu0), returned as PnuFunctions.

    d/ds log p = A(w) and d^2/ds^2 log p = A(w^2) + A(w, w) - A(w)^2,
    evaluated at nu^(s).
    """
    wv = w.values if isinstance(w, GridFunction) else np.asarray(w, dtype=float)
    base = np.log(nu0.values) if s == 0.0 else np.log(nu0.values) + s * wv
    nus = LevyDensity(GridFunction(nu0.grid, np.exp(base)), nu0.delta)
    law = increment_law(nus)
    a1 = score(nus, wv, law)
    a2_sq = score(nus, wv * wv, law)
    a2_bi = multilinear_score(nus, wv, wv, law=law)
    d1 = a1
    d2 = PnuFunction(
        a2_sq.atom_value + a2_bi.atom_value - a1.atom_value**2,
        GridFunction(
            nu0.grid,
            a2_sq.values.values + a2_bi.values.values - a1.values.values**2,
        ),
    )
    return d1, d2


def lan_expansion_check(nu: LevyDensity, h, sample: IncrementSample,
                        law: AtomicMeasure | None = None) -> float:
    """LAN remainder: l_n(e^{v + h/sqrt n}) - l_n(nu) - n^{-1/2} sum A(h)(X_i)
    + 0.5 ||A(h)||^2_{L^2(P_nu)}."""
    hv = h.values if isinstance(h, GridFunction) else np.asarray(h, dtype=float)
    n = sample.n
    if n == 0:
        raise ValueError("empty sample")
    if law is None:
        law = increment_law(nu)
    a = score(nu, hv, law)
    pert = LevyDensity(GridFunction(nu.grid, nu.values * np.exp(hv / np.sqrt(n))), nu.delta)
    ll_diff = log_likelihood(pert, sample) - log_likelihood(nu, sample)
    lin = float(np.sum(a.evaluate(sample.values))) / np.sqrt(n)
    quad = 0.5 * pnu_norm2(law, a)
    return float(ll_diff - lin + quad)
