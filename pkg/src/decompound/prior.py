"""Wavelet series prior, posterior sampling, and posterior functionals.

The prior draws u_{lk} i.i.d. uniform(-B, B) and sets

    v = sum_{l <= J-1} a_l u_{lk} psi_{lk},   a_l = 2^{-l} (l^2 + 1)^{-1},
    nu = e^v,

so the log-density lives in a product of shrinking boxes.  The posterior is
sampled by coordinatewise random-walk Metropolis with reflection at the box
walls, which leaves the open box invariant and reduces to the prior when no
observations are supplied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CircleGrid, GridFunction
from .model import IncrementSample, LevyDensity, deconv_measure, increment_law
from .score import PnuFunction, adjoint_inverse, pnu_inner
from .wavelets import WaveletBasis, WaveletCoeffs, analyze


def level_weight(l: int) -> float:
    """a_l = 2^{-l} (l^2 + 1)^{-1}; a_{-1} = a_0 = 1, a_1 = 1/4."""
    return 2.0 ** (-l) / (l * l + 1.0)


def flat_level_weights(J: int) -> np.ndarray:
    w = np.empty(2**J)
    for l, a, b in WaveletCoeffs.level_slices(J):
        w[a:b] = level_weight(l)
    return w


def flat_levels(J: int) -> np.ndarray:
    out = np.empty(2**J, dtype=int)
    for l, a, b in WaveletCoeffs.level_slices(J):
        out[a:b] = l
    return out


@dataclass(frozen=True)
class PriorConfig:
    B: float = 1.0
    J: int = 3
    gamma: float = 0.1

    def __post_init__(self):
        if not self.B > self.gamma > 0:
            raise ValueError("need B > gamma > 0")
        if self.J < 1:
            raise ValueError("J must be >= 1")


def choose_J(n: int, s: float, j_max: int = 16) -> int:
    """Truncation level with 2^J ~ n^{1/(2s+1)}, rounded to nearest."""
    if n < 1:
        raise ValueError("n must be >= 1")
    J = int(round(np.log2(n) / (2 * s + 1)))
    return max(1, min(J, j_max))


def sample_prior(cfg: PriorConfig, basis: WaveletBasis, delta: float,
                 rng: np.random.Generator):
    """One draw (u, nu) from the prior."""
    u = rng.uniform(-cfg.B, cfg.B, size=2**cfg.J)
    coeffs = WaveletCoeffs(cfg.J, flat_level_weights(cfg.J) * u)
    v = basis.matrix(cfg.J) @ coeffs.flat
    nu = LevyDensity(GridFunction(basis.grid, np.exp(v)), delta)
    return WaveletCoeffs(cfg.J, u), nu


def prior_log_envelope(cfg: PriorConfig, basis: WaveletBasis) -> np.ndarray:
    """Pointwise bound sup over the box of |v(x)| = B sum a_l |psi_{lk}(x)|."""
    m = np.abs(basis.matrix(cfg.J))
    return cfg.B * (m @ flat_level_weights(cfg.J))


def prior_max_intensity(cfg: PriorConfig, basis: WaveletBasis) -> float:
    """Upper bound on lambda over the prior support (monotonicity of exp)."""
    return float(np.mean(np.exp(prior_log_envelope(cfg, basis))))


def check_assumption1(nu0: LevyDensity, cfg: PriorConfig, basis: WaveletBasis,
                      n_draws: int = 100, rng: np.random.Generator | None = None) -> dict:
    """Interior-point and identifiability diagnostics for truth and prior.

    Reports the worst coefficient margin (B - gamma) a_l - |<v0, psi_lk>| over
    all levels the basis resolves, the intensity margins pi/Delta - lambda for
    the truth and for prior draws, and the a-priori bound on the prior's
    maximal intensity.
    """
    rng = rng or np.random.default_rng(0)
    v0 = GridFunction(nu0.grid, np.log(nu0.values))
    c0 = analyze(basis, v0, basis.J_max)
    margins = []
    for l, a, b in WaveletCoeffs.level_slices(basis.J_max):
        bound = (cfg.B - cfg.gamma) * level_weight(l)
        margins.append(bound - np.max(np.abs(c0.flat[a:b])))
    coef_margin = float(min(margins))
    pi_over_delta = np.pi / nu0.delta
    truth_margin = float(pi_over_delta - nu0.intensity)
    draw_lams = []
    for _ in range(n_draws):
        _, nu = sample_prior(cfg, basis, nu0.delta, rng)
        draw_lams.append(nu.intensity)
    max_intensity_bound = prior_max_intensity(cfg, basis)
    report = {
        "coef_margin": coef_margin,
        "truth_intensity_margin": truth_margin,
        "worst_draw_intensity_margin": float(pi_over_delta - max(draw_lams)) if draw_lams else np.nan,
        "prior_max_intensity_bound": max_intensity_bound,
        "prior_bound_margin": float(pi_over_delta - max_intensity_bound),
        "passes": bool(
            coef_margin >= 0
            and truth_margin > 0
            and max_intensity_bound < pi_over_delta
        ),
    }
    return report


@dataclass(frozen=True)
class McmcConfig:
    n_iter: int = 4000
    burn_in: int = 1000
    thinning: int = 1
    step_scale: float = 0.5
    pilot_sweeps: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.pilot_sweeps > self.burn_in:
            raise ValueError("pilot phase must fit inside the burn-in")


@dataclass
class McmcChain:
    J: int
    B: float
    states: np.ndarray  # kept draws of u, shape (M, 2^J)
    log_liks: np.ndarray
    accept_rate: np.ndarray  # per level
    step_sizes: np.ndarray  # per level, after the pilot phase
    delta: float

    @property
    def n_states(self) -> int:
        return len(self.states)

    def coeff_states(self) -> np.ndarray:
        """Draws of the log-density wavelet coefficients a_l u_{lk}."""
        return self.states * flat_level_weights(self.J)[None, :]


class _Likelihood:
    """Observation log-likelihood as a function of the flat u vector."""

    def __init__(self, basis: WaveletBasis, J: int, sample: IncrementSample, delta: float):
        self.m = basis.matrix(J)
        self.weights = flat_level_weights(J)
        self.delta = delta
        self.empty = sample.n == 0
        if not self.empty:
            x = sample.values
            zero = x == 0.0
            self.n_zero = int(zero.sum())
            grid = basis.grid
            i0, i1, w = grid.index_weights(x[~zero])
            self.i0, self.i1, self.w = i0, i1, w
            self.n_pos = len(i0)
            self.ref_const = self.n_pos * np.log(-np.expm1(-delta))

    def logv(self, u: np.ndarray) -> np.ndarray:
        return self.m @ (self.weights * u)

    def value_from_logv(self, v: np.ndarray) -> float:
        if self.empty:
            return 0.0
        nu = np.exp(v)
        lam = float(np.mean(nu))
        n = len(nu)
        atom = np.exp(-self.delta * lam)
        # irfft of the conjugated half-spectrum; the two conjugations cancel
        q = np.fft.irfft(np.exp(self.delta * (np.fft.rfft(nu) / n - lam)) - atom, n=n) * n
        ll = self.n_zero * self.delta * (1.0 - lam)
        if self.n_pos:
            qx = q[self.i0] * (1.0 - self.w) + q[self.i1] * self.w
            if np.min(qx) <= 0.0:
                raise FloatingPointError(
                    f"increment density nonpositive at a sample point (min {np.min(qx):.3e}); "
                    "grid under-resolved for this state"
                )
            ll += float(np.sum(np.log(qx))) - self.ref_const
        return ll


def _reflect_into_box(y: float, B: float) -> float:
    """Reflect a real proposal into [-B, B] (triangle map of period 4B)."""
    z = (y + B) % (4.0 * B)
    if z > 2.0 * B:
        z = 4.0 * B - z
    return z - B


def run_mcmc(prior_cfg: PriorConfig, sample: IncrementSample, mcmc_cfg: McmcConfig,
             basis: WaveletBasis, delta: float) -> McmcChain:
    """Coordinatewise reflective random-walk Metropolis over the u-box.

    The target is proportional to L_n(nu) on the open box; reflection keeps
    proposals symmetric and inside, so with zero observations the chain's
    invariant law is the uniform prior.  Fixed seed gives a bit-identical
    chain.
    """
    J, B = prior_cfg.J, prior_cfg.B
    dim = 2**J
    rng = np.random.default_rng(mcmc_cfg.seed)
    lik = _Likelihood(basis, J, sample, delta)
    levels = flat_levels(J)
    n_levels = J + 1
    sigma = np.array([mcmc_cfg.step_scale * B * level_weight(l) for l in range(-1, J)])
    u = rng.uniform(-B, B, size=dim)
    v = lik.logv(u)
    ll = lik.value_from_logv(v)

    kept = []
    kept_ll = []
    acc = np.zeros(n_levels)
    prop = np.zeros(n_levels)
    pilot_acc = np.zeros(n_levels)
    pilot_prop = np.zeros(n_levels)
    adapt_every = 50
    cols = lik.m
    wts = flat_level_weights(J)

    for sweep in range(mcmc_cfg.n_iter):
        in_pilot = sweep < mcmc_cfg.pilot_sweeps
        for idx in range(dim):
            li = levels[idx] + 1
            unew = _reflect_into_box(u[idx] + sigma[li] * rng.standard_normal(), B)
            dv = wts[idx] * (unew - u[idx])
            v_new = v + dv * cols[:, idx]
            ll_new = lik.value_from_logv(v_new)
            if in_pilot:
                pilot_prop[li] += 1
            else:
                prop[li] += 1
            if np.log(rng.random()) < ll_new - ll:
                u[idx] = unew
                v = v_new
                ll = ll_new
                if in_pilot:
                    pilot_acc[li] += 1
                else:
                    acc[li] += 1
        if in_pilot and (sweep + 1) % adapt_every == 0:
            rates = np.divide(pilot_acc, np.maximum(pilot_prop, 1))
            sigma = np.where(rates > 0.5, np.minimum(sigma * 1.6, B), sigma)
            sigma = np.where(rates < 0.2, sigma / 1.6, sigma)
            pilot_acc[:] = 0
            pilot_prop[:] = 0
        if sweep >= mcmc_cfg.burn_in and (sweep - mcmc_cfg.burn_in) % mcmc_cfg.thinning == 0:
            kept.append(u.copy())
            kept_ll.append(ll)

    return McmcChain(
        J=J,
        B=B,
        states=np.array(kept),
        log_liks=np.array(kept_ll),
        accept_rate=np.divide(acc, np.maximum(prop, 1)),
        step_sizes=sigma,
        delta=delta,
    )


@dataclass(frozen=True)
class FunctionalTraces:
    """Posterior traces of V(t), lambda = V(1/2) and M(t) = V(t)/V(1/2)."""

    t: np.ndarray
    V: np.ndarray  # (n_states, len(t))
    lam: np.ndarray  # (n_states,)
    M: np.ndarray  # (n_states, len(t))


def cumulative_intensity(nu_values: np.ndarray, grid: CircleGrid, t: np.ndarray) -> np.ndarray:
    """V(t) = int_{-1/2}^t nu by cell quadrature with linear interpolation."""
    order = np.argsort(grid.points, kind="stable")
    knots = np.concatenate(([-0.5], grid.points[order]))
    cums = np.concatenate(([0.0], np.cumsum(nu_values[order]) / grid.n_points))
    return np.interp(t, knots, cums)


def posterior_functionals(chain: McmcChain, basis: WaveletBasis,
                          t_points=None) -> FunctionalTraces:
    if chain.n_states == 0:
        raise ValueError("empty chain")
    t = np.asarray(t_points if t_points is not None else np.linspace(-0.5, 0.5, 21))
    m = basis.matrix(chain.J)
    coeffs = chain.coeff_states()
    V = np.empty((chain.n_states, len(t)))
    lam = np.empty(chain.n_states)
    for i in range(chain.n_states):
        nu_vals = np.exp(m @ coeffs[i])
        lam[i] = np.mean(nu_vals)
        V[i] = cumulative_intensity(nu_vals, basis.grid, t)
    return FunctionalTraces(t=t, V=V, lam=lam, M=V / lam[:, None])


class CenterEstimator:
    """Efficient centring hnu(J): truth coefficients plus the empirical
    average of (A*_{nu0})^{-1}[psi_{lk} 1_{0^c}] at the observations."""

    def __init__(self, nu0: LevyDensity, J: int, basis: WaveletBasis):
        self.J = J
        self.truth_coeffs = analyze(basis, nu0.density, J).flat
        pi = deconv_measure(nu0)
        self.kernels: list[PnuFunction] = [
            adjoint_inverse(nu0, basis.matrix(J)[:, idx], pi) for idx in range(2**J)
        ]

    def estimate(self, sample: IncrementSample) -> WaveletCoeffs:
        out = self.truth_coeffs.copy()
        if sample.n:
            for idx, k in enumerate(self.kernels):
                out[idx] += float(np.mean(k.evaluate(sample.values)))
        return WaveletCoeffs(self.J, out)


def center_estimator(nu0: LevyDensity, sample: IncrementSample, J: int,
                     basis: WaveletBasis) -> WaveletCoeffs:
    return CenterEstimator(nu0, J, basis).estimate(sample)


def bvm_covariance(nu0: LevyDensity, J: int, basis: WaveletBasis) -> np.ndarray:
    """Gram matrix of the whitening kernels under L^2(P_{nu0}).

    Entry ((l,k),(l',k')) is the inner product of (A*)^{-1}(psi_{lk} 1_{0^c})
    and (A*)^{-1}(psi_{l'k'} 1_{0^c}); the diagonal reproduces cramer_rao.
    """
    est = CenterEstimator(nu0, J, basis)
    law = increment_law(nu0)
    dim = 2**J
    cov = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            cov[i, j] = cov[j, i] = pnu_inner(law, est.kernels[i], est.kernels[j])
    return cov


@dataclass(frozen=True)
class MultiscaleConfig:
    """Level weights for the multiscale sup norm; must grow faster than l^4."""

    weights: np.ndarray

    @staticmethod
    def default(J: int) -> "MultiscaleConfig":
        w = np.array([max(1, l) ** 4 * np.log(np.e + l) for l in range(-1, J)])
        return MultiscaleConfig(w)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(np.diff(w) < 0):
            raise ValueError("multiscale weights must be monotone increasing")
        object.__setattr__(self, "weights", w)


def multiscale_norm(x: WaveletCoeffs, cfg: MultiscaleConfig) -> float:
    """sup_l max_k |x_{lk}| / w_l."""
    best = 0.0
    for i, (l, a, b) in enumerate(WaveletCoeffs.level_slices(x.J)):
        if i >= len(cfg.weights):
            raise ValueError("not enough weights for the coefficient levels")
        best = max(best, float(np.max(np.abs(x.flat[a:b]))) / cfg.weights[i])
    return best


CHAIN_COLUMNS = {
    "iter": "kept-state index (after burn-in and thinning)",
    "l": "wavelet level (-1 is the constant)",
    "k": "shift index within the level",
    "u_lk": "box coordinate of the state",
}

TRACE_COLUMNS = {
    "iter": "kept-state index (after burn-in and thinning)",
    "t": "evaluation point in I",
    "V": "cumulative intensity V(t) of the state",
    "lambda": "total intensity V(1/2) of the state",
    "M": "jump distribution function M(t) = V(t)/V(1/2)",
}


def chain_to_csv(chain: McmcChain, path) -> None:
    """One row per (kept state, coefficient): iter, l, k, u_lk."""
    from .reporting import write_csv

    rows = []
    slices = WaveletCoeffs.level_slices(chain.J)
    for it in range(chain.n_states):
        for l, a, b in slices:
            for k in range(b - a):
                rows.append({"iter": it, "l": l, "k": k, "u_lk": chain.states[it, a + k]})
    write_csv(path, CHAIN_COLUMNS, rows)


def traces_to_csv(traces: FunctionalTraces, path) -> None:
    """One row per (kept state, evaluation point): iter, t, V, lambda, M."""
    from .reporting import write_csv

    rows = []
    for it in range(len(traces.lam)):
        for j, t in enumerate(traces.t):
            rows.append(
                {"iter": it, "t": float(t), "V": traces.V[it, j],
                 "lambda": traces.lam[it], "M": traces.M[it, j]}
            )
    write_csv(path, TRACE_COLUMNS, rows)
