"""Experiment drivers behind the command-line interface.

Each driver produces a list of per-replication metric rows plus a summary
dict; reporting.write_csv/write_summary serialise them.  Replications are
independent and parallelise across processes; every replication derives its
seeds from (master seed, stream, replication index) so results are invariant
to the worker count and merge order.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .families import make_truth, sine_pair
from .grid import AtomicMeasure, CircleGrid, GridFunction, circ_convolve, dirac
from .model import (
    LevyDensity,
    char_fn,
    deconv_measure,
    increment_law,
    simulate_increments,
)
from .prior import (
    CenterEstimator,
    McmcConfig,
    PriorConfig,
    bvm_covariance,
    check_assumption1,
    choose_J,
    cumulative_intensity,
    posterior_functionals,
    prior_max_intensity,
    run_mcmc,
)
from .score import (
    PnuFunction,
    adjoint,
    adjoint_inverse,
    influence,
    lan_expansion_check,
    pnu_inner,
    pnu_integral,
    score,
    score_inverse,
    score_measure,
)
from .spectral import (
    SpectralConfig,
    grid_fourier_coeffs,
    h_delta_norm_fourier,
    spectral_levy,
)
from .wavelets import WaveletBasis

SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    scenario: str = "default"
    n_points: int = 1024
    wavelet_family: str = "daubechies"
    vanishing_moments: int = 4
    truth_family: str = "exp_cosine"
    truth_params: dict = field(default_factory=lambda: {"amplitude": 0.2, "shift": 0.1})
    delta: float | None = None  # None: set from the prior's intensity bound
    s: float = 3.0
    n_grid: tuple = (500, 2000, 8000)
    replications: int = 50
    B: float = 1.0
    gamma: float = 0.1
    J: int | None = None  # None: choose_J(n, s) per sample size
    mcmc_n_iter: int = 3500
    mcmc_burn_in: int = 700
    mcmc_thinning: int = 2
    mcmc_step_scale: float = 0.5
    mcmc_pilot_sweeps: int = 300
    spectral_cutoff: int | None = None  # None: K = n
    spectral_small_cutoff: int = 8
    delta_exponent: float = 1.0
    seed: int = 0
    threads: int = 1

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        version = raw.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema_version {version}")
        cfg = ExperimentConfig()
        for key, val in raw.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config field {key!r}")
            setattr(cfg, key, tuple(val) if key == "n_grid" else val)
        return cfg

    def to_dict(self) -> dict:
        d = self.to_dict_plain()
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_dict_plain(self) -> dict:
        """Field dict that reconstructs the config via ExperimentConfig(**d)."""
        d = dict(self.__dict__)
        d["n_grid"] = list(self.n_grid)
        return d

    # ---- derived objects ------------------------------------------------
    def grid(self) -> CircleGrid:
        return CircleGrid(self.n_points)

    def basis(self) -> WaveletBasis:
        return _basis_cached(self.n_points, self.wavelet_family, self.vanishing_moments)

    def max_J(self) -> int:
        if self.J is not None:
            return self.J
        return max(choose_J(n, self.s, self.basis().J_max) for n in self.n_grid)

    def J_for(self, n: int) -> int:
        return self.J if self.J is not None else choose_J(n, self.s, self.basis().J_max)

    def resolved_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        bound = prior_max_intensity(PriorConfig(self.B, self.max_J(), self.gamma), self.basis())
        return round(0.95 * np.pi / bound, 4)

    def truth(self) -> LevyDensity:
        return make_truth(self.truth_family, self.grid(), self.resolved_delta(), self.truth_params)

    def prior_cfg(self, n: int) -> PriorConfig:
        return PriorConfig(self.B, self.J_for(n), self.gamma)

    def mcmc_cfg(self, seed: int) -> McmcConfig:
        return McmcConfig(
            n_iter=self.mcmc_n_iter,
            burn_in=self.mcmc_burn_in,
            thinning=self.mcmc_thinning,
            step_scale=self.mcmc_step_scale,
            pilot_sweeps=self.mcmc_pilot_sweeps,
            seed=seed,
        )


def derived_seed(master: int, stream: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master, stream, *key]))


def derived_int_seed(master: int, stream: int, *key: int) -> int:
    return int(np.random.SeedSequence([master, stream, *key]).generate_state(1)[0])


_BASIS_CACHE: dict = {}


def _basis_cached(n_points: int, family: str, vm: int) -> WaveletBasis:
    key = (n_points, family, vm)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = WaveletBasis(CircleGrid(n_points), family, vm)
    return _BASIS_CACHE[key]


def _run_parallel(worker, tasks: list, threads: int) -> list:
    """Run worker over tasks, preserving task order in the result list."""
    if threads <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks, chunksize=1))


# =====================================================================
# verify: the operator identity suite
# =====================================================================

VERIFY_SEEDS = (101, 202, 303)


def _random_levy(grid: CircleGrid, delta: float, rng: np.random.Generator) -> LevyDensity:
    """Random smooth density with log bounded by 1 (values in [e^-1, e])."""
    x = grid.points
    v = (
        rng.uniform(-0.5, 0.5) * np.cos(2 * np.pi * x + rng.uniform(0, 2 * np.pi))
        + rng.uniform(-0.3, 0.3) * np.sin(4 * np.pi * x + rng.uniform(0, 2 * np.pi))
        + rng.uniform(-0.2, 0.2)
    )
    v *= min(1.0, 1.0 / np.max(np.abs(v)))
    return LevyDensity(GridFunction(grid, np.exp(v)), delta)


def _centered_pnu(law, rng: np.random.Generator, grid: CircleGrid) -> PnuFunction:
    raw = PnuFunction(rng.uniform(-1, 1), GridFunction(grid, rng.standard_normal(grid.n_points)))
    shift = pnu_integral(law, raw) / (law.atom0 + np.mean(law.density.values))
    return PnuFunction(raw.atom_value - shift, GridFunction(grid, raw.values.values - shift))


def _sup_residual(f: PnuFunction, g: PnuFunction) -> float:
    return max(
        abs(f.atom_value - g.atom_value),
        float(np.max(np.abs(f.values.values - g.values.values))),
    )


def run_verify(n_points: int = 1024, seed: int = 0, corrupt_adjoint: bool = False) -> dict:
    """Run the identity suite across wavelet families, seeds and two lags."""
    grid = CircleGrid(n_points)
    checks: list[dict] = []

    def record(name: str, residual: float, tol: float) -> None:
        checks.append(
            {"check": name, "residual": float(residual), "tolerance": tol,
             "passed": bool(residual <= tol)}
        )

    def adj(nu, w, law):
        out = adjoint(nu, w, law)
        if corrupt_adjoint:
            return GridFunction(grid, 1.01 * out.values)
        return out

    for family, vm in (("haar", 1), ("daubechies", 4)):
        basis = _basis_cached(n_points, family, vm)
        for si, vseed in enumerate(VERIFY_SEEDS):
            rng = np.random.default_rng(np.random.SeedSequence([seed, vseed]))
            delta = 1.0 if si % 2 == 0 else 0.7
            nu = _random_levy(grid, delta, rng)
            law = increment_law(nu)
            pi = deconv_measure(nu)
            tag = f"[{family}/seed{si}]"

            kern = score_measure(nu, dirac(grid, rng.uniform(0.5, 2.0)), law)
            record(f"{tag} score kernel A(c d0) = 0", _sup_residual(kern, PnuFunction(0.0, GridFunction(grid, np.zeros(n_points)))), 0.0)

            h = basis.matrix(4) @ rng.uniform(-1, 1, 16)
            record(f"{tag} score centering", abs(pnu_integral(law, score(nu, h, law))), 1e-9)

            h2 = rng.standard_normal(n_points)
            lin = score(nu, 2.0 * h - 0.5 * h2, law)
            lin_ref = score(nu, h, law)
            lin_ref2 = score(nu, h2, law)
            comb = PnuFunction(
                2.0 * lin_ref.atom_value - 0.5 * lin_ref2.atom_value,
                GridFunction(grid, 2.0 * lin_ref.values.values - 0.5 * lin_ref2.values.values),
            )
            record(f"{tag} score linearity", _sup_residual(lin, comb), 1e-10)

            w = _centered_pnu(law, rng, grid)
            lhs = pnu_inner(law, score(nu, h, law), w)
            rhs = float(np.mean(h * adj(nu, w, law).values * nu.values))
            record(f"{tag} adjoint duality", abs(lhs - rhs), 1e-8)

            g = _centered_pnu(law, rng, grid)
            back = score_measure(nu, score_inverse(nu, g, law), law)
            record(f"{tag} score o score_inverse = Id", _sup_residual(back, g), 1e-7)

            ident = circ_convolve(law, pi)
            record(f"{tag} P * pi = delta_0 (atom)", abs(ident.atom0 - 1.0), 1e-8)
            record(f"{tag} P * pi = delta_0 (density)", float(np.max(np.abs(ident.density.values))), 1e-8)

            gg = rng.standard_normal(n_points)
            w2 = adjoint_inverse(nu, gg, pi)
            record(f"{tag} adjoint_inverse centering", abs(pnu_integral(law, w2)), 1e-8)
            back2 = adj(nu, w2, law)
            record(f"{tag} adjoint o adjoint_inverse = Id", float(np.max(np.abs(back2.values - gg))), 1e-7)

            worst = 0.0
            worst_d = 0.0
            for _ in range(20):
                hh = basis.matrix(5) @ rng.uniform(-1, 1, 32)
                psi = basis.matrix(5) @ rng.uniform(-1, 1, 32)
                psi_t, c = influence(nu, psi, law)
                a_h = score(nu, hh, law)
                val = pnu_inner(law, a_h, score(nu, psi_t.values, law))
                val_d = pnu_inner(law, a_h, score_measure(nu, AtomicMeasure(c, psi_t), law))
                target = -float(np.mean(hh * psi))
                worst = max(worst, abs(val - target))
                worst_d = max(worst_d, abs(val_d - target))
            record(f"{tag} bilinear identity (a.c. part)", worst, 1e-6)
            record(f"{tag} bilinear identity (with atom)", worst_d, 1e-6)

            ks = np.arange(-n_points // 2, n_points // 2)
            prod = pi.fourier(ks) * char_fn(nu, ks)
            record(f"{tag} deconvolution symbol", float(np.max(np.abs(prod - 1.0))), 1e-10)
            record(f"{tag} |phi| <= 1", float(np.max(np.abs(char_fn(nu, ks))) - 1.0), 1e-12)

    passed = all(c["passed"] for c in checks)
    return {"passed": passed, "checks": checks}


# =====================================================================
# identifiability
# =====================================================================

def run_identifiability(n_points: int = 1024, k_max: int = 64) -> dict:
    grid = CircleGrid(n_points)
    ks = np.arange(-k_max, k_max + 1)
    nu1, nu2 = sine_pair(grid, 1.0)
    dev_pair = float(np.max(np.abs(char_fn(nu1, ks) - char_fn(nu2, ks))))

    base = make_truth("uniform", grid, 1.0, {"intensity": 1.0})
    pert_vals = base.values * np.exp(0.05 * np.cos(2 * np.pi * grid.points))
    pert = LevyDensity(GridFunction(grid, pert_vals * base.intensity / np.mean(pert_vals)), 1.0)
    dev_compliant = float(np.max(np.abs(char_fn(base, ks) - char_fn(pert, ks))))

    return {
        "noncompliant_pair_intensity": nu1.intensity,
        "noncompliant_cf_deviation": dev_pair,
        "compliant_pair_intensity": base.intensity,
        "compliant_cf_deviation": dev_compliant,
        "passed": bool(dev_pair <= 1e-8 and dev_compliant > 1e-3),
        "note": (
            "discrete example pairs (atoms away from 0, e.g. (pi/Delta) delta_{+-1/4}) "
            "are outside this artifact's measure class and are not representable"
        ),
    }


# =====================================================================
# rate sweep
# =====================================================================

def _rate_worker(args) -> dict:
    cfg_d, n, rep = args
    cfg = ExperimentConfig(**cfg_d)
    basis = cfg.basis()
    delta = cfg.resolved_delta()
    nu0 = cfg.truth()
    J = cfg.J_for(n)
    sample = simulate_increments(nu0, n, derived_seed(cfg.seed, 1, n, rep))
    chain = run_mcmc(
        cfg.prior_cfg(n), sample, cfg.mcmc_cfg(derived_int_seed(cfg.seed, 2, n, rep)),
        basis, delta,
    )
    nus = np.exp(chain.coeff_states() @ basis.matrix(J).T)
    post_mean = nus.mean(axis=0)
    sup_errs = np.max(np.abs(nus - nu0.values[None, :]), axis=1)
    l2_errs = np.sqrt(np.mean((nus - nu0.values[None, :]) ** 2, axis=1))
    return {
        "n": n,
        "rep": rep,
        "sup_err_post_mean": float(np.max(np.abs(post_mean - nu0.values))),
        "l2_err_post_mean": float(np.sqrt(np.mean((post_mean - nu0.values) ** 2))),
        "sup_radius90": float(np.quantile(sup_errs, 0.90)),
        "l2_radius90": float(np.quantile(l2_errs, 0.90)),
        "accept_min": float(np.min(chain.accept_rate)),
    }


RATE_COLUMNS = {
    "n": "sample size",
    "rep": "replication index",
    "sup_err_post_mean": "sup norm error of the posterior mean density",
    "l2_err_post_mean": "L2 error of the posterior mean density",
    "sup_radius90": "90% posterior mass radius in sup norm",
    "l2_radius90": "90% posterior mass radius in L2 norm",
    "accept_min": "smallest per-level Metropolis acceptance rate",
}


def run_rate_sweep(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    tasks = [(cfg.to_dict_plain(), n, r) for n in cfg.n_grid for r in range(cfg.replications)]
    rows = _run_parallel(_rate_worker, tasks, cfg.threads)
    rows.sort(key=lambda r: (r["n"], r["rep"]))
    summary = _rate_summary(cfg, rows)
    return rows, summary


def _rate_summary(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    ns = sorted(set(r["n"] for r in rows))
    med_sup = [float(np.median([r["sup_err_post_mean"] for r in rows if r["n"] == n])) for n in ns]
    med_rad = [float(np.median([r["sup_radius90"] for r in rows if r["n"] == n])) for n in ns]
    out = {"n_grid": ns, "median_sup_err": med_sup, "median_sup_radius90": med_rad}
    if len(ns) >= 2 and cfg.replications > 0:
        slope = float(np.polyfit(np.log(ns), np.log(med_sup), 1)[0])
        rate = cfg.s / (2 * cfg.s + 1)
        out.update(
            slope=slope,
            slope_band=[-1.5 * rate, -0.5 * rate],
            slope_in_band=bool(-1.5 * rate <= slope <= -0.5 * rate),
            monotone_decreasing=bool(np.all(np.diff(med_sup) < 0)),
        )
    return out


# =====================================================================
# BvM / coverage
# =====================================================================

_TRUTH_CACHE: dict = {}


def _bvm_fixtures(cfg: ExperimentConfig, J: int):
    """Per-process cache of truth, covariance and centring kernels."""
    key = (json.dumps(cfg.to_dict(), sort_keys=True), J)
    if key not in _TRUTH_CACHE:
        basis = cfg.basis()
        nu0 = cfg.truth()
        cov = bvm_covariance(nu0, J, basis)
        ce = CenterEstimator(nu0, J, basis)
        _TRUTH_CACHE[key] = (nu0, cov, ce)
    return _TRUTH_CACHE[key]


def _ks_to_normal(draws: np.ndarray, sd: float) -> float:
    from scipy.stats import kstest

    if sd <= 0:
        return float("nan")
    return float(kstest(draws, "norm", args=(0.0, sd)).statistic)


def _energy_distance_whitened(draws: np.ndarray, cov: np.ndarray, rng: np.random.Generator,
                              cap: int = 400) -> float:
    """Energy distance between whitened draws and a standard normal cloud."""
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 1e-12, None)
    white = vecs @ np.diag(vals**-0.5) @ vecs.T
    z = draws @ white.T
    if len(z) > cap:
        idx = np.linspace(0, len(z) - 1, cap).astype(int)
        z = z[idx]
    y = rng.standard_normal(z.shape)

    def mean_dist(a, b):
        d = np.sqrt(np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1))
        return float(np.mean(d))

    return 2 * mean_dist(z, y) - mean_dist(z, z) - mean_dist(y, y)


def _bvm_worker(args) -> dict:
    cfg_d, n, rep = args
    cfg = ExperimentConfig(**cfg_d)
    basis = cfg.basis()
    delta = cfg.resolved_delta()
    J = cfg.J_for(n)
    nu0, cov, ce = _bvm_fixtures(cfg, J)
    lam0 = nu0.intensity
    t_pts = np.array([-0.25, 0.0, 0.25])
    v0_t = cumulative_intensity(nu0.values, basis.grid, t_pts)
    m0_t = v0_t / lam0

    sample = simulate_increments(nu0, n, derived_seed(cfg.seed, 11, n, rep))
    chain = run_mcmc(
        cfg.prior_cfg(n), sample, cfg.mcmc_cfg(derived_int_seed(cfg.seed, 12, n, rep)), basis, delta
    )
    m = basis.matrix(J)
    nus = np.exp(chain.coeff_states() @ m.T)  # (M, N)
    nu_coeffs = nus @ m / basis.grid.n_points  # posterior draws of <nu, psi_lk>
    lam_draws = nu_coeffs[:, 0]

    center = ce.estimate(sample).flat
    lam_hat = center[0]

    lam_lo, lam_hi = np.quantile(lam_draws, [0.05, 0.95])
    ks_lam = _ks_to_normal(np.sqrt(n) * (lam_draws - lam_hat), np.sqrt(cov[0, 0]))
    ks_coord = [
        _ks_to_normal(np.sqrt(n) * (nu_coeffs[:, i] - center[i]), np.sqrt(cov[i, i]))
        for i in range(2**J)
    ]
    energy = _energy_distance_whitened(
        np.sqrt(n) * (nu_coeffs - center[None, :]), cov, derived_seed(cfg.seed, 13, n, rep)
    )

    # functionals V(t), M(t)
    V = np.empty((len(nus), len(t_pts)))
    for i in range(len(nus)):
        V[i] = cumulative_intensity(nus[i], basis.grid, t_pts)
    M = V / lam_draws[:, None]
    v_lo, v_hi = np.quantile(V, [0.05, 0.95], axis=0)
    m_lo, m_hi = np.quantile(M, [0.05, 0.95], axis=0)

    row = {
        "n": n,
        "rep": rep,
        "lam_truth": lam0,
        "lam_center": float(lam_hat),
        "lam_lo": float(lam_lo),
        "lam_hi": float(lam_hi),
        "cover_lam": bool(lam_lo <= lam0 <= lam_hi),
        "ks_lam": ks_lam,
        "ks_coord_max": float(np.max(ks_coord)),
        "energy_whitened": float(energy),
    }
    for j, t in enumerate(t_pts):
        row[f"cover_V_{j}"] = bool(v_lo[j] <= v0_t[j] <= v_hi[j])
    row["cover_M_mid"] = bool(m_lo[1] <= m0_t[1] <= m_hi[1])
    return row


BVM_COLUMNS = {
    "n": "sample size",
    "rep": "replication index",
    "lam_truth": "true intensity",
    "lam_center": "efficient centring estimate of the intensity",
    "lam_lo": "5% posterior quantile of the intensity",
    "lam_hi": "95% posterior quantile of the intensity",
    "cover_lam": "1 if the 90% interval covers the true intensity",
    "ks_lam": "KS distance of sqrt(n)(lambda - center) to its Gaussian limit",
    "ks_coord_max": "largest per-coordinate KS distance to the Gaussian limit",
    "energy_whitened": "energy distance of whitened draws to a standard normal cloud",
    "cover_V_0": "1 if the 90% interval covers V(-1/4)",
    "cover_V_1": "1 if the 90% interval covers V(0)",
    "cover_V_2": "1 if the 90% interval covers V(1/4)",
    "cover_M_mid": "1 if the 90% interval covers M(0)",
}


def run_bvm(cfg: ExperimentConfig) -> tuple[list[dict], dict, list[dict]]:
    if cfg.replications < 1:
        raise ValueError("empty chain: bvm needs at least one replication")
    startup = check_assumption1(cfg.truth(), cfg.prior_cfg(max(cfg.n_grid)), cfg.basis())
    if not startup["passes"]:
        raise ValueError(f"interior-point / identifiability check failed at startup: {startup}")
    tasks = [(cfg.to_dict_plain(), n, r) for n in cfg.n_grid for r in range(cfg.replications)]
    rows = _run_parallel(_bvm_worker, tasks, cfg.threads)
    rows.sort(key=lambda r: (r["n"], r["rep"]))
    band_rows = _bvm_band(cfg)
    summary = _bvm_summary(cfg, rows)
    summary["assumption_check"] = startup
    return rows, summary, band_rows


def _bvm_band(cfg: ExperimentConfig) -> list[dict]:
    """Credible band for V and M over a t-grid, from replication 0 at max n."""
    n = max(cfg.n_grid)
    basis = cfg.basis()
    delta = cfg.resolved_delta()
    J = cfg.J_for(n)
    nu0 = cfg.truth()
    sample = simulate_increments(nu0, n, derived_seed(cfg.seed, 11, n, 0))
    chain = run_mcmc(
        cfg.prior_cfg(n), sample, cfg.mcmc_cfg(derived_int_seed(cfg.seed, 12, n, 0)), basis, delta
    )
    t = np.linspace(-0.5, 0.5, 41)
    tr = posterior_functionals(chain, basis, t)
    v0 = cumulative_intensity(nu0.values, basis.grid, t)
    v_lo, v_med, v_hi = np.quantile(tr.V, [0.05, 0.5, 0.95], axis=0)
    m_lo, m_med, m_hi = np.quantile(tr.M, [0.05, 0.5, 0.95], axis=0)
    rows = []
    for j in range(len(t)):
        rows.append(
            {
                "t": float(t[j]),
                "v_lo": float(v_lo[j]),
                "v_median": float(v_med[j]),
                "v_hi": float(v_hi[j]),
                "v_truth": float(v0[j]),
                "m_lo": float(m_lo[j]),
                "m_median": float(m_med[j]),
                "m_hi": float(m_hi[j]),
                "m_truth": float(v0[j] / nu0.intensity),
                "n": n,
            }
        )
    return rows


BAND_COLUMNS = {
    "t": "evaluation point in I",
    "v_lo": "5% posterior quantile of V(t)",
    "v_median": "posterior median of V(t)",
    "v_hi": "95% posterior quantile of V(t)",
    "v_truth": "true V(t)",
    "m_lo": "5% posterior quantile of M(t)",
    "m_median": "posterior median of M(t)",
    "m_hi": "95% posterior quantile of M(t)",
    "m_truth": "true M(t)",
    "n": "sample size used for the band",
}


def _bvm_summary(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    ns = sorted(set(r["n"] for r in rows))
    cov_rate = {n: float(np.mean([r["cover_lam"] for r in rows if r["n"] == n])) for n in ns}
    ks_med = {n: float(np.median([r["ks_lam"] for r in rows if r["n"] == n])) for n in ns}
    ks_coord_med = {n: float(np.median([r["ks_coord_max"] for r in rows if r["n"] == n])) for n in ns}
    energy_med = {n: float(np.median([r["energy_whitened"] for r in rows if r["n"] == n])) for n in ns}
    summary = {
        "coverage_lambda": cov_rate,
        "ks_lambda_median": ks_med,
        "ks_coord_max_median": ks_coord_med,
        "energy_whitened_median": energy_med,
        "ks_decreasing": bool(all(np.diff([ks_med[n] for n in ns]) < 0)) if len(ns) > 1 else None,
        "note": (
            "bounded-Lipschitz convergence is not directly computable; per-coordinate "
            "Kolmogorov-Smirnov distances plus a whitened energy distance stand in for it"
        ),
    }
    for t_idx, label in ((0, "V(-1/4)"), (1, "V(0)"), (2, "V(1/4)")):
        summary[f"coverage_{label}"] = {
            n: float(np.mean([r[f"cover_V_{t_idx}"] for r in rows if r["n"] == n])) for n in ns
        }
    summary["coverage_M(0)"] = {
        n: float(np.mean([r["cover_M_mid"] for r in rows if r["n"] == n])) for n in ns
    }
    return summary


# =====================================================================
# spectral sweep
# =====================================================================

def _spectral_worker(args) -> dict:
    cfg_d, n, rep = args
    cfg = ExperimentConfig(**cfg_d)
    grid = cfg.grid()
    delta = cfg.resolved_delta()
    nu0 = cfg.truth()
    sample = simulate_increments(nu0, n, derived_seed(cfg.seed, 21, n, rep))
    K = cfg.spectral_cutoff or n
    sc = SpectralConfig(K, cfg.delta_exponent, delta)
    lam_hat, coeffs, _ = spectral_levy(sample, sc, grid)

    true_c = grid_fourier_coeffs(nu0.density)
    kmax = max(K, len(true_c) - 1)
    diff = np.zeros(kmax + 1, dtype=complex)
    diff[: K + 1] += coeffs
    diff[: len(true_c)] -= true_c
    err_h = h_delta_norm_fourier(diff, cfg.delta_exponent)

    sc_small = SpectralConfig(cfg.spectral_small_cutoff, cfg.delta_exponent, delta)
    lam_small, coeffs_small, _ = spectral_levy(sample, sc_small, grid)
    diff_s = np.zeros(len(true_c), dtype=complex)
    diff_s[: len(coeffs_small)] += coeffs_small
    diff_s -= true_c
    err_h_small = h_delta_norm_fourier(diff_s, cfg.delta_exponent)

    return {
        "n": n,
        "rep": rep,
        "K": K,
        "lam_hat": float(lam_hat),
        "lam_err": float(lam_hat - nu0.intensity),
        "hdelta_err": float(err_h),
        "K_small": cfg.spectral_small_cutoff,
        "lam_hat_smallK": float(lam_small),
        "hdelta_err_smallK": float(err_h_small),
    }


SPECTRAL_COLUMNS = {
    "n": "sample size",
    "rep": "replication index",
    "K": "spectral cutoff used (defaults to n)",
    "lam_hat": "intensity estimate at cutoff K",
    "lam_err": "intensity estimation error",
    "hdelta_err": "H(delta) distance of the estimated density to the truth",
    "K_small": "fixed small cutoff for the bias plateau comparison",
    "lam_hat_smallK": "intensity estimate at the small cutoff",
    "hdelta_err_smallK": "H(delta) error at the small cutoff",
}


def run_spectral(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    tasks = [(cfg.to_dict_plain(), n, r) for n in cfg.n_grid for r in range(cfg.replications)]
    rows = _run_parallel(_spectral_worker, tasks, cfg.threads)
    rows.sort(key=lambda r: (r["n"], r["rep"]))
    ns = sorted(set(r["n"] for r in rows))
    med = {n: float(np.median([r["hdelta_err"] for r in rows if r["n"] == n])) for n in ns}
    med_small = {n: float(np.median([r["hdelta_err_smallK"] for r in rows if r["n"] == n])) for n in ns}
    rmse = {
        n: float(np.sqrt(np.mean([r["lam_err"] ** 2 for r in rows if r["n"] == n]))) for n in ns
    }
    summary = {
        "hdelta_median": med,
        "hdelta_median_smallK": med_small,
        "lambda_rmse": rmse,
        "hdelta_decreasing": bool(all(np.diff([med[n] for n in ns]) < 0)) if len(ns) > 1 else None,
        "smallK_plateaus_above": bool(med_small[max(ns)] > med[max(ns)]) if ns else None,
    }
    return rows, summary


# =====================================================================
# LAN remainder experiment (used by tests and verify-level diagnostics)
# =====================================================================

def run_lan_trend(cfg: ExperimentConfig, direction=None) -> dict:
    basis = cfg.basis()
    grid = cfg.grid()
    nu0 = cfg.truth()
    law = increment_law(nu0)
    if direction is None:
        direction = 0.6 * np.cos(2 * np.pi * grid.points) - 0.2
    medians = []
    for n in cfg.n_grid:
        vals = []
        for rep in range(cfg.replications):
            rng = derived_seed(cfg.seed, 31, n, rep)
            sample = simulate_increments(nu0, n, rng)
            vals.append(abs(lan_expansion_check(nu0, direction, sample, law)))
        medians.append(float(np.median(vals)))
    slope = float(np.polyfit(np.log(cfg.n_grid), np.log(medians), 1)[0])
    return {
        "n_grid": list(cfg.n_grid),
        "median_abs_remainder": medians,
        "slope": slope,
        "decreasing": bool(np.all(np.diff(medians) < 0)),
        "slope_in_band": bool(-1.0 <= slope <= -0.25),
    }
