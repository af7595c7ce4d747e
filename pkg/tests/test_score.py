import numpy as np
import pytest

from conftest import smooth_levy
from decompound.grid import AtomicMeasure, GridFunction, dirac
from decompound.model import increment_law, simulate_increments
from decompound.score import (
    PnuFunction,
    adjoint,
    adjoint_inverse,
    cramer_rao,
    influence,
    lan_expansion_check,
    lan_inner,
    log_density_path_derivatives,
    multilinear_score,
    pnu_inner,
    pnu_integral,
    pnu_norm2,
    score,
    score_inverse,
    score_measure,
)


def centered_pnu(law, grid, rng):
    raw_atom = rng.uniform(-1, 1)
    raw_vals = rng.standard_normal(grid.n_points)
    shift = (law.atom0 * raw_atom + np.mean(raw_vals * law.density.values)) / (
        law.atom0 + np.mean(law.density.values)
    )
    return PnuFunction(raw_atom - shift, GridFunction(grid, raw_vals - shift))


@pytest.fixture()
def setup(grid):
    nu = smooth_levy(grid, delta=0.9, lam=1.4, seed=100)
    return nu, increment_law(nu)


def test_score_kernel_is_exact_zero(grid, setup):
    nu, law = setup
    out = score_measure(nu, dirac(grid, 4.2), law)
    assert out.atom_value == 0.0
    assert np.all(out.values.values == 0.0)


def test_score_centering(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(0)
    for _ in range(5):
        h = rng.standard_normal(grid.n_points)
        assert abs(pnu_integral(law, score(nu, h, law))) <= 1e-9


def test_score_linearity(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(1)
    h1, h2 = rng.standard_normal(grid.n_points), rng.standard_normal(grid.n_points)
    a, b = 1.7, -0.4
    lhs = score(nu, a * h1 + b * h2, law)
    r1, r2 = score(nu, h1, law), score(nu, h2, law)
    assert abs(lhs.atom_value - (a * r1.atom_value + b * r2.atom_value)) <= 1e-10
    assert np.max(np.abs(lhs.values.values - (a * r1.values.values + b * r2.values.values))) <= 1e-10


def test_score_matches_spec_formula(grid, setup):
    # atom channel is -Delta * integral of h dnu
    nu, law = setup
    h = np.cos(2 * np.pi * grid.points) + 0.2
    out = score(nu, h, law)
    assert out.atom_value == pytest.approx(-nu.delta * np.mean(h * nu.values), abs=1e-12)


def test_score_inverse_zero(grid, setup):
    nu, law = setup
    zero = PnuFunction(0.0, GridFunction(grid, np.zeros(grid.n_points)))
    m = score_inverse(nu, zero, law)
    assert m.atom0 == 0.0
    assert np.max(np.abs(m.density.values)) == 0.0


def test_score_inverse_round_trip(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(2)
    for _ in range(5):
        g = centered_pnu(law, grid, rng)
        m = score_inverse(nu, g, law)
        back = score_measure(nu, m, law)
        assert abs(back.atom_value - g.atom_value) <= 1e-7
        assert np.max(np.abs(back.values.values - g.values.values)) <= 1e-7


def test_score_inverse_recovers_direction(grid, setup):
    # g = A(h): the recovered measure's density equals h up to the delta_0 slot
    nu, law = setup
    h = 0.6 * np.sin(2 * np.pi * grid.points) + 0.1
    g = score(nu, h, law)
    m = score_inverse(nu, g, law)
    assert np.max(np.abs(m.density.values - h)) <= 1e-8
    back = score_measure(nu, m, law)
    assert np.max(np.abs(back.values.values - g.values.values)) <= 1e-8


def test_score_inverse_rejects_uncentered(grid, setup):
    nu, law = setup
    bad = PnuFunction(1.0, GridFunction(grid, np.ones(grid.n_points)))
    with pytest.raises(ValueError):
        score_inverse(nu, bad, law)


def test_adjoint_duality(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(3)
    for _ in range(5):
        h = rng.standard_normal(grid.n_points)
        w = centered_pnu(law, grid, rng)
        lhs = pnu_inner(law, score(nu, h, law), w)
        rhs = np.mean(h * adjoint(nu, w, law).values * nu.values)
        assert abs(lhs - rhs) <= 1e-8


def test_adjoint_constant(grid, setup):
    nu, law = setup
    w = PnuFunction(2.5, GridFunction(grid, np.full(grid.n_points, 2.5)))
    out = adjoint(nu, w, law)
    assert np.max(np.abs(out.values - nu.delta * 2.5)) <= 1e-10


def test_adjoint_matches_brute_force(grid, setup):
    # O(N^2) double sum of Delta * [atom * w(x) + (1/N) sum_m w(x + x_m) q(x_m)]
    nu, law = setup
    rng = np.random.default_rng(4)
    w = PnuFunction(0.3, GridFunction(grid, rng.standard_normal(grid.n_points)))
    n = grid.n_points
    wv, q = w.values.values, law.density.values
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    brute = nu.delta * (law.atom0 * wv + (wv[idx] @ q) / n)
    out = adjoint(nu, w, law)
    assert np.max(np.abs(out.values - brute)) <= 1e-9


def test_adjoint_inverse_centered(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(5)
    g = rng.standard_normal(grid.n_points)
    g[0] = 0.0
    w = adjoint_inverse(nu, g)
    assert abs(pnu_integral(law, w)) <= 1e-8


def test_adjoint_inverse_round_trip(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(6)
    g = rng.standard_normal(grid.n_points)
    back = adjoint(nu, adjoint_inverse(nu, g), law)
    assert np.max(np.abs(back.values - g)) <= 1e-7
    zero = adjoint_inverse(nu, np.zeros(grid.n_points))
    assert zero.atom_value == 0.0 and np.all(zero.values.values == 0.0)


def test_influence_zero(grid, setup):
    nu, law = setup
    psi_t, c = influence(nu, np.zeros(grid.n_points), law)
    assert c == 0.0
    assert np.all(psi_t.values == 0.0)


def test_influence_bilinear_identity(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(7)
    for _ in range(5):
        h = rng.standard_normal(grid.n_points)
        psi = rng.standard_normal(grid.n_points)
        psi_t, c = influence(nu, psi, law)
        val_ac = pnu_inner(law, score(nu, h, law), score(nu, psi_t.values, law))
        val_d = pnu_inner(law, score(nu, h, law), score_measure(nu, AtomicMeasure(c, psi_t), law))
        target = -np.mean(h * psi)
        assert abs(val_ac - target) <= 1e-6
        assert abs(val_d - target) <= 1e-6
        assert abs(val_ac - val_d) <= 1e-9  # the delta_0 part is in the kernel


def test_cramer_rao_basics(grid, setup):
    nu, law = setup
    assert cramer_rao(nu, np.zeros(grid.n_points), law) == 0.0
    psi = np.sin(2 * np.pi * grid.points) + 0.3
    cr = cramer_rao(nu, psi, law)
    assert cr > 0
    assert cramer_rao(nu, 3.0 * psi, law) == pytest.approx(9.0 * cr, rel=1e-12)


def test_cramer_rao_vs_direct_quadrature(grid, setup):
    # independent route: O(N^2) reflected convolution, explicit norm quadrature
    nu, law = setup
    from decompound.model import deconv_measure

    psi = np.cos(4 * np.pi * grid.points) + 0.5
    pi = deconv_measure(nu)
    n = grid.n_points
    r = pi.density.values
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    conv = (psi[idx] @ r) / n  # (r(-.) * psi)(x_j) by double sum
    vals = (pi.atom0 * psi + conv) / nu.delta
    atom = conv[0] / nu.delta
    direct = law.atom0 * atom**2 + np.mean(vals**2 * law.density.values)
    assert abs(cramer_rao(nu, psi, law) - direct) <= 1e-8


def test_cramer_rao_vs_monte_carlo(grid, setup):
    nu, law = setup
    psi = np.cos(2 * np.pi * grid.points) + 1.0
    w = adjoint_inverse(nu, psi)
    s = simulate_increments(nu, 100_000, np.random.default_rng(8))
    vals = w.evaluate(s.values)
    mc_var = float(np.var(vals))
    assert abs(mc_var - cramer_rao(nu, psi, law)) / cramer_rao(nu, psi, law) <= 0.05


def test_lan_inner_properties(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(9)
    f, g, h = (rng.standard_normal(grid.n_points) for _ in range(3))
    assert lan_inner(nu, f, g, law) == pytest.approx(lan_inner(nu, g, f, law), abs=1e-10)
    lhs = lan_inner(nu, f + 2.0 * h, g, law)
    rhs = lan_inner(nu, f, g, law) + 2.0 * lan_inner(nu, h, g, law)
    assert abs(lhs - rhs) <= 1e-10
    assert lan_inner(nu, f, f, law) >= 0
    direct = pnu_inner(law, score(nu, f, law), score(nu, g, law))
    assert lan_inner(nu, f, g, law) == pytest.approx(direct, abs=1e-12)


def test_multilinear_first_order_is_score(grid, setup):
    nu, law = setup
    w = np.sin(4 * np.pi * grid.points) + 0.2
    a = multilinear_score(nu, w, law=law)
    b = score(nu, w, law)
    assert a.atom_value == pytest.approx(b.atom_value, abs=1e-14)
    assert np.max(np.abs(a.values.values - b.values.values)) <= 1e-12


def test_multilinear_symmetry(grid, setup):
    nu, law = setup
    rng = np.random.default_rng(10)
    w1, w2, w3 = (rng.standard_normal(grid.n_points) for _ in range(3))
    a = multilinear_score(nu, w1, w2, law=law)
    b = multilinear_score(nu, w2, w1, law=law)
    assert abs(a.atom_value - b.atom_value) <= 1e-10
    assert np.max(np.abs(a.values.values - b.values.values)) <= 1e-10
    c = multilinear_score(nu, w1, w2, w3, law=law)
    d = multilinear_score(nu, w3, w1, w2, law=law)
    assert np.max(np.abs(c.values.values - d.values.values)) <= 1e-10


def test_multilinear_rejects_high_order(grid, setup):
    nu, law = setup
    w = np.ones(grid.n_points)
    with pytest.raises(ValueError):
        multilinear_score(nu, w, w, w, w, law=law)


def test_second_derivative_matches_finite_differences(grid):
    # d^2/ds^2 of the density ratio equals A(w^2) + A(w, w) along nu^(s)
    from decompound.model import levy_from_log

    x = grid.points
    v0 = 0.3 * np.cos(2 * np.pi * x) + 0.1
    nu0 = levy_from_log(grid, v0, 0.8)
    w = 0.5 * np.sin(2 * np.pi * x) - 0.2 * np.cos(4 * np.pi * x) + 0.15
    h = 1e-3
    laws = {}
    for s in (-h, 0.0, h):
        laws[s] = increment_law(levy_from_log(grid, v0 + s * w, nu0.delta))
    fd_atom = (laws[h].atom0 - 2 * laws[0.0].atom0 + laws[-h].atom0) / (h**2 * laws[0.0].atom0)
    fd_vals = (
        laws[h].density.values - 2 * laws[0.0].density.values + laws[-h].density.values
    ) / (h**2 * laws[0.0].density.values)
    a_sq = score(nu0, w * w, laws[0.0])
    a_bi = multilinear_score(nu0, w, w, law=laws[0.0])
    an_atom = a_sq.atom_value + a_bi.atom_value
    an_vals = a_sq.values.values + a_bi.values.values
    assert abs(fd_atom - an_atom) / abs(an_atom) <= 1e-4
    assert np.max(np.abs(fd_vals - an_vals)) / np.max(np.abs(an_vals)) <= 1e-4


def test_log_density_derivatives_match_finite_differences(grid):
    from decompound.model import levy_from_log

    x = grid.points
    v0 = 0.25 * np.cos(2 * np.pi * x)
    nu0 = levy_from_log(grid, v0, 1.0)
    w = 0.4 * np.sin(2 * np.pi * x) + 0.1
    s0, h = 0.2, 1e-3
    logs = {}
    for s in (s0 - h, s0, s0 + h):
        law = increment_law(levy_from_log(grid, v0 + s * w, 1.0))
        logs[s] = (np.log(law.atom0), np.log(law.density.values))
    d1, d2 = log_density_path_derivatives(nu0, w, s=s0)
    fd1_atom = (logs[s0 + h][0] - logs[s0 - h][0]) / (2 * h)
    fd1_vals = (logs[s0 + h][1] - logs[s0 - h][1]) / (2 * h)
    fd2_atom = (logs[s0 + h][0] - 2 * logs[s0][0] + logs[s0 - h][0]) / h**2
    fd2_vals = (logs[s0 + h][1] - 2 * logs[s0][1] + logs[s0 - h][1]) / h**2
    assert abs(fd1_atom - d1.atom_value) / max(abs(d1.atom_value), 1e-12) <= 1e-4
    assert np.max(np.abs(fd1_vals - d1.values.values)) / np.max(np.abs(d1.values.values)) <= 1e-4
    assert abs(fd2_atom - d2.atom_value) / max(abs(d2.atom_value), 1e-12) <= 1e-4
    assert np.max(np.abs(fd2_vals - d2.values.values)) / np.max(np.abs(d2.values.values)) <= 1e-4


def test_lan_remainder_zero_direction(grid, setup):
    nu, law = setup
    s = simulate_increments(nu, 200, np.random.default_rng(11))
    rem = lan_expansion_check(nu, np.zeros(grid.n_points), s, law)
    assert rem == pytest.approx(0.0, abs=1e-10)


def test_pnu_evaluate_atom_and_interp(grid, setup):
    nu, law = setup
    f = PnuFunction(5.0, GridFunction(grid, np.cos(2 * np.pi * grid.points)))
    out = f.evaluate(np.array([0.0, 0.25, grid.spacing / 2]))
    assert out[0] == 5.0
    assert out[1] == pytest.approx(0.0, abs=1e-10)
    mid = 0.5 * (1.0 + np.cos(2 * np.pi * grid.spacing))
    assert out[2] == pytest.approx(mid, abs=1e-12)
    assert pnu_norm2(law, f) > 0
