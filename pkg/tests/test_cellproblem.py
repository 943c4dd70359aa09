import numpy as np
import pytest
from scipy.integrate import quad

from striplocalizer import profiles
from striplocalizer.cellproblem import (HypothesisReport, PeriodicCorrector,
                                        gradient_energy, hypothesis_dlt,
                                        hypothesis_loc, hypothesis_osc,
                                        oscillating_mean_check,
                                        solve_cell_poisson, wstar_loc)
from striplocalizer.geometry import LatticeSpec
from striplocalizer.hamiltonian import DltSpec, LocSpec, OscSpec
from striplocalizer.transverse import TransverseProblem, solve_transverse


def xi_grid(m, dims=2):
    g = np.arange(m) / m
    return np.meshgrid(*([g] * dims), indexing="ij")


def hat_spec(amplitude=1.0):
    return LocSpec(profile=profiles.hat_profile(amplitude=amplitude),
                   support_radius=1.0, a=0.5)


# ---------------------------------------------------------------------------
# periodic cell problem
# ---------------------------------------------------------------------------

def test_single_mode_corrector():
    x1, x2 = xi_grid(64)
    sl = solve_cell_poisson(np.cos(2 * np.pi * x1))
    pts = np.stack([x1, x2], axis=-1)
    exact = -np.cos(2 * np.pi * x1) / (4 * np.pi**2)
    assert np.max(np.abs(sl.value(pts) - exact)) < 1e-14


def test_zero_corrector():
    sl = solve_cell_poisson(np.zeros((32, 32)))
    assert sl.energy == 0.0
    assert sl.value(np.array([0.3, 0.7])) == 0.0


def test_superposition_of_modes():
    x1, x2 = xi_grid(64)
    q = np.cos(2 * np.pi * x1) + np.sin(4 * np.pi * x2)
    sl = solve_cell_poisson(q)
    pts = np.stack([x1, x2], axis=-1)
    exact = (-np.cos(2 * np.pi * x1) / (4 * np.pi**2)
             - np.sin(4 * np.pi * x2) / (16 * np.pi**2))
    assert np.max(np.abs(sl.value(pts) - exact)) < 1e-13


def test_corrector_rejects_nonzero_mean():
    with pytest.raises(ValueError, match="zero-mean"):
        solve_cell_poisson(np.ones((16, 16)))


def test_corrector_linearity():
    rng = np.random.Generator(np.random.Philox(key=5))
    x1, x2 = xi_grid(32)
    q1 = np.cos(2 * np.pi * x1) * np.sin(2 * np.pi * x2)
    q2 = np.sin(4 * np.pi * x1)
    s1, s2 = solve_cell_poisson(q1), solve_cell_poisson(q2)
    s12 = solve_cell_poisson(2.0 * q1 - 3.0 * q2)
    pts = rng.random((50, 2))
    combo = 2.0 * s1.value(pts) - 3.0 * s2.value(pts)
    assert np.max(np.abs(s12.value(pts) - combo)) < 1e-12


def test_discrete_laplacian_residual():
    x1, x2 = xi_grid(64)
    q = np.cos(2 * np.pi * x1) * np.cos(6 * np.pi * x2) + np.sin(8 * np.pi * x1)
    sl = solve_cell_poisson(q)
    # spectral Laplacian of the synthesized corrector reproduces q
    pts = np.stack([x1, x2], axis=-1)
    lap = np.zeros_like(q)
    for k, c in zip(sl.kappa, sl.coeffs):
        phase = np.exp(2j * np.pi * (k[0] * x1 + k[1] * x2))
        lap += np.real(c * (-4 * np.pi**2 * (k @ k)) * phase)
    assert np.max(np.abs(lap - q)) < 1e-8 * np.max(np.abs(q))


def test_gradient_energy_single_mode():
    x1, _ = xi_grid(64)
    g = 1.7
    sl = solve_cell_poisson(g * np.cos(2 * np.pi * x1))
    assert gradient_energy(sl) == pytest.approx(g**2 / (8 * np.pi**2), abs=1e-12)


def test_gradient_energy_matches_quadrature_oracle():
    # independent oracle: central finite differences of the synthesized
    # corrector on a fine xi-grid, then the rectangle rule
    x1, x2 = xi_grid(64)
    q = (np.cos(2 * np.pi * x1) * np.sin(4 * np.pi * x2)
         + 0.5 * np.sin(6 * np.pi * x1))
    sl = solve_cell_poisson(q)
    m = 256
    g = np.arange(m) / m
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([xx, yy], axis=-1)
    vals = sl.value(pts)
    h = 1.0 / m
    gx = (np.roll(vals, -1, 0) - np.roll(vals, 1, 0)) / (2 * h)
    gy = (np.roll(vals, -1, 1) - np.roll(vals, 1, 1)) / (2 * h)
    oracle = np.mean(gx**2 + gy**2)
    assert gradient_energy(sl) == pytest.approx(oracle, rel=2e-3)


def test_parseval_identity_of_slice():
    x1, x2 = xi_grid(32)
    sl = solve_cell_poisson(np.cos(2 * np.pi * x1) * np.cos(2 * np.pi * x2))
    ksq = np.sum(sl.kappa.astype(float) ** 2, axis=1)
    from_coeffs = float(np.sum(4 * np.pi**2 * ksq * np.abs(sl.coeffs) ** 2))
    assert abs(from_coeffs - sl.energy) < 1e-12 * max(sl.energy, 1.0)


# ---------------------------------------------------------------------------
# localized corrector
# ---------------------------------------------------------------------------

def test_wstar_hat_center_value():
    ws = wstar_loc(hat_spec())
    assert ws.value(0.0) == pytest.approx(1.0 / 6.0, abs=1e-8)


def test_wstar_hat_tails():
    ws = wstar_loc(hat_spec())
    # symmetric hat: first moment 0, total 1; tails are +-xi/2
    assert ws.value(2.0) == pytest.approx(1.0, abs=1e-9)
    for xi in (1.5, 2.5, 4.0):
        assert ws.value(xi) == pytest.approx(0.5 * xi, abs=1e-9)
        assert ws.value(-xi) == pytest.approx(0.5 * xi, abs=1e-9)
        assert ws.derivative(xi) == pytest.approx(0.5, abs=1e-9)
        assert ws.derivative(-xi) == pytest.approx(-0.5, abs=1e-9)


def test_wstar_second_difference_reconstructs_profile():
    spec = hat_spec()
    ws = wstar_loc(spec)
    h = 1e-2
    # away from the kinks of the hat the reconstruction is exact for the
    # piecewise-cubic corrector
    for xi in (-0.73, -0.41, 0.22, 0.58, 0.86):
        second = (ws.value(xi + h) - 2 * ws.value(xi) + ws.value(xi - h)) / h**2
        assert second == pytest.approx(float(spec.profile(xi)), abs=1e-7)


def test_wstar_second_difference_smooth_profile_order():
    spec = LocSpec(profile=profiles.smooth_bump_profile(), support_radius=1.0,
                   a=0.5)
    ws = wstar_loc(spec)
    errs = []
    for h in (2e-2, 1e-2):
        err = max(abs((ws.value(x + h) - 2 * ws.value(x) + ws.value(x - h)) / h**2
                      - float(spec.profile(x))) for x in (-0.5, 0.1, 0.4))
        errs.append(err)
    assert errs[1] < errs[0] / 2.5  # roughly O(h^2)


def test_wstar_solves_ode_via_quadrature():
    # derivative matches the cumulative-integral formula
    spec = hat_spec()
    ws = wstar_loc(spec)
    for xi in (-0.6, 0.0, 0.35):
        expect, _ = quad(lambda z: 0.5 * np.sign(xi - z) * spec.profile(z),
                         -1, 1, points=[xi], limit=200)
        assert ws.derivative(xi) == pytest.approx(expect, abs=1e-9)


# ---------------------------------------------------------------------------
# hypothesis integrals
# ---------------------------------------------------------------------------

def test_hypothesis_loc_hat():
    rep = hypothesis_loc(hat_spec())
    assert rep.kind == "loc"
    assert rep.value == pytest.approx(1.0, abs=1e-10)
    assert rep.passes


def test_hypothesis_loc_odd_profile_fails():
    odd = LocSpec(profile=lambda z: np.where(np.abs(z) < 1,
                                             np.sign(z) * (1 - np.abs(z)), 0.0),
                  support_radius=1.0, a=0.5)
    rep = hypothesis_loc(odd)
    assert abs(rep.value) < 1e-10
    assert not rep.passes


def test_hypothesis_loc_linearity():
    assert hypothesis_loc(hat_spec(amplitude=2.0)).value == pytest.approx(2.0,
                                                                          abs=1e-9)


def neumann_mode(m=64):
    return solve_transverse(TransverseProblem(d=1.0, V0=None,
                                              bc_bottom="neumann",
                                              bc_top="neumann", m=m))


def dirichlet_mode(m=256):
    return solve_transverse(TransverseProblem(d=1.0, V0=None,
                                              bc_bottom="dirichlet",
                                              bc_top="dirichlet", m=m))


def make_osc(q_amp, w_amp):
    env = profiles.product_window([(-0.4, -0.25, 0.25, 0.4),
                                   (0.1, 0.25, 0.75, 0.9)])
    q = profiles.cosine_mode(env, freq=1, amplitude=q_amp)
    w = (lambda x: w_amp * env(x)) if w_amp else None
    return OscSpec(Q=q, W=w, a=0.5, support=((-0.4, 0.4), (0.1, 0.9))), env


def test_hypothesis_osc_positive_w_only():
    spec, env = make_osc(q_amp=0.0, w_amp=1.0)
    mode = neumann_mode()
    rep = hypothesis_osc(spec, mode)
    # psi0^2 = 1: value = int W over the box
    expect_x, _ = quad(lambda s: profiles.plateau_window(-0.4, -0.25, 0.25, 0.4)(s),
                       -0.4, 0.4, limit=100)
    expect_y, _ = quad(lambda s: profiles.plateau_window(0.1, 0.25, 0.75, 0.9)(s),
                       0.1, 0.9, limit=100)
    assert rep.value == pytest.approx(expect_x * expect_y, rel=3e-4)
    assert abs(rep.value - expect_x * expect_y) <= 5 * max(rep.error_estimate, 1e-6)
    assert rep.passes


def test_hypothesis_osc_pure_oscillation_fails():
    spec, _ = make_osc(q_amp=1.0, w_amp=0.0)
    rep = hypothesis_osc(spec, neumann_mode())
    assert rep.value < 0
    assert not rep.passes


def test_hypothesis_osc_mixed_matches_analytic_energy():
    # single cosine mode: energy density g(x)^2/(8 pi^2)
    spec, env = make_osc(q_amp=1.0, w_amp=1.0)
    mode = neumann_mode()
    rep = hypothesis_osc(spec, mode)

    def integrand(x1, y):
        g = env(np.array([x1, y]))
        return g - g**2 / (8 * np.pi**2)

    total = 0.0
    xs, wx = np.polynomial.legendre.leggauss(64)
    ys, wy = np.polynomial.legendre.leggauss(64)
    xs = 0.4 * xs
    ys = 0.4 * ys + 0.5
    for x1, w1 in zip(xs, 0.4 * wx):
        for y, w2 in zip(ys, 0.4 * wy):
            total += w1 * w2 * integrand(x1, y)
    assert rep.value == pytest.approx(total, rel=1e-4)


def test_hypothesis_dlt_neumann_circle():
    spec = DltSpec.circle(LatticeSpec(), 1.0)
    rep = hypothesis_dlt(spec, neumann_mode())
    assert rep.value == pytest.approx(2 * np.pi * 0.2, rel=1e-9)
    assert rep.passes


def test_hypothesis_dlt_zero_density_fails():
    spec = DltSpec.circle(LatticeSpec(), 1.0, b=0.0)
    rep = hypothesis_dlt(spec, neumann_mode())
    assert rep.value == 0.0
    assert not rep.passes


def test_hypothesis_dlt_dirichlet_matches_refined_quadrature():
    spec = DltSpec.circle(LatticeSpec(), 1.0, n_nodes=1024)
    mode = dirichlet_mode()
    rep = hypothesis_dlt(spec, mode)
    # oracle: psi0 = sqrt(2) sin(pi y) on the circle, fine trapezoid rule
    theta = 2 * np.pi * np.arange(4096) / 4096
    y = 0.5 + 0.2 * np.sin(theta)
    oracle = np.mean(2 * np.sin(np.pi * y) ** 2) * 2 * np.pi * 0.2
    assert rep.value == pytest.approx(oracle, rel=1e-4)


# ---------------------------------------------------------------------------
# oscillating-integral order
# ---------------------------------------------------------------------------

def osc_test_w():
    env = profiles.product_window([(-0.4, -0.25, 0.25, 0.4),
                                   (0.1, 0.25, 0.75, 0.9)])
    return lambda x, xi: env(x) * np.cos(2 * np.pi * xi[..., 0])


def test_oscillating_smooth_bump_superpolynomial():
    # infinitely smooth envelope: errors fall away faster than any moderate
    # power over the tested range
    def envx(s, c, r):
        u = np.clip(((s - c) / r) ** 2, 0.0, 1.0)
        return np.where(u < 1.0, np.exp(1.0 - 1.0 / np.maximum(1e-300, 1.0 - u)), 0.0)

    env = lambda x: envx(x[..., 0], 0.013, 0.41) * envx(x[..., 1], 0.507, 0.39)
    w = lambda x, xi: env(x) * np.cos(2 * np.pi * xi[..., 0])
    fit = oscillating_mean_check(w, [1 / 6, 1 / 12, 1 / 24, 1 / 48],
                                 box=((-0.5, 0.5), (0.0, 1.0)), m_mean=4)
    assert fit.slope == float("inf") or fit.slope >= 4.0


def test_oscillating_identity_case_is_exact():
    env = profiles.product_window([(-0.4, -0.25, 0.25, 0.4),
                                   (0.1, 0.25, 0.75, 0.9)])
    w = lambda x, xi: env(x) + 0.0 * xi[..., 0]
    fit = oscillating_mean_check(w, [1 / 8, 1 / 16, 1 / 32, 1 / 64],
                                 box=((-0.5, 0.5), (0.0, 1.0)), m_mean=4)
    assert max(fit.errors) < 1e-14
    assert fit.slope == float("inf")


def test_oscillating_order_c2_bump():
    # knots are kept away from multiples of the epsilons: for the quintic
    # piecewise-polynomial window, knots commensurate with eps make the
    # remainder vanish identically
    env = profiles.product_window([(-0.387, -0.111, 0.152, 0.404),
                                   (0.117, 0.293, 0.681, 0.923)])
    w = lambda x, xi: env(x) * np.cos(2 * np.pi * xi[..., 0])
    fit = oscillating_mean_check(w, [1 / 12, 1 / 24, 1 / 48, 1 / 96],
                                 box=((-0.5, 0.5), (0.0, 1.0)), m_mean=4)
    assert fit.slope >= 1.5
    assert all(e1 > e2 for e1, e2 in zip(fit.errors, fit.errors[1:]))


def test_oscillating_schedule_validation():
    w = osc_test_w()
    with pytest.raises(ValueError):
        oscillating_mean_check(w, [0.1, 0.05], box=((-0.5, 0.5), (0.0, 1.0)))
    with pytest.raises(ValueError):
        oscillating_mean_check(w, [0.1, 0.05, 0.03, 0.014],
                               box=((-0.5, 0.5), (0.0, 1.0)))
