"""Periodic cell corrector, hypothesis integrals, and the oscillating-integral checker.

The corrector solves Laplacian_xi Wstar = Q on the unit torus by FFT:
Wstar_hat(kappa) = -Q_hat(kappa) / (4 pi^2 |kappa|^2) for kappa != 0 and
Wstar_hat(0) = 0, which also enforces the zero-mean normalization. Gradient
energies come from the Parseval closed form. The 1-D localized counterpart
Wstar_loc(xi) = 1/2 int |xi - z| profile(z) dz is evaluated by adaptive
quadrature with exact linear tails outside the support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .transverse import TransverseMode, psi0_at

__all__ = [
    "CorrectorSlice",
    "solve_cell_poisson",
    "gradient_energy",
    "PeriodicCorrector",
    "WstarLoc",
    "wstar_loc",
    "HypothesisReport",
    "hypothesis_loc",
    "hypothesis_osc",
    "hypothesis_dlt",
    "OscillationFit",
    "oscillating_mean_check",
]

QUAD_TOL = 1e-12
COEFF_CUT = 1e-13


# ---------------------------------------------------------------------------
# periodic corrector
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectorSlice:
    """Fourier data of Wstar(x, .) for one fixed slow point x."""

    m_xi: int
    dims: int
    kappa: np.ndarray = field(repr=False)   # (K, dims) integer frequencies
    coeffs: np.ndarray = field(repr=False)  # (K,) complex, frequency 0 removed
    energy: float = 0.0                     # int |grad_xi Wstar|^2 d xi

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        phase = np.tensordot(xi, self.kappa.T, axes=1)
        return np.real(np.exp(2j * np.pi * phase) @ self.coeffs)

    def grad_xi(self, xi, axis):
        xi = np.asarray(xi, dtype=float)
        phase = np.tensordot(xi, self.kappa.T, axes=1)
        c = self.coeffs * (2j * np.pi * self.kappa[:, axis])
        return np.real(np.exp(2j * np.pi * phase) @ c)

    def combine(self, other, ca, cb):
        """Linear combination ca*self + cb*other."""
        if self.m_xi != other.m_xi or self.dims != other.dims:
            raise ValueError("incompatible slices")
        acc = {}
        for k, c in zip(map(tuple, self.kappa), self.coeffs):
            acc[k] = acc.get(k, 0.0) + ca * c
        for k, c in zip(map(tuple, other.kappa), other.coeffs):
            acc[k] = acc.get(k, 0.0) + cb * c
        if acc:
            kappa = np.array(list(acc.keys()), dtype=int)
            coeffs = np.array(list(acc.values()), dtype=complex)
        else:
            kappa = np.zeros((0, self.dims), dtype=int)
            coeffs = np.zeros(0, dtype=complex)
        ksq = np.sum(kappa.astype(float) ** 2, axis=1)
        energy = float(np.sum(4.0 * np.pi**2 * ksq * np.abs(coeffs) ** 2))
        return CorrectorSlice(self.m_xi, self.dims, kappa, coeffs, energy)


def solve_cell_poisson(samples):
    """Corrector slice from Q samples on the uniform xi-grid (j/m per axis).

    Input must have zero mean to 1e-8 relative; the returned slice has its
    zero-frequency coefficient exactly removed.
    """
    samples = np.asarray(samples, dtype=float)
    dims = samples.ndim
    m = samples.shape[0]
    if any(s != m for s in samples.shape):
        raise ValueError("xi-grid must be square")
    scale = float(np.max(np.abs(samples))) or 1.0
    if abs(float(np.mean(samples))) > 1e-8 * scale:
        raise ValueError("cell problem requires zero-mean input")

    qhat = np.fft.fftn(samples) / samples.size
    freqs = np.fft.fftfreq(m, d=1.0 / m)
    mesh = np.meshgrid(*([freqs] * dims), indexing="ij")
    ksq = np.zeros_like(qhat, dtype=float)
    for g in mesh:
        ksq += g * g
    what = np.zeros_like(qhat)
    nz = ksq > 0
    what[nz] = -qhat[nz] / (4.0 * np.pi**2 * ksq[nz])

    keep = np.abs(what) > COEFF_CUT * (float(np.max(np.abs(what))) or 1.0)
    keep &= nz
    kappa = np.stack([g[keep] for g in mesh], axis=-1).astype(int)
    coeffs = what[keep]
    energy = float(np.sum(np.abs(qhat[nz]) ** 2 / (4.0 * np.pi**2 * ksq[nz])))
    return CorrectorSlice(m_xi=m, dims=dims, kappa=kappa, coeffs=coeffs,
                          energy=energy)


def gradient_energy(corrector: CorrectorSlice):
    """int |grad_xi Wstar|^2 d xi via the Parseval closed form."""
    return corrector.energy


def _xi_grid(m, dims):
    g = np.arange(m) / m
    return np.stack(np.meshgrid(*([g] * dims), indexing="ij"), axis=-1)


class PeriodicCorrector:
    """Corrector slices of a callable Q(x, xi), cached per slow point.

    Slow-variable derivatives are central finite differences of the cached
    slices; Q is assumed smooth in x (the osc smoothness hypothesis).
    """

    def __init__(self, Q, m_xi=64, dims=2, fd_step=1e-4):
        self.Q = Q
        self.m_xi = m_xi
        self.dims = dims
        self.fd_step = fd_step
        self._cache = {}
        self._mesh = _xi_grid(m_xi, dims)

    def slice(self, x):
        key = tuple(np.round(np.asarray(x, dtype=float), 12))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        x = np.asarray(x, dtype=float)
        samples = self.Q(np.broadcast_to(x, self._mesh.shape), self._mesh)
        samples = np.asarray(samples, dtype=float)
        mean = float(np.mean(samples))
        sl = solve_cell_poisson(samples - mean)
        self._cache[key] = sl
        return sl

    def value(self, x, xi):
        return self.slice(x).value(xi)

    def dx_slice(self, x, axis):
        d = self.fd_step
        e = np.zeros(self.dims)
        e[axis] = d
        return self.slice(np.asarray(x) + e).combine(self.slice(np.asarray(x) - e),
                                                     1.0 / (2 * d), -1.0 / (2 * d))

    def dxx_slice(self, x, axis):
        d = self.fd_step
        e = np.zeros(self.dims)
        e[axis] = d
        plus = self.slice(np.asarray(x) + e)
        minus = self.slice(np.asarray(x) - e)
        mid = self.slice(np.asarray(x))
        return plus.combine(mid, 1.0 / d**2, -2.0 / d**2).combine(minus, 1.0, 1.0 / d**2)

    def gradient_energy(self, x):
        return self.slice(x).energy


# ---------------------------------------------------------------------------
# localized corrector
# ---------------------------------------------------------------------------

class WstarLoc:
    """Solution of (Wstar_loc)'' = profile with linear tails outside the support."""

    def __init__(self, spec):
        self.spec = spec
        self.radius = spec.support_radius
        self.total = spec.integral()          # int profile
        self.first_moment = spec.first_moment()  # int z profile(z) dz

    @lru_cache(maxsize=100000)
    def _value_scalar(self, xi):
        r = self.radius
        if xi >= r:
            return 0.5 * xi * self.total - 0.5 * self.first_moment
        if xi <= -r:
            return -0.5 * xi * self.total + 0.5 * self.first_moment
        val, _ = quad(lambda z: abs(xi - z) * self.spec.profile(z), -r, r,
                      points=[xi], epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return 0.5 * val

    @lru_cache(maxsize=100000)
    def _derivative_scalar(self, xi):
        r = self.radius
        if xi >= r:
            return 0.5 * self.total
        if xi <= -r:
            return -0.5 * self.total
        below = self.spec.segment_integral(-r, xi)
        return below - 0.5 * self.total

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.array([self._value_scalar(float(z)) for z in np.atleast_1d(xi)]
                        ).reshape(xi.shape)

    def derivative(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.array([self._derivative_scalar(float(z)) for z in np.atleast_1d(xi)]
                        ).reshape(xi.shape)


def wstar_loc(spec):
    """Corrector for the localized profile (n = 1)."""
    return WstarLoc(spec)


# ---------------------------------------------------------------------------
# hypothesis integrals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisReport:
    kind: str
    value: float
    error_estimate: float

    @property
    def passes(self):
        return self.value > self.error_estimate


def hypothesis_loc(spec):
    """int profile > 0 (the localized positivity hypothesis)."""
    val, err = quad(spec.profile, -spec.support_radius, spec.support_radius,
                    epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return HypothesisReport(kind="loc", value=float(val),
                            error_estimate=max(float(err), 1e-12))


def _gauss_points(lo, hi, n):
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    return mid + half * x, half * w


def _osc_hypothesis_value(spec, mode, n_quad):
    (x1_lo, x1_hi), (y_lo, y_hi) = spec.support
    corr = PeriodicCorrector(spec.Q, m_xi=spec.m_xi, dims=2)
    xq, xw = _gauss_points(x1_lo, x1_hi, n_quad)
    yq, yw = _gauss_points(y_lo, y_hi, n_quad)
    psi2 = psi0_at_safe(mode, yq) ** 2

    total_w = 0.0
    total_e = 0.0
    for xi, wxi in zip(xq, xw):
        pts = np.stack([np.full_like(yq, xi), yq], axis=-1)
        wvals = spec.w_at(pts)
        energies = np.array([corr.gradient_energy((xi, y)) for y in yq])
        total_w += wxi * float(np.sum(yw * psi2 * wvals))
        total_e += wxi * float(np.sum(yw * psi2 * energies))
    return total_w - total_e


def psi0_at_safe(mode, y):
    y = np.clip(np.asarray(y, dtype=float), 0.0, mode.d)
    return psi0_at(mode, y)


def hypothesis_osc(spec, mode: TransverseMode, n_quad=32):
    """int W psi0^2 dx - int psi0^2 int |grad_xi Wstar|^2 d xi dx > 0."""
    fine = _osc_hypothesis_value(spec, mode, n_quad)
    coarse = _osc_hypothesis_value(spec, mode, max(4, n_quad // 2))
    err = abs(fine - coarse) + 1e-12
    return HypothesisReport(kind="osc", value=float(fine), error_estimate=err)


def hypothesis_dlt(spec, mode: TransverseMode):
    """int_S b psi0^2 dS > 0 by surface quadrature."""
    y = spec.points[:, 1]
    psi2 = psi0_at_safe(mode, y) ** 2
    value = float(np.sum(spec.weights * spec.b_values * psi2))
    half = 2.0 * float(np.sum(spec.weights[::2] * spec.b_values[::2] * psi2[::2]))
    err = abs(value - half) + 1e-12
    return HypothesisReport(kind="dlt", value=value, error_estimate=err)


# ---------------------------------------------------------------------------
# oscillating-integral order check (the averaging lemma at work)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillationFit:
    eps: tuple
    errors: tuple
    reference: float
    slope: float


def _panel_gauss_integral(f, box, panel_width, order=8, chunk=64):
    """Tensor composite Gauss-Legendre integral of f(x) over a 2-D box."""
    (ax, bx), (ay, by) = box
    gx, gw = np.polynomial.legendre.leggauss(order)

    def axis_nodes(a, b):
        n_panels = max(1, int(np.ceil((b - a) / panel_width)))
        edges = np.linspace(a, b, n_panels + 1)
        mid = (edges[:-1] + edges[1:]) / 2
        half = (edges[1:] - edges[:-1]) / 2
        nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        weights = (half[:, None] * gw[None, :]).ravel()
        return nodes, weights

    xs, wxs = axis_nodes(ax, bx)
    ys, wys = axis_nodes(ay, by)
    total = 0.0
    for i0 in range(0, len(xs), chunk):
        xblk = xs[i0:i0 + chunk]
        wblk = wxs[i0:i0 + chunk]
        X, Y = np.meshgrid(xblk, ys, indexing="ij")
        vals = f(np.stack([X, Y], axis=-1))
        total += float(np.einsum("i,j,ij->", wblk, wys, vals))
    return total


def oscillating_mean_check(w, eps_list, box, m_mean=8):
    """Fit the convergence order of int w(x, x/eps) dx to its xi-averaged limit.

    w(x, xi) must be vectorized, 1-periodic in xi, with compact x-support
    inside the box. Quadrature uses composite Gauss-Legendre panels of width
    <= eps/4 (node spacing below eps/20); the xi-averaged reference is
    evaluated on the same nodes, so a xi-independent w gives errors that are
    exactly zero. The xi-mean uses an m_mean-per-direction tensor rule,
    exact for band-limited w with frequencies below m_mean.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 4:
        raise ValueError("need at least 4 epsilon values")
    ratios = [eps_list[i + 1] / eps_list[i] for i in range(len(eps_list) - 1)]
    if max(ratios) / min(ratios) > 1.05:
        raise ValueError("epsilon schedule must be geometric")

    xi_points = _xi_grid(m_mean, 2).reshape(-1, 2)

    def remainder(x, eps):
        """w(x, x/eps) minus the xi-mean of w at x, on the same nodes."""
        flat = x.reshape(-1, 2)
        out = np.asarray(w(flat, flat / eps), dtype=float).copy()
        for pt in xi_points:
            out -= w(flat, np.broadcast_to(pt, flat.shape)) / len(xi_points)
        return out.reshape(x.shape[:-1])

    reference = 0.0
    errors = []
    for eps in eps_list:
        err_signed = _panel_gauss_integral(lambda x: remainder(x, eps), box,
                                           panel_width=eps / 4)
        integral = _panel_gauss_integral(lambda x: w(x, x / eps), box,
                                         panel_width=eps / 4)
        reference = integral - err_signed
        errors.append(abs(err_signed))

    if min(errors) <= 1e-14 * max(abs(reference), 1.0):
        slope = float("inf")
    else:
        slope = float(np.polyfit(np.log(eps_list), np.log(errors), 1)[0])
    return OscillationFit(eps=tuple(eps_list), errors=tuple(errors),
                          reference=float(reference), slope=slope)
