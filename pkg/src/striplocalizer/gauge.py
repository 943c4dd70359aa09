"""Multiplication gauges and the transformed (regularized) operators.

Conjugating H = -Delta + V0 + W by the multiplication operator Q gives

    Q^{-1} H Q = -Delta + V0 + (W - Delta Q / Q) - 2 (grad Q / Q) . grad,

and the gauges are built exactly so that the singular part of W cancels
against Delta Q / Q, leaving first-order terms with coefficients bounded
uniformly in the scale. The analytic assemblies discretize those
coefficients directly; the similarity route conjugates the assembled
Hamiltonian by the diagonal of gauge values and preserves its spectrum
exactly. Agreement of the two routes is eigenvalue-level, not entrywise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cellproblem import PeriodicCorrector, WstarLoc, wstar_loc, _osc_hypothesis_value
from .geometry import WindowGrid
from .hamiltonian import (DiscreteOperator, DltSpec, LocSpec, OscSpec,
                          RandomField, assemble_unperturbed)
from .profiles import quintic_step, quintic_step_d1, quintic_step_d2
from .transverse import TransverseMode, psi0_at

__all__ = [
    "GaugeError",
    "CutoffSpec",
    "GaugeField",
    "TransformedAssembly",
    "build_gauge_loc",
    "build_gauge_osc",
    "transform_similarity",
    "assemble_transformed_loc",
    "assemble_transformed_osc",
    "first_order_coeff",
    "second_order_coeff_osc",
]


class GaugeError(RuntimeError):
    pass


@dataclass(frozen=True)
class CutoffSpec:
    """C^2 cutoff: 1 on |s| <= rho1, 0 outside |s| >= rho2, quintic blend."""

    rho1: float
    rho2: float

    def __post_init__(self):
        if not 0 < self.rho1 < self.rho2:
            raise ValueError("need 0 < rho1 < rho2")

    @classmethod
    def default(cls, ell):
        return cls(rho1=0.15 * ell, rho2=0.35 * ell)

    def _t(self, s):
        return (np.abs(s) - self.rho1) / (self.rho2 - self.rho1)

    def chi(self, s):
        s = np.asarray(s, dtype=float)
        return 1.0 - quintic_step(self._t(s))

    def dchi(self, s):
        s = np.asarray(s, dtype=float)
        return -np.sign(s) * quintic_step_d1(self._t(s)) / (self.rho2 - self.rho1)

    def d2chi(self, s):
        s = np.asarray(s, dtype=float)
        return -quintic_step_d2(self._t(s)) / (self.rho2 - self.rho1) ** 2


@dataclass(frozen=True)
class GaugeField:
    """Gauge values at the grid unknowns (flattened tensor order)."""

    values: np.ndarray = field(repr=False)
    grid: WindowGrid
    cutoff: CutoffSpec | None
    deviation: float      # sup |Q - 1|
    deviation_scale: float  # deviation / eps^expected_order

    @property
    def min_value(self):
        return float(np.min(self.values))


@dataclass(frozen=True)
class TransformedAssembly:
    """Generally non-symmetric matrix from a gauge transform."""

    matrix: sp.csr_matrix = field(repr=False)
    method: str  # "similarity" | "analytic"
    grid: WindowGrid


def _broadcast_lat(grid, lat_values):
    return np.repeat(lat_values, grid.shape[-1])


def build_gauge_loc(grid: WindowGrid, spec: LocSpec, eps, omega: RandomField,
                    cutoff: CutoffSpec | None = None, wstar: WstarLoc | None = None):
    """Q_loc = 1 + sum_k (eps w_k)^{2-a} Wstar_loc((x1-k)/(eps w_k)) chi(x1-k)."""
    if grid.n != 1:
        raise GaugeError("localized gauge requires n = 1")
    ell = grid.lattice.basis_lengths[0]
    cutoff = cutoff or CutoffSpec.default(ell)
    wstar = wstar or wstar_loc(spec)
    coords = grid.lat_coords[0]

    vals = np.ones(len(coords))
    for cell, w in zip(omega.cells, omega.values):
        t = eps * w
        if t == 0.0:
            continue
        if t * spec.support_radius > cutoff.rho1:
            raise GaugeError(
                f"profile support {t * spec.support_radius:g} exceeds the inner "
                f"cutoff radius {cutoff.rho1:g} for cell {cell}")
        y = coords - cell[0] * ell
        mask = np.abs(y) < cutoff.rho2
        vals[mask] += (t ** (2.0 - spec.a) * wstar.value(y[mask] / t)
                       * cutoff.chi(y[mask]))
    if np.min(vals) <= 0.0:
        raise GaugeError("gauge lost invertibility (eps too large)")
    deviation = float(np.max(np.abs(vals - 1.0)))
    scale = deviation / eps ** (1.0 - spec.a) if eps > 0 else 0.0
    return GaugeField(values=_broadcast_lat(grid, vals), grid=grid, cutoff=cutoff,
                      deviation=deviation, deviation_scale=scale)


def build_gauge_osc(grid: WindowGrid, spec: OscSpec, eps, omega: RandomField,
                    corrector: PeriodicCorrector | None = None):
    """Q_osc = 1 + sum_k (eps w_k)^{2-a} Wstar(x - k, x/(eps w_k))."""
    if grid.n != 1:
        raise GaugeError("oscillating gauge implemented for n = 1")
    corr = corrector or PeriodicCorrector(spec.Q, m_xi=spec.m_xi, dims=2)
    ell = grid.lattice.basis_lengths[0]
    coords = grid.lat_coords[0]
    y = grid.trans_coords

    vals = np.ones((len(coords), len(y)))
    for cell, w in zip(omega.cells, omega.values):
        t = eps * w
        if t == 0.0:
            continue
        idx = grid.cell_node_slices(cell)[0]
        k_phys = cell[0] * ell
        for i in idx:
            x1 = coords[i]
            for j, yy in enumerate(y):
                sl = corr.slice((x1 - k_phys, yy))
                if len(sl.coeffs) == 0:
                    continue
                vals[i, j] += t ** (2.0 - spec.a) * sl.value(
                    np.array([x1 / t, yy / t]))
    if np.min(vals) <= 0.0:
        raise GaugeError("gauge lost invertibility (eps too large)")
    deviation = float(np.max(np.abs(vals - 1.0)))
    scale = deviation / eps ** (2.0 - spec.a) if eps > 0 else 0.0
    return GaugeField(values=vals.ravel(), grid=grid, cutoff=None,
                      deviation=deviation, deviation_scale=scale)


def transform_similarity(H: DiscreteOperator, g: GaugeField):
    """Exact discrete counterpart of Q^{-1} H Q; spectrum preserved exactly."""
    if g.min_value <= 0:
        raise GaugeError("gauge must be strictly positive")
    d = sp.diags(g.values)
    dinv = sp.diags(1.0 / g.values)
    return TransformedAssembly(matrix=(dinv @ H.matrix @ d).tocsr(),
                               method="similarity", grid=H.grid)


def _first_order_term(grid: WindowGrid, coeff_flat, axis):
    """S diag(coeff) D_axis S^{-1} with central differences along one axis.

    Coefficients must vanish on the boundary rows of that axis (guaranteed
    by the compact supports of the gauge coefficients).
    """
    shape = grid.shape
    n = grid.unknown_count
    if axis < grid.n:
        h = grid.h_long[axis]
    else:
        h = grid.h_trans
    s = np.sqrt(grid.mass_vector())

    idx = np.arange(n).reshape(shape)
    rows, cols, data = [], [], []
    take = [slice(None)] * len(shape)
    take[axis] = slice(1, -1)
    centers = idx[tuple(take)].ravel()
    up = np.take(idx, np.arange(1, shape[axis] - 1) + 1, axis=axis).ravel()
    dn = np.take(idx, np.arange(1, shape[axis] - 1) - 1, axis=axis).ravel()
    c = coeff_flat[centers]
    nz = c != 0.0
    rows.extend(centers[nz]); cols.extend(up[nz])
    data.extend(c[nz] / (2 * h) * s[centers[nz]] / s[up[nz]])
    rows.extend(centers[nz]); cols.extend(dn[nz])
    data.extend(-c[nz] / (2 * h) * s[centers[nz]] / s[dn[nz]])

    boundary = [slice(None)] * len(shape)
    for edge in (0, shape[axis] - 1):
        boundary[axis] = edge
        b = idx[tuple(boundary)].ravel()
        if np.any(coeff_flat[b] != 0.0):
            raise GaugeError("first-order coefficient reaches a window boundary")
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def assemble_transformed_loc(grid: WindowGrid, spec: LocSpec, eps,
                             omega: RandomField, v0=None,
                             base: DiscreteOperator | None = None,
                             cutoff: CutoffSpec | None = None):
    """Discretization of the conjugated operator with analytic coefficients.

    Per cell, with y = x1 - k, t = eps*omega_k, W* the localized corrector:
      first-order:  t^{1-a} * (-2) [W*'(y/t) chi + t W*(y/t) chi'] / Q
      zeroth-order: t^{1-a} * [t^{1-a} prof(y/t) W*(y/t) chi
                               - 2 W*'(y/t) chi' - t W*(y/t) chi''] / Q
    """
    if base is None:
        base = assemble_unperturbed(grid, v0)
    ell = grid.lattice.basis_lengths[0]
    cutoff = cutoff or CutoffSpec.default(ell)
    wstar = wstar_loc(spec)
    gauge = build_gauge_loc(grid, spec, eps, omega, cutoff=cutoff, wstar=wstar)

    coords = grid.lat_coords[0]
    qvals = gauge.values[::grid.shape[-1]]  # longitudinal profile of the gauge
    c1 = np.zeros(len(coords))
    c0 = np.zeros(len(coords))
    for cell, w in zip(omega.cells, omega.values):
        t = eps * w
        if t == 0.0:
            continue
        y = coords - cell[0] * ell
        mask = np.abs(y) < cutoff.rho2
        ym = y[mask]
        ws = wstar.value(ym / t)
        dws = wstar.derivative(ym / t)
        chi = cutoff.chi(ym)
        dchi = cutoff.dchi(ym)
        d2chi = cutoff.d2chi(ym)
        prof = np.asarray(spec.profile(ym / t), dtype=float)
        amp = t ** (1.0 - spec.a)
        c1[mask] += amp * (-2.0) * (dws * chi + t * ws * dchi) / qvals[mask]
        c0[mask] += amp * (amp * prof * ws * chi - 2.0 * dws * dchi
                           - t * ws * d2chi) / qvals[mask]

    matrix = base.matrix + sp.diags(_broadcast_lat(grid, c0))
    matrix = matrix + _first_order_term(grid, _broadcast_lat(grid, c1), axis=0)
    return TransformedAssembly(matrix=matrix.tocsr(), method="analytic", grid=grid)


def assemble_transformed_osc(grid: WindowGrid, spec: OscSpec, eps,
                             omega: RandomField, v0=None,
                             base: DiscreteOperator | None = None):
    """Analytic discretization of the conjugated oscillating operator.

    Per cell, with xt = x - k (longitudinal shift), xi = x/t:
      first-order (axis j): t^{1-a} * (-2) [d_xi_j W* + t d_x_j W*] / Q
      zeroth-order: t^{2-2a} W(xt)
                    + t^{1-a} [t^{1-a} Q(xt,xi) W*(xt,xi)
                               - 2 sum_j d2 W*/dx_j dxi_j - t Lap_x W*] / Q
    """
    if base is None:
        base = assemble_unperturbed(grid, v0)
    corr = PeriodicCorrector(spec.Q, m_xi=spec.m_xi, dims=2)
    gauge = build_gauge_osc(grid, spec, eps, omega, corrector=corr)

    ell = grid.lattice.basis_lengths[0]
    coords = grid.lat_coords[0]
    yv = grid.trans_coords
    n_tr = grid.shape[-1]
    gvals = gauge.values.reshape(len(coords), n_tr)

    c1 = np.zeros((len(coords), n_tr))
    c2 = np.zeros((len(coords), n_tr))
    c0 = np.zeros((len(coords), n_tr))
    for cell, w in zip(omega.cells, omega.values):
        t = eps * w
        if t == 0.0:
            continue
        amp = t ** (1.0 - spec.a)
        idx = grid.cell_node_slices(cell)[0]
        k_phys = cell[0] * ell
        for i in idx:
            x1 = coords[i]
            for j, yy in enumerate(yv):
                xt = (x1 - k_phys, yy)
                sl = corr.slice(xt)
                xloc = np.array(xt)
                wval = float(spec.w_at(xloc))
                if len(sl.coeffs) == 0 and wval == 0.0:
                    continue
                xi = np.array([x1 / t, yy / t])
                g = gvals[i, j]
                ws = sl.value(xi)
                qv = float(spec.q_at(xloc, xi))
                mixed = 0.0
                lap = 0.0
                for ax in range(2):
                    dsl = corr.dx_slice(xt, ax)
                    c1c2 = (-2.0) * amp * (sl.grad_xi(xi, ax) + t * dsl.value(xi)) / g
                    if ax == 0:
                        c1[i, j] += c1c2
                    else:
                        c2[i, j] += c1c2
                    mixed += dsl.grad_xi(xi, ax)
                    lap += corr.dxx_slice(xt, ax).value(xi)
                c0[i, j] += amp * (amp * wval + (amp * qv * ws - 2.0 * mixed
                                                 - t * lap) / g)

    matrix = base.matrix + sp.diags(c0.ravel())
    matrix = matrix + _first_order_term(grid, c1.ravel(), axis=0)
    matrix = matrix + _first_order_term(grid, c2.ravel(), axis=1)
    return TransformedAssembly(matrix=matrix.tocsr(), method="analytic", grid=grid)


def first_order_coeff(spec, mode: TransverseMode, lattice):
    """First eigenvalue coefficient mu_1 of the cell expansion.

    loc: int profile / |cell'|; osc: 0 (first order cancels by construction);
    dlt: int_S b psi0^2 dS / |cell'|.
    """
    vol = lattice.cell_volume
    if isinstance(spec, LocSpec):
        return spec.integral() / vol
    if isinstance(spec, OscSpec):
        return 0.0
    if isinstance(spec, DltSpec):
        psi2 = psi0_at(mode, np.clip(spec.points[:, 1], 0.0, mode.d)) ** 2
        return float(np.sum(spec.weights * spec.b_values * psi2)) / vol
    raise TypeError(f"unknown perturbation spec {type(spec).__name__}")


def second_order_coeff_osc(spec: OscSpec, mode: TransverseMode, lattice,
                           n_quad=32):
    """mu_2 = (int W psi0^2 - int psi0^2 int |grad_xi Wstar|^2) / |cell'|."""
    return _osc_hypothesis_value(spec, mode, n_quad) / lattice.cell_volume
