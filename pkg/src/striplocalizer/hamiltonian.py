"""Sparse symmetric discrete Hamiltonians on a window grid.

The unperturbed operator is the Kronecker sum of symmetrized 1-D factors
(lateral Neumann directions and the transverse direction with the strip
boundary conditions), so its spectrum is exactly the sum of the 1-D spectra
and the transverse ground eigenvalue cancels exactly in gap measurements.

Perturbations are added as exactly symmetric terms:
  * loc  - diagonal, dual-cell averages of the scaled profile (mass-lumped,
           preserves the total integral at every scale of the support),
  * osc  - diagonal, pointwise samples (resolution-checked per cell),
  * dlt  - sum of rank-one blocks from bilinear interpolation of surface
           quadrature nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad

from .geometry import Window, WindowGrid, cells_of

__all__ = [
    "MeasureSpec",
    "RandomField",
    "sample_omega",
    "LocSpec",
    "OscSpec",
    "DltSpec",
    "DiscreteOperator",
    "assemble_unperturbed",
    "eval_loc_potential",
    "assemble_loc",
    "assemble_osc",
    "assemble_dlt",
    "OMEGA_FLOOR",
]

OMEGA_FLOOR = 1e-3
QUAD_TOL = 1e-12


# ---------------------------------------------------------------------------
# random fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureSpec:
    """Distribution of the i.i.d. cell variables; supported on [0, 1].

    kinds: "uniform" (optional low/high sub-interval), "bernoulli" (p on
    {0,1}), "table" (inverse-CDF table sampled by linear interpolation).
    """

    kind: str
    low: float = 0.0
    high: float = 1.0
    p: float = 0.5
    quantiles: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "uniform":
            if not (0.0 <= self.low < self.high <= 1.0):
                raise ValueError("uniform measure needs 0 <= low < high <= 1")
        elif self.kind == "bernoulli":
            if not 0.0 <= self.p <= 1.0:
                raise ValueError("bernoulli parameter must be in [0,1]")
        elif self.kind == "table":
            q = np.asarray(self.quantiles, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if len(q) < 2 or len(q) != len(v):
                raise ValueError("table measure needs matching quantile/value arrays")
            if q[0] != 0.0 or q[-1] != 1.0 or np.any(np.diff(q) <= 0):
                raise ValueError("quantile grid must increase from 0 to 1")
            if np.any(v < 0.0) or np.any(v > 1.0) or np.any(np.diff(v) < 0):
                raise ValueError("inverse-CDF values must be nondecreasing in [0,1]")
        else:
            raise ValueError(f"unsupported measure kind {self.kind!r}")

    def map_uniform(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * u
        if self.kind == "bernoulli":
            return (u < self.p).astype(float)
        return np.interp(u, self.quantiles, self.values)

    def moment(self, beta):
        """E omega^beta for beta > 0."""
        if beta <= 0:
            raise ValueError("moment exponent must be positive")
        if self.kind == "uniform":
            lo, hi = self.low, self.high
            return (hi ** (1 + beta) - lo ** (1 + beta)) / ((1 + beta) * (hi - lo))
        if self.kind == "bernoulli":
            return float(self.p)
        u = np.linspace(0.0, 1.0, 20001)
        vals = np.interp(u, self.quantiles, self.values) ** beta
        return float(np.trapezoid(vals, u))


@dataclass(frozen=True)
class RandomField:
    """One draw omega = (omega_k), values in [0,1] keyed by the window cells."""

    cells: tuple
    values: np.ndarray = field(repr=False)
    master_seed: int = 0
    trial_index: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if len(vals) != len(self.cells):
            raise ValueError("one value per cell required")
        if np.any(vals < 0.0) or np.any(vals > 1.0):
            raise ValueError("omega values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, cell):
        return float(self.values[self.cells.index(cell)])

    @classmethod
    def constant(cls, window: Window, value: float):
        cells = tuple(cells_of(window))
        return cls(cells=cells, values=np.full(len(cells), float(value)))


def trial_seed(master_seed, trial_index):
    """Philox key for one trial; the counter then indexes the cells."""
    return (int(master_seed) << 32) | int(trial_index)


def sample_omega(measure: MeasureSpec, window: Window, master_seed, trial_index):
    """Draw omega for every cell of the window, bit-reproducibly.

    Each trial owns a Philox stream keyed by (master_seed, trial_index); the
    i-th draw of the stream belongs to the i-th cell in cells_of order, so
    results do not depend on platform or worker count.
    """
    cells = tuple(cells_of(window))
    gen = np.random.Generator(np.random.Philox(key=trial_seed(master_seed, trial_index)))
    u = gen.random(len(cells))
    return RandomField(cells=cells, values=measure.map_uniform(u),
                       master_seed=int(master_seed), trial_index=int(trial_index))


# ---------------------------------------------------------------------------
# perturbation specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocSpec:
    """Localized potential: W_loc(x1, t) = t^{-a} profile(x1/t); n = 1 only."""

    profile: object  # vectorized callable on R
    support_radius: float
    a: float

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise ValueError("exponent a must lie in [0, 1)")
        if self.support_radius <= 0:
            raise ValueError("support radius must be positive")
        z = np.linspace(-2 * self.support_radius, 2 * self.support_radius, 101)
        if not np.all(np.isfinite(self.profile(z))):
            raise ValueError("profile must be finite")

    def integral(self):
        val, _ = quad(self.profile, -self.support_radius, self.support_radius,
                      epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return val

    def first_moment(self):
        val, _ = quad(lambda z: z * self.profile(z), -self.support_radius,
                      self.support_radius, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return val

    def segment_integral(self, lo, hi):
        lo = max(lo, -self.support_radius)
        hi = min(hi, self.support_radius)
        if hi <= lo:
            return 0.0
        # most profiles have a kink at the origin; give quad the breakpoint
        points = [0.0] if lo < 0.0 < hi else None
        val, _ = quad(self.profile, lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL,
                      limit=200, points=points)
        return val


@dataclass(frozen=True)
class OscSpec:
    """Oscillating potential t^{-a} Q(x, x/t) + t^{2-2a} W(x).

    Q(x, xi) must be 1-periodic in every component of xi with zero xi-mean
    and supported, together with W, in the box `support` strictly inside the
    reference cell (local coordinates: longitudinal offsets from the lattice
    point, transverse absolute).
    """

    Q: object
    W: object  # may be None
    a: float
    support: tuple  # ((lo, hi) per coordinate of the local cell box)
    m_xi: int = 64

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise ValueError("exponent a must lie in [0, 1)")
        if self.m_xi < 8:
            raise ValueError("xi grid too coarse")
        self.check_zero_mean()

    def dims(self):
        return len(self.support)

    def check_zero_mean(self, tol=1e-8):
        dims = self.dims()
        grid = (np.arange(self.m_xi) + 0.5) / self.m_xi
        mesh = np.stack(np.meshgrid(*([grid] * dims), indexing="ij"), axis=-1)
        rng = np.random.Generator(np.random.Philox(key=7))
        for _ in range(3):
            x = np.array([lo + rng.random() * (hi - lo) for lo, hi in self.support])
            vals = self.Q(np.broadcast_to(x, mesh.shape), mesh)
            scale = float(np.max(np.abs(vals))) or 1.0
            if abs(float(np.mean(vals))) > tol * scale:
                raise ValueError("Q does not have zero xi-mean")

    def q_at(self, x, xi):
        return self.Q(x, xi)

    def w_at(self, x):
        if self.W is None:
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1])
        return self.W(x)


@dataclass(frozen=True)
class DltSpec:
    """Delta interaction on a closed surface strictly inside the cell.

    points: (Q, 2) local coordinates (longitudinal offset, transverse);
    weights: arclength quadrature weights; b_values: nonnegative density.
    """

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    b_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.b_values, dtype=float)
        if pts.shape[0] != len(w) or len(w) != len(b):
            raise ValueError("points, weights and b_values must align")
        if np.any(b < 0):
            raise ValueError("surface density b must be nonnegative")
        if np.any(w < 0):
            raise ValueError("quadrature weights must be nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "b_values", b)

    @classmethod
    def circle(cls, lattice, d, radius=None, center_trans=None, n_nodes=256, b=1.0):
        """Default surface: circle centered at the cell center, trapezoid rule."""
        ell = min(lattice.basis_lengths[0], d)
        r = 0.2 * ell if radius is None else float(radius)
        yc = d / 2 if center_trans is None else float(center_trans)
        theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
        pts = np.column_stack([r * np.cos(theta), yc + r * np.sin(theta)])
        w = np.full(n_nodes, 2.0 * np.pi * r / n_nodes)
        bv = b(theta) if callable(b) else np.full(n_nodes, float(b))
        if r >= lattice.basis_lengths[0] / 2 or yc - r <= 0 or yc + r >= d:
            raise ValueError("circle does not fit strictly inside the cell")
        return cls(points=pts, weights=w, b_values=np.asarray(bv, dtype=float))

    def form_mass(self):
        """Total integral of b over the surface (per unit coupling)."""
        return float(np.sum(self.weights * self.b_values))


# union tag used in configs; any of the three spec classes
PerturbationSpec = (LocSpec, OscSpec, DltSpec)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse symmetric operator over the grid unknowns."""

    matrix: sp.csr_matrix = field(repr=False)
    grid: WindowGrid
    tag: str
    notes: tuple = ()

    def __post_init__(self):
        n = self.grid.unknown_count
        if self.matrix.shape != (n, n):
            raise ValueError("operator dimension does not match the unknown count")

    def symmetry_defect(self):
        delta = self.matrix - self.matrix.T
        return 0.0 if delta.nnz == 0 else float(np.max(np.abs(delta.data)))


def _kron_chain(factors):
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


def _kron_sum(mats):
    """sum_i I x ... x A_i x ... x I for the given 1-D factors."""
    sizes = [m.shape[0] for m in mats]
    total = None
    for i, mat in enumerate(mats):
        factors = [sp.identity(s, format="csr") for s in sizes]
        factors[i] = mat
        term = _kron_chain(factors)
        total = term if total is None else total + term
    return total.tocsr()


def _lateral_operators(grid: WindowGrid):
    from .fd1d import operator_1d

    ops = []
    for ax in range(grid.n):
        ell = grid.lattice.basis_lengths[ax]
        x0 = grid.window.alpha[ax] * ell - ell / 2
        ops.append(operator_1d(grid.window.N * ell, grid.window.N * grid.m_per_cell,
                               "neumann", "neumann", potential=None, x0=x0))
    return ops


def _transverse_operator(grid: WindowGrid, v0):
    from .fd1d import operator_1d

    return operator_1d(grid.d, grid.m_transverse, grid.bc_bottom, grid.bc_top,
                       potential=v0)


def assemble_unperturbed(grid: WindowGrid, v0=None):
    """H0 = -Laplacian + V0(x_{n+1}) with lateral Neumann mirror behavior."""
    mats = [op.matrix for op in _lateral_operators(grid)]
    mats.append(_transverse_operator(grid, v0).matrix)
    matrix = _kron_sum(mats)
    matrix.sum_duplicates()
    return DiscreteOperator(matrix=matrix, grid=grid, tag="unperturbed")


def eval_loc_potential(spec: LocSpec, x1, t):
    """W_loc(x1, t): zero at scale t = 0, else t^{-a} profile(x1/t)."""
    x1 = np.asarray(x1, dtype=float)
    if t < 0:
        raise ValueError("scale must be nonnegative")
    if t == 0.0:
        return np.zeros_like(x1)
    return t ** (-spec.a) * np.asarray(spec.profile(x1 / t), dtype=float)


def _loc_diagonal(grid: WindowGrid, spec: LocSpec, eps, omega):
    """Longitudinal vector of dual-cell averages of the summed loc potential."""
    if grid.n != 1:
        raise ValueError("localized perturbation requires n = 1")
    ell = grid.lattice.basis_lengths[0]
    coords = grid.lat_coords[0]
    h = grid.h_long[0]
    masses = grid.lat_masses(0)
    edges = np.concatenate([[coords[0]], (coords[:-1] + coords[1:]) / 2, [coords[-1]]])

    diag = np.zeros(len(coords))
    for cell, w in zip(omega.cells, omega.values):
        t = eps * w
        if t == 0.0:
            continue
        if t * spec.support_radius >= ell / 2:
            raise ValueError(
                f"scaled profile support {t * spec.support_radius:g} exceeds the "
                f"half cell for cell {cell}")
        k_phys = cell[0] * ell
        lo = k_phys - t * spec.support_radius
        hi = k_phys + t * spec.support_radius
        i0 = max(0, int(np.searchsorted(edges, lo)) - 1)
        i1 = min(len(coords) - 1, int(np.searchsorted(edges, hi)))
        for i in range(i0, i1 + 1):
            seg = spec.segment_integral((edges[i] - k_phys) / t,
                                        (edges[i + 1] - k_phys) / t)
            if seg != 0.0:
                diag[i] += t ** (1.0 - spec.a) * seg / masses[i]
    return diag


def assemble_loc(grid: WindowGrid, spec: LocSpec, eps, omega: RandomField,
                 v0=None, base: DiscreteOperator | None = None):
    """H0 plus the mass-lumped localized random potential."""
    if base is None:
        base = assemble_unperturbed(grid, v0)
    diag_lat = _loc_diagonal(grid, spec, eps, omega)
    full = np.repeat(diag_lat, grid.shape[-1])
    matrix = (base.matrix + sp.diags(full)).tocsr()
    matrix.sum_duplicates()
    return DiscreteOperator(matrix=matrix, grid=grid, tag="loc")


def _osc_values(grid: WindowGrid, spec: OscSpec, eps, omega):
    """Pointwise osc potential values at the unknowns, plus cutoff notes."""
    if grid.n != 1:
        raise ValueError("oscillating assembly implemented for n = 1")
    coords = grid.lat_coords[0]
    y = grid.trans_coords
    ell = grid.lattice.basis_lengths[0]
    h = grid.h_long[0]

    vals = np.zeros((len(coords), len(y)))
    cutoffs = []
    for cell, w in zip(omega.cells, omega.values):
        t = eps * w
        if t == 0.0:
            continue
        if w <= OMEGA_FLOOR:
            cutoffs.append(f"cell {cell} below omega floor ({w:g}); left unperturbed")
            continue
        if h > t / 10.0:
            raise ValueError(
                f"grid too coarse for cell {cell}: h={h:g} exceeds eps*omega/10={t / 10.0:g}")
        idx = grid.cell_node_slices(cell)[0]
        x1 = coords[idx]
        k_phys = cell[0] * ell
        X1, Y = np.meshgrid(x1, y, indexing="ij")
        x_local = np.stack([X1 - k_phys, Y], axis=-1)
        x_global = np.stack([X1, Y], axis=-1)
        block = t ** (-spec.a) * spec.q_at(x_local, x_global / t)
        block = block + t ** (2.0 - 2.0 * spec.a) * spec.w_at(x_local)
        vals[idx] += block
    return vals.ravel(), tuple(cutoffs)


def assemble_osc(grid: WindowGrid, spec: OscSpec, eps, omega: RandomField,
                 v0=None, base: DiscreteOperator | None = None):
    """H0 plus the pointwise-sampled oscillating random potential."""
    if base is None:
        base = assemble_unperturbed(grid, v0)
    add, notes = _osc_values(grid, spec, eps, omega)
    matrix = (base.matrix + sp.diags(add)).tocsr()
    matrix.sum_duplicates()
    return DiscreteOperator(matrix=matrix, grid=grid, tag="osc", notes=notes)


def _dlt_form(grid: WindowGrid, spec: DltSpec, eps, omega):
    """Symmetrized surface form: sum of rank-one blocks per quadrature node."""
    if grid.n != 1:
        raise ValueError("delta-interaction assembly implemented for n = 1")
    ell = grid.lattice.basis_lengths[0]
    xs = grid.lat_coords[0]
    hx = grid.h_long[0]
    hy = grid.h_trans
    n_lat = len(xs)
    n_tr = grid.shape[-1]
    full_to_unknown = np.full(grid.m_transverse + 1, -1, dtype=int)
    full_to_unknown[grid.trans_keep] = np.arange(n_tr)
    sqrt_mass = np.sqrt(grid.mass_vector())

    rows, cols, data = [], [], []
    for cell, w in zip(omega.cells, omega.values):
        t = eps * w
        if t == 0.0:
            continue
        k_phys = cell[0] * ell
        pts = spec.points + np.array([k_phys, 0.0])
        if np.any(np.abs(spec.points[:, 0]) >= ell / 2):
            raise ValueError(f"surface exits cell {cell}")
        for (px, py), wq, bq in zip(pts, spec.weights, spec.b_values):
            amount = t * wq * bq
            if amount == 0.0:
                continue
            ix = int(np.clip((px - xs[0]) // hx, 0, n_lat - 2))
            fx = (px - xs[ix]) / hx
            jy_full = int(np.clip(py // hy, 0, grid.m_transverse - 1))
            fy = (py - jy_full * hy) / hy
            idx = []
            wts = []
            for dx, wx in ((0, 1.0 - fx), (1, fx)):
                for dy, wy in ((0, 1.0 - fy), (1, fy)):
                    ju = full_to_unknown[jy_full + dy]
                    if ju < 0:
                        raise ValueError(
                            "surface quadrature touches an eliminated Dirichlet row")
                    idx.append((ix + dx) * n_tr + ju)
                    wts.append(wx * wy)
            idx = np.array(idx)
            v = np.sqrt(amount) * np.array(wts) / sqrt_mass[idx]
            for p in range(4):
                for q in range(4):
                    rows.append(idx[p])
                    cols.append(idx[q])
                    data.append(v[p] * v[q])
    n = grid.unknown_count
    form = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    form.sum_duplicates()
    # duplicate-summation order can differ across the diagonal by one ulp;
    # averaging with the transpose is bitwise symmetric and exact
    form = 0.5 * (form + form.T)
    return form.tocsr()


def assemble_dlt(grid: WindowGrid, spec: DltSpec, eps, omega: RandomField,
                 v0=None, base: DiscreteOperator | None = None):
    """H0 plus the discrete surface interaction form."""
    if base is None:
        base = assemble_unperturbed(grid, v0)
    form = _dlt_form(grid, spec, eps, omega)
    matrix = (base.matrix + form).tocsr()
    matrix.sum_duplicates()
    return DiscreteOperator(matrix=matrix, grid=grid, tag="dlt")
