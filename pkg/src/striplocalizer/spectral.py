"""Smallest-eigenpair computation, two-sided estimate checks, resolvent
block norms, and exponential-decay fitting.

Symmetric operators go through ARPACK shift-invert Lanczos with a Gershgorin
shift below the spectrum; transformed (non-symmetric) assemblies use
shift-invert power iteration on the isolated real bottom eigenvalue, which
is real because the assembly is similar to a symmetric operator. All
computations are deterministic (fixed start vectors, no randomized state).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hamiltonian import DiscreteOperator
from .gauge import TransformedAssembly
from .geometry import WindowGrid

__all__ = [
    "EigenResult",
    "smallest_eigs",
    "TwoSidedReport",
    "fit_two_sided_constant",
    "two_sided_check",
    "CellBox",
    "box_distance",
    "resolvent_block_norm",
    "DecayFit",
    "fit_decay",
]


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(vals) < 0):
            raise ValueError("eigenvalues must be ascending")
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def lambda_min(self):
        return float(self.eigenvalues[0])


def _gershgorin_lower(matrix):
    diag = matrix.diagonal()
    absrow = np.abs(matrix) @ np.ones(matrix.shape[0])
    return float(np.min(2 * diag - absrow))


def _refine_symmetric(matrix, lam, vec, tol):
    """One shifted inverse-iteration step plus a Rayleigh update."""
    shift = lam - max(1e-8, 1e-8 * abs(lam))
    lu = spla.splu((matrix - shift * sp.identity(matrix.shape[0])).tocsc())
    v = lu.solve(vec)
    v /= np.linalg.norm(v)
    lam = float(v @ (matrix @ v))
    return lam, v


def smallest_eigs(op, k=1, tol=1e-9, sigma=None):
    """k smallest eigenpairs of a DiscreteOperator, or the bottom eigenvalue
    of a TransformedAssembly (k = 1 only for the non-symmetric route)."""
    if isinstance(op, TransformedAssembly):
        return _smallest_nonsymmetric(op, k, tol, sigma)
    if not isinstance(op, DiscreteOperator):
        raise TypeError("expected DiscreteOperator or TransformedAssembly")
    if k > 10:
        raise ValueError("k must be <= 10")
    matrix = op.matrix
    n = matrix.shape[0]

    if n <= max(3 * k + 2, 60):
        vals, vecs = np.linalg.eigh(matrix.toarray())
        vals, vecs = vals[:k], vecs[:, :k]
        iters = 0
    else:
        if sigma is None:
            sigma = _gershgorin_lower(matrix) - 1.0
        v0 = np.full(n, 1.0 / np.sqrt(n))
        try:
            vals, vecs = spla.eigsh(matrix, k=k, sigma=sigma, which="LM",
                                    v0=v0, tol=1e-12,
                                    ncv=min(n - 1, max(2 * k + 8, 20)),
                                    maxiter=5000)
        except spla.ArpackNoConvergence as exc:
            raise RuntimeError("eigensolver failed to converge") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        iters = -1  # ARPACK does not report its iteration count

    residuals = []
    out_vals = []
    for i in range(k):
        lam, v = float(vals[i]), vecs[:, i]
        res = float(np.linalg.norm(matrix @ v - lam * v))
        if res > tol * (1.0 + abs(lam)):
            lam, v = _refine_symmetric(matrix, lam, v, tol)
            res = float(np.linalg.norm(matrix @ v - lam * v))
            if res > tol * (1.0 + abs(lam)):
                raise RuntimeError("eigenpair residual above tolerance after refinement")
        out_vals.append(lam)
        residuals.append(res)
    order = np.argsort(out_vals)
    return EigenResult(eigenvalues=np.asarray(out_vals)[order],
                       residuals=np.asarray(residuals)[order], iterations=iters)


def _smallest_nonsymmetric(op, k, tol, sigma):
    """Shift-invert power iteration for the real isolated bottom eigenvalue."""
    if k != 1:
        raise ValueError("transformed assemblies support k = 1 only")
    matrix = op.matrix
    n = matrix.shape[0]
    if sigma is None:
        sym = 0.5 * (matrix + matrix.T)
        sigma = _gershgorin_lower(sym.tocsr()) - 1.0
    lu = spla.splu((matrix - sigma * sp.identity(n)).tocsc())
    v = np.full(n, 1.0 / np.sqrt(n))
    lam_old = np.inf
    for it in range(1, 201):
        v = lu.solve(v)
        v /= np.linalg.norm(v)
        lam = float(v @ (matrix @ v))
        if abs(lam - lam_old) <= 0.25 * tol * (1.0 + abs(lam)):
            res = float(np.linalg.norm(matrix @ v - lam * v))
            if res <= tol * (1.0 + abs(lam)):
                return EigenResult(eigenvalues=np.array([lam]),
                                   residuals=np.array([res]), iterations=it)
        lam_old = lam
    raise RuntimeError(
        "shift-invert power iteration did not converge; the bottom eigenvalue "
        "may not be real and isolated (broken similarity)")


# ---------------------------------------------------------------------------
# two-sided estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoSidedReport:
    lambda_min: float
    lambda0: float
    N: int
    lower_ok: bool
    upper_ok: bool
    h_tolerance: float
    c_hat: float


def fit_two_sided_constant(Ns, gaps):
    """Single constant C with gap <= C / N^2; returns (C, relative spread).

    C is the largest rescaled gap; the spread measures how far gap*N^2
    deviates from constant across the sweep.
    """
    scaled = np.asarray(gaps, dtype=float) * np.asarray(Ns, dtype=float) ** 2
    if np.any(scaled <= 0):
        raise ValueError("two-sided fit needs positive gaps")
    c_hat = float(np.max(scaled))
    residual = float(1.0 - np.min(scaled) / np.max(scaled))
    return c_hat, residual


def two_sided_check(lambda_min, lambda0, N, c_hat, h_tolerance):
    """Booleans for Lambda0 - tol <= lambda and lambda <= Lambda0 + C/N^2."""
    lower_ok = bool(lambda_min >= lambda0 - h_tolerance)
    upper_ok = bool(lambda_min <= lambda0 + c_hat / N**2)
    return TwoSidedReport(lambda_min=float(lambda_min), lambda0=float(lambda0),
                          N=int(N), lower_ok=lower_ok, upper_ok=upper_ok,
                          h_tolerance=float(h_tolerance), c_hat=float(c_hat))


# ---------------------------------------------------------------------------
# resolvent block norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellBox:
    """Axis-aligned box of whole cells: anchor beta, m cells per direction."""

    beta: tuple
    m: int

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(int(b) for b in np.atleast_1d(self.beta)))
        if self.m < 1:
            raise ValueError("box side count must be >= 1")

    def cells(self):
        from .geometry import Window, cells_of
        return cells_of(Window(alpha=self.beta, N=self.m))


def _box_unknowns(grid: WindowGrid, box: CellBox):
    cells = set(box.cells())
    lat_cells = grid.lat_cell_index(0) + grid.window.alpha[0]
    mask = np.isin(lat_cells, [c[0] for c in cells])
    if not np.any(mask):
        raise ValueError("box does not intersect the window")
    n_tr = grid.shape[-1]
    lat_idx = np.nonzero(mask)[0]
    return (lat_idx[:, None] * n_tr + np.arange(n_tr)[None, :]).ravel()


def box_distance(grid: WindowGrid, b1: CellBox, b2: CellBox):
    """Longitudinal distance between the closest faces of two cell boxes."""
    ell = grid.lattice.basis_lengths[0]
    lo1, hi1 = (b1.beta[0] - 0.5) * ell, (b1.beta[0] + b1.m - 0.5) * ell
    lo2, hi2 = (b2.beta[0] - 0.5) * ell, (b2.beta[0] + b2.m - 0.5) * ell
    return max(0.0, max(lo1, lo2) - min(hi1, hi2))


def resolvent_block_norm(op: DiscreteOperator, lam, b1: CellBox, b2: CellBox,
                         rel_tol=1e-4, max_iter=2000):
    """Operator norm of chi_B1 (H - lam)^{-1} chi_B2 by power iteration on R^T R.

    lam must lie strictly below the spectrum (checked against the bottom
    eigenvalue); inner solves use one sparse LU factorization.
    """
    bottom = smallest_eigs(op, k=1, tol=1e-10).lambda_min
    delta = bottom - lam
    if delta <= 0:
        raise ValueError("spectral parameter must lie below the spectrum")

    i1 = _box_unknowns(op.grid, b1)
    i2 = _box_unknowns(op.grid, b2)
    n = op.matrix.shape[0]
    lu = spla.splu((op.matrix - lam * sp.identity(n)).tocsc())

    def apply_r(v):
        full = np.zeros(n)
        full[i2] = v
        return lu.solve(full)[i1]

    def apply_rt(u):
        full = np.zeros(n)
        full[i1] = u
        return lu.solve(full)[i2]

    gen = np.random.Generator(np.random.Philox(key=2024))
    v = gen.random(len(i2)) + 0.5
    v /= np.linalg.norm(v)
    norm_old = 0.0
    for _ in range(max_iter):
        u = apply_r(v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        w = apply_rt(u)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return float(nu)
        norm_new = np.sqrt(nw)
        v = w / nw
        if abs(norm_new - norm_old) <= rel_tol * norm_new:
            return float(norm_new)
        norm_old = norm_new
    raise RuntimeError("resolvent norm power iteration did not converge")


# ---------------------------------------------------------------------------
# decay fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    points: tuple
    slope: float
    intercept: float
    r_squared: float
    rate: float      # fitted C2 * delta (negated slope)
    c1: float        # delta * exp(intercept)


def fit_decay(samples, delta):
    """Least squares of log norm vs distance for norm ~ C1/delta e^{-C2 delta d}."""
    samples = [(float(d), float(v)) for d, v in samples]
    if len(samples) < 4:
        raise ValueError("need at least 4 (distance, norm) samples")
    if any(v <= 0 for _, v in samples):
        raise ValueError("norms must be positive")
    dist = np.array([d for d, _ in samples])
    logn = np.log([v for _, v in samples])
    slope, intercept = np.polyfit(dist, logn, 1)
    pred = slope * dist + intercept
    ss_res = float(np.sum((logn - pred) ** 2))
    ss_tot = float(np.sum((logn - np.mean(logn)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return DecayFit(points=tuple(samples), slope=float(slope),
                    intercept=float(intercept), r_squared=r2,
                    rate=float(-slope), c1=float(delta * np.exp(intercept)))
