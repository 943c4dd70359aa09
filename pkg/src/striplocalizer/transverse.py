"""Transverse eigenproblem -d^2/dy^2 + V0 on (0, d) for the ground pair.

The discretization is the shared symmetrized second-order scheme from fd1d,
so the transverse eigenvalue computed here cancels exactly against the
separable part of the window Hamiltonian built on the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .fd1d import operator_1d
from .geometry import _check_bc

__all__ = ["TransverseProblem", "TransverseMode", "solve_transverse",
           "transverse_eigenvalues", "psi0_at", "richardson_h_tolerance"]


@dataclass(frozen=True)
class TransverseProblem:
    d: float
    V0: object  # vectorized callable of the transverse coordinate, or None
    bc_bottom: str
    bc_top: str
    m: int

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("strip width d must be positive")
        _check_bc(self.bc_bottom)
        _check_bc(self.bc_top)


@dataclass(frozen=True)
class TransverseMode:
    """Ground pair (Lambda0, psi0); psi0 sampled at all nodes incl. Dirichlet zeros."""

    lambda0: float
    psi0: np.ndarray = field(repr=False)  # nodal samples on coords
    coords: np.ndarray = field(repr=False)
    d: float
    norm_defect: float
    eig_residual: float
    residual_floor: float = 0.0  # float64 floor ~ eps * ||H||, set by the solver

    def __post_init__(self):
        if self.norm_defect > 1e-12:
            raise ValueError("psi0 is not normalized in the discrete L2(0,d) norm")
        if self.eig_residual > 1e-10 * (1.0 + abs(self.lambda0)) + self.residual_floor:
            raise ValueError("transverse eigenpair residual too large")


def _solve(problem, k, iterate_cap=8):
    if problem.m < 8:
        raise ValueError("transverse divisions m must be >= 8")
    op = operator_1d(problem.d, problem.m, problem.bc_bottom, problem.bc_top,
                     potential=problem.V0)
    try:
        vals, vecs = eigh_tridiagonal(op.diag, op.offdiag, select="i",
                                      select_range=(0, min(k, op.size) - 1))
    except Exception as exc:  # pragma: no cover - LAPACK failures are exotic
        raise RuntimeError(f"transverse eigensolver failed: {exc}") from exc
    return op, vals, vecs


def transverse_eigenvalues(problem, k=5):
    """The k lowest transverse eigenvalues (for gap estimation)."""
    _, vals, _ = _solve(problem, k)
    return vals


def solve_transverse(problem):
    op, vals, vecs = _solve(problem, 1)
    lam = float(vals[0])
    v_sym = vecs[:, 0]

    # residual in the symmetrized coordinates
    mat = op.matrix
    res = float(np.linalg.norm(mat @ v_sym - lam * v_sym))

    # back to nodal samples; discrete L2(0,d) norm is then automatically 1
    psi = v_sym / np.sqrt(op.masses)
    norm_defect = abs(float(np.sum(psi * psi * op.masses)) - 1.0)

    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi

    psi_full = np.zeros(len(op.coords_full))
    psi_full[op.keep] = psi

    # residuals of backward-stable solvers scale with ||H||; allow that floor
    norm_h = float(np.max(np.abs(op.diag)) + 2 * np.max(np.abs(op.offdiag)))
    return TransverseMode(
        lambda0=lam,
        psi0=psi_full,
        coords=op.coords_full,
        d=problem.d,
        norm_defect=norm_defect,
        eig_residual=res,
        residual_floor=64 * np.finfo(float).eps * norm_h,
    )


def psi0_at(mode: TransverseMode, y):
    """Linear interpolation of psi0 between grid samples."""
    y = np.asarray(y, dtype=float)
    if np.any(y < -1e-12 * mode.d) or np.any(y > mode.d * (1 + 1e-12)):
        raise ValueError("transverse coordinate outside [0, d]")
    return np.interp(y, mode.coords, mode.psi0)


def richardson_h_tolerance(problem):
    """Discretization allowance 10*|Lambda0(m) - Lambda0(2m)|."""
    lam_m = solve_transverse(problem).lambda0
    fine = TransverseProblem(problem.d, problem.V0, problem.bc_bottom,
                             problem.bc_top, 2 * problem.m)
    lam_2m = solve_transverse(fine).lambda0
    return 10.0 * abs(lam_m - lam_2m)
