"""Shared 1-D finite-difference building blocks.

Operators are assembled in the mass-symmetrized form

    H = M^{-1/2} (S + diag(V * mu)) M^{-1/2},

where S is the exactly symmetric stiffness matrix (conductance 1/h per edge)
and M = diag(mu) holds the dual lengths (h interior, h/2 at Neumann ends).
H is entrywise symmetric and its eigenvalues are exactly those of the
generalized pencil (S + V*M, M), i.e. the classical second-order discrete
eigenvalues; Neumann ends behave like mirror stencils, Dirichlet rows are
eliminated. The same builder serves the transverse problem and every lateral
factor of the window Hamiltonian, so separable spectra cancel exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .geometry import DIRICHLET, _check_bc

__all__ = ["Operator1D", "operator_1d"]


class Operator1D:
    """Symmetrized 1-D operator with its grid metadata."""

    def __init__(self, coords_full, keep, masses, diag, offdiag):
        self.coords_full = coords_full
        self.keep = keep
        self.masses = masses  # dual lengths of the kept nodes
        self.diag = diag
        self.offdiag = offdiag

    @property
    def coords(self):
        return self.coords_full[self.keep]

    @property
    def size(self):
        return len(self.keep)

    @property
    def matrix(self):
        # each off-diagonal value is placed on both sides: bitwise symmetric
        return sp.diags(
            [self.offdiag, self.diag, self.offdiag], offsets=[-1, 0, 1], format="csr"
        )


def operator_1d(length, m, bc_low, bc_high, potential=None, x0=0.0):
    """Build the symmetrized 1-D operator -d^2/dx^2 + V on (x0, x0+length).

    potential is a vectorized callable sampled at the kept nodes (None = 0).
    """
    bc_low = _check_bc(bc_low)
    bc_high = _check_bc(bc_high)
    if m < 2:
        raise ValueError("need at least 2 divisions")
    h = length / m
    coords_full = x0 + np.arange(m + 1) * h

    keep = np.arange(m + 1)
    if bc_low == DIRICHLET:
        keep = keep[1:]
    if bc_high == DIRICHLET:
        keep = keep[:-1]

    stiff_diag = np.full(m + 1, 2.0 / h)
    stiff_diag[0] = 1.0 / h
    stiff_diag[-1] = 1.0 / h
    stiff_diag = stiff_diag[keep]

    masses = np.full(m + 1, h)
    masses[0] = h / 2
    masses[-1] = h / 2
    masses = masses[keep]

    if potential is not None:
        v = np.asarray(potential(coords_full[keep]), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("potential is not finite at all sample points")
        stiff_diag = stiff_diag + v * masses

    s = 1.0 / np.sqrt(masses)
    diag = stiff_diag * s * s
    offdiag = (-1.0 / h) * s[:-1] * s[1:]
    return Operator1D(coords_full, keep, masses, diag, offdiag)
