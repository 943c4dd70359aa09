"""Lattice, cell, window, and grid bookkeeping for the strip and its finite pieces.

The strip is {0 < x_{n+1} < d} over R^n. A window is the union of N^n lattice
cells; each cell is the half-open box centered at its lattice point, so the
origin is an interior point of the reference cell and perturbations centered
at lattice points sit strictly inside their cell. Shared cell faces belong to
the lower-index cell.

All objects are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeSpec",
    "Window",
    "WindowGrid",
    "build_window_grid",
    "cells_of",
    "cell_of_point",
]

MAX_NODES_PER_DIRECTION = 2**22

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


def _check_bc(bc):
    if bc not in (DIRICHLET, NEUMANN):
        raise ValueError(f"unknown boundary condition {bc!r}")
    return bc


@dataclass(frozen=True)
class LatticeSpec:
    """Rectangular periodic lattice in R^n with cell centered at the origin."""

    n: int = 1
    basis_lengths: tuple = (1.0,)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("lattice dimension must be >= 1")
        lengths = tuple(float(v) for v in self.basis_lengths)
        if len(lengths) != self.n:
            raise ValueError("need one basis length per lattice direction")
        if any(v <= 0 for v in lengths):
            raise ValueError("basis lengths must be positive")
        object.__setattr__(self, "basis_lengths", lengths)

    @property
    def cell_volume(self):
        return float(np.prod(self.basis_lengths))


@dataclass(frozen=True)
class Window:
    """Window anchor alpha (integer lattice coordinates) and side count N."""

    alpha: tuple
    N: int

    def __post_init__(self):
        alpha = tuple(int(a) for a in np.atleast_1d(self.alpha))
        object.__setattr__(self, "alpha", alpha)
        if self.N < 1:
            raise ValueError("window side count N must be >= 1")

    @property
    def n(self):
        return len(self.alpha)


def cells_of(window: Window):
    """Lattice points of the window, lexicographically ordered.

    The order is part of the contract: random-field indexing relies on it.
    """
    ranges = [range(a, a + window.N) for a in window.alpha]
    return [tuple(p) for p in itertools.product(*ranges)]


@dataclass(frozen=True)
class WindowGrid:
    """Uniform tensor grid over a window piece of the strip.

    Longitudinal directions carry N*m_per_cell+1 nodes each (lateral ends are
    always Neumann); the transverse direction carries m_transverse+1 nodes
    with the strip boundary conditions, Dirichlet rows removed from the
    unknown set.
    """

    lattice: LatticeSpec
    window: Window
    d: float
    m_per_cell: int
    m_transverse: int
    bc_bottom: str
    bc_top: str
    lat_coords: tuple = field(repr=False)  # one array per lattice direction
    trans_coords_full: np.ndarray = field(repr=False)
    trans_keep: np.ndarray = field(repr=False)  # unknown transverse node indices

    @property
    def n(self):
        return self.lattice.n

    @property
    def h_long(self):
        return tuple(l / self.m_per_cell for l in self.lattice.basis_lengths)

    @property
    def h_trans(self):
        return self.d / self.m_transverse

    @property
    def node_count(self):
        per_dir = self.window.N * self.m_per_cell + 1
        return per_dir ** self.n * (self.m_transverse + 1)

    @property
    def trans_coords(self):
        return self.trans_coords_full[self.trans_keep]

    @property
    def shape(self):
        """Unknown tensor shape: lateral axes first, transverse last."""
        per_dir = self.window.N * self.m_per_cell + 1
        return tuple([per_dir] * self.n + [len(self.trans_keep)])

    @property
    def unknown_count(self):
        return int(np.prod(self.shape))

    def cells(self):
        return cells_of(self.window)

    def lat_cell_index(self, axis=0):
        """Per-node cell offset along one lateral axis (0..N-1), faces to smaller."""
        m = self.m_per_cell
        j = np.arange(self.window.N * m + 1)
        return (np.maximum(j, 1) - 1) // m

    def cell_node_slices(self, cell):
        """Per-axis index arrays of the nodes belonging to a given cell."""
        out = []
        for axis, k in enumerate(cell):
            rel = k - self.window.alpha[axis]
            idx = np.nonzero(self.lat_cell_index(axis) == rel)[0]
            out.append(idx)
        return out

    def unknown_multi_index(self, uid):
        return np.unravel_index(uid, self.shape)

    def unknown_id(self, multi):
        return int(np.ravel_multi_index(multi, self.shape))

    def node_coords(self, uid):
        multi = self.unknown_multi_index(uid)
        coords = [self.lat_coords[ax][multi[ax]] for ax in range(self.n)]
        coords.append(self.trans_coords[multi[-1]])
        return np.array(coords)

    def cell_of_unknown(self, uid):
        multi = self.unknown_multi_index(uid)
        return tuple(
            int(self.window.alpha[ax] + self.lat_cell_index(ax)[multi[ax]])
            for ax in range(self.n)
        )

    def lat_masses(self, axis=0):
        """Dual lengths of lateral nodes (h at interior, h/2 at the two ends)."""
        h = self.h_long[axis]
        m = np.full(self.window.N * self.m_per_cell + 1, h)
        m[0] = h / 2
        m[-1] = h / 2
        return m

    def trans_masses(self):
        """Dual lengths of the unknown transverse nodes."""
        h = self.h_trans
        m = np.full(self.m_transverse + 1, h)
        m[0] = h / 2
        m[-1] = h / 2
        return m[self.trans_keep]

    def mass_vector(self):
        """Dual volumes of all unknowns, flattened in tensor order."""
        vecs = [self.lat_masses(ax) for ax in range(self.n)]
        vecs.append(self.trans_masses())
        out = vecs[0]
        for v in vecs[1:]:
            out = np.multiply.outer(out, v)
        return out.ravel()


def build_window_grid(lattice, window, d, m_per_cell, m_transverse,
                      bcs=(NEUMANN, NEUMANN)):
    """Construct the discretized window piece of the strip.

    bcs = (bc_bottom, bc_top) applied on the strip boundary; the lateral
    window boundary is always Neumann.
    """
    if window.n != lattice.n:
        raise ValueError("window anchor dimension does not match lattice")
    if d <= 0:
        raise ValueError("strip width d must be positive")
    if m_per_cell < 4:
        raise ValueError("m_per_cell must be >= 4")
    if m_transverse < 4:
        raise ValueError("m_transverse must be >= 4")
    if window.N * m_per_cell + 1 > MAX_NODES_PER_DIRECTION:
        raise ValueError("N*m_per_cell exceeds the supported index range")

    bc_bottom, bc_top = (_check_bc(b) for b in bcs)

    lat_coords = []
    for ax in range(lattice.n):
        ell = lattice.basis_lengths[ax]
        x0 = window.alpha[ax] * ell - ell / 2
        lat_coords.append(x0 + np.arange(window.N * m_per_cell + 1) * (ell / m_per_cell))

    trans_full = np.arange(m_transverse + 1) * (d / m_transverse)
    keep = np.arange(m_transverse + 1)
    if bc_bottom == DIRICHLET:
        keep = keep[1:]
    if bc_top == DIRICHLET:
        keep = keep[:-1]

    return WindowGrid(
        lattice=lattice,
        window=window,
        d=float(d),
        m_per_cell=int(m_per_cell),
        m_transverse=int(m_transverse),
        bc_bottom=bc_bottom,
        bc_top=bc_top,
        lat_coords=tuple(lat_coords),
        trans_coords_full=trans_full,
        trans_keep=keep,
    )


def cell_of_point(grid: WindowGrid, x):
    """Cell containing a point of the closed window; shared faces go to the smaller cell."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    window = grid.window
    cell = []
    for ax in range(grid.n):
        ell = grid.lattice.basis_lengths[ax]
        lo = window.alpha[ax] * ell - ell / 2
        hi = lo + window.N * ell
        xi = x[ax]
        if xi < lo - 1e-12 * ell or xi > hi + 1e-12 * ell:
            raise ValueError(f"point coordinate {xi} outside window axis {ax}")
        # cells are k + (-ell/2, ell/2]; ceil sends face points to the smaller k
        rel = math.ceil((xi - lo) / ell) - 1
        rel = min(max(rel, 0), window.N - 1)
        cell.append(window.alpha[ax] + rel)
    if grid.n + 1 == len(x):
        y = x[-1]
        if y < -1e-12 * grid.d or y > grid.d * (1 + 1e-12):
            raise ValueError("transverse coordinate outside the strip")
    return tuple(cell)
