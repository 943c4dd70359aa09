import numpy as np
import pytest

from striplocalizer.geometry import (LatticeSpec, Window, build_window_grid,
                                     cell_of_point, cells_of)


def make_grid(N=1, m=4, mt=4, bcs=("neumann", "neumann"), alpha=(0,)):
    return build_window_grid(LatticeSpec(), Window(alpha=alpha, N=N), d=1.0,
                             m_per_cell=m, m_transverse=mt, bcs=bcs)


def test_unknown_count_neumann():
    grid = make_grid()
    assert grid.node_count == 25
    assert grid.unknown_count == 25


def test_unknown_count_dirichlet():
    grid = make_grid(bcs=("dirichlet", "dirichlet"))
    assert grid.node_count == 25
    assert grid.unknown_count == 15


def test_node_count_formula():
    grid = make_grid(N=8, m=64, mt=32)
    assert grid.node_count == (8 * 64 + 1) * (32 + 1)
    assert grid.unknown_count == grid.node_count


def test_cells_of_basic():
    assert cells_of(Window(alpha=(0,), N=1)) == [(0,)]
    assert cells_of(Window(alpha=(0,), N=3)) == [(0,), (1,), (2,)]
    assert cells_of(Window(alpha=(-1,), N=2)) == [(-1,), (0,)]


def test_cells_of_lexicographic_2d():
    cells = cells_of(Window(alpha=(0, 0), N=2))
    assert cells == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_cell_of_point_interior():
    grid = make_grid(N=2)
    assert cell_of_point(grid, [0.25]) == (0,)
    assert cell_of_point(grid, [0.75]) == (1,)


def test_cell_of_point_shared_face_goes_to_smaller():
    grid = make_grid(N=2)
    # face between cells 0 and 1 sits at x = 0.5
    assert cell_of_point(grid, [0.5]) == (0,)


def test_cell_of_point_outside_window():
    grid = make_grid(N=2)
    with pytest.raises(ValueError):
        cell_of_point(grid, [1.75])


def test_partition_of_nodes():
    grid = make_grid(N=3, m=8, mt=4)
    counts = {}
    for uid in range(grid.unknown_count):
        counts[grid.cell_of_unknown(uid)] = counts.get(grid.cell_of_unknown(uid), 0) + 1
    assert sum(counts.values()) == grid.unknown_count
    assert set(counts) == set(cells_of(grid.window))


def test_index_round_trip():
    grid = make_grid(N=2, m=5, mt=6, bcs=("dirichlet", "neumann"))
    for uid in range(grid.unknown_count):
        assert grid.unknown_id(grid.unknown_multi_index(uid)) == uid


def test_shared_face_node_assigned_to_smaller_cell():
    grid = make_grid(N=2, m=4)
    lat_cells = grid.lat_cell_index(0)
    # node index 4 sits exactly on the face between cells 0 and 1
    assert lat_cells[4] == 0


def test_mass_vector_total_volume():
    grid = make_grid(N=2, m=8, mt=8)
    # total dual volume equals the window area N*ell*d
    assert np.isclose(np.sum(grid.mass_vector()), 2.0 * 1.0, rtol=1e-14)


def test_coordinates_cover_window():
    grid = make_grid(N=2, m=4)
    x = grid.lat_coords[0]
    assert x[0] == pytest.approx(-0.5)
    assert x[-1] == pytest.approx(1.5)
    assert np.allclose(np.diff(x), 0.25)


def test_rejects_bad_inputs():
    lat, win = LatticeSpec(), Window(alpha=(0,), N=1)
    with pytest.raises(ValueError):
        build_window_grid(lat, win, d=-1.0, m_per_cell=8, m_transverse=8)
    with pytest.raises(ValueError):
        build_window_grid(lat, win, d=1.0, m_per_cell=2, m_transverse=8)
    with pytest.raises(ValueError):
        build_window_grid(lat, win, d=1.0, m_per_cell=8, m_transverse=2)
    with pytest.raises(ValueError):
        build_window_grid(lat, Window(alpha=(0,), N=2**21), d=1.0,
                          m_per_cell=8, m_transverse=8)


def test_lattice_validation():
    with pytest.raises(ValueError):
        LatticeSpec(n=0)
    with pytest.raises(ValueError):
        LatticeSpec(n=1, basis_lengths=(-1.0,))
    with pytest.raises(ValueError):
        Window(alpha=(0,), N=0)
    assert LatticeSpec(n=2, basis_lengths=(1.0, 2.0)).cell_volume == 2.0
