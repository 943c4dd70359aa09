"""Numerical laboratory for random singular perturbations of waveguide
Schrodinger operators: discrete Hamiltonians on strip windows, gauge
transforms, cell correctors, and Monte Carlo experiment harness."""

from .geometry import (LatticeSpec, Window, WindowGrid, build_window_grid,
                       cells_of, cell_of_point)
from .transverse import (TransverseProblem, TransverseMode, solve_transverse,
                         psi0_at)
from .hamiltonian import (MeasureSpec, RandomField, sample_omega, LocSpec,
                          OscSpec, DltSpec, DiscreteOperator,
                          assemble_unperturbed, eval_loc_potential,
                          assemble_loc, assemble_osc, assemble_dlt)
from .cellproblem import (solve_cell_poisson, gradient_energy, wstar_loc,
                          hypothesis_loc, hypothesis_osc, hypothesis_dlt,
                          oscillating_mean_check, PeriodicCorrector)
from .gauge import (CutoffSpec, GaugeField, TransformedAssembly,
                    build_gauge_loc, build_gauge_osc, transform_similarity,
                    assemble_transformed_loc, assemble_transformed_osc,
                    first_order_coeff, second_order_coeff_osc)
from .spectral import (EigenResult, smallest_eigs, two_sided_check,
                       fit_two_sided_constant, CellBox, box_distance,
                       resolvent_block_norm, DecayFit, fit_decay)

__version__ = "0.1.0"
