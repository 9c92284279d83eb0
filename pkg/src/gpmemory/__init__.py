"""Spectral laboratory for the heat equation with memory on a disk."""

__version__ = "0.1.0"

from .disk import DiskGeometry, Mode, PolarField, bessel_j, bessel_zero, mode_set, polar_grid, project
from .kernels import ConstantKernel, ExpSumKernel, TabulatedKernel, eval_khat, eval_kernel, khat_zeros, laplace_transform
from .moments import build_moment_system, certify, lemma1_scenario, min_norm_control, moment_rhs
from .reductions import gp_to_damped_wave, routh_hurwitz_cubic, simulate_damped_wave, stability_interval
from .simulate import ModalProblem, residue_solution, simulate_disk, solve_modal_exact, solve_modal_quadrature
from .symbols import characteristic_polynomial, characteristic_roots, hurwitz_check, root_sequence
