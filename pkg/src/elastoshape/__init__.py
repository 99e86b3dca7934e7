"""Boundary-integral elastostatics on perturbed inclusions."""

from .emt import EmtTable, emt_first_order, emt_first_order_exterior_form, emt_sum, emt_sum_perturbed
from .errors import ElastoShapeError
from .fields import boundary_traces, eval_u, eval_u1, interface_residuals, traction_displacement_gap
from .geometry import BoundaryGrid, Curve, PerturbationField, perturbed_grid, sample_grid
from .kernels import LamePair
from .polynomial import PolynomialField
from .potentials import LayerPotentials
from .solver import DensityPair, TransmissionProblem, solve_base, solve_first_order, solve_perturbed
from .tensors import IsoTensor4, build_C, build_K, build_M, build_M_LY, build_S

__all__ = [
    "BoundaryGrid", "Curve", "DensityPair", "ElastoShapeError", "EmtTable", "IsoTensor4", "LamePair",
    "LayerPotentials", "PerturbationField", "PolynomialField", "TransmissionProblem", "boundary_traces",
    "build_C", "build_K", "build_M", "build_M_LY", "build_S", "emt_first_order",
    "emt_first_order_exterior_form", "emt_sum", "emt_sum_perturbed", "eval_u", "eval_u1",
    "interface_residuals", "perturbed_grid", "sample_grid", "solve_base", "solve_first_order",
    "solve_perturbed", "traction_displacement_gap",
]
