"""Numerical Brown measures of polynomials in free normal variables."""

__version__ = "0.1.0"

from .brown import (BrownPipeline, DensityGrid, LambdaGrid, atom_mass, corner_transform,
                    density_grid, epsilon_sweep)
from .elliptic import EllipticParams
from .measures import Measure1D
from .ncpoly import NCPolynomial, linearize_polynomial, parse_polynomial, split_by_variable
from .ovcauchy import VariableModel, haar_unitary, selfadjoint, unitary
from .rdiag import RDiagonalSpec
from .rmt import EnsembleSpec
from .subord import SolverOptions, fold_sum, free_add

__all__ = [
    "BrownPipeline",
    "DensityGrid",
    "LambdaGrid",
    "atom_mass",
    "corner_transform",
    "density_grid",
    "epsilon_sweep",
    "EllipticParams",
    "Measure1D",
    "NCPolynomial",
    "linearize_polynomial",
    "parse_polynomial",
    "split_by_variable",
    "VariableModel",
    "haar_unitary",
    "selfadjoint",
    "unitary",
    "RDiagonalSpec",
    "EnsembleSpec",
    "SolverOptions",
    "fold_sum",
    "free_add",
]
