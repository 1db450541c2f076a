"""Numerical kernels: dual numbers, Lagrangians, Finsler geometry, geodesics, conformal probes."""

from .autodiff import Dual, ScalarField, fd_check, jacobian, jet_eval
from .tolerances import TOLERANCE_DEFAULTS, TOLERANCES

__all__ = [
    "Dual",
    "ScalarField",
    "fd_check",
    "jacobian",
    "jet_eval",
    "TOLERANCES",
    "TOLERANCE_DEFAULTS",
]
