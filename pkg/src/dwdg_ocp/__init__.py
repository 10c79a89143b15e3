"""Symmetric dual-wind DG discretisation of box-constrained elliptic optimal control."""

from .forms import DWDGForms, PenaltyConfig, error_energy, error_l2
from .mesh import Mesh, build_crisscross
from .ocp import OcpConfig, OcpSolution, pdas_solve
from .problems import ExampleSpec, get_example

__all__ = [
    "DWDGForms", "PenaltyConfig", "error_energy", "error_l2", "Mesh", "build_crisscross",
    "OcpConfig", "OcpSolution", "pdas_solve", "ExampleSpec", "get_example",
]
__version__ = "0.1.0"
