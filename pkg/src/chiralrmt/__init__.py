"""Finite-N spectral statistics for the GUE to chGUE crossover W = H1 + i mu H2."""

__version__ = "0.1.0"

from .ensemble import Coupling, make_coupling
from .kernels import KernelSet
from .linalg import RngStream

__all__ = ["Coupling", "KernelSet", "RngStream", "__version__", "make_coupling"]
