"""Quantum stopping times on a discretised Boson Fock space."""

from .fock import Grid, make_grid
from .stopping import INF, QuantumStoppingTime, qst_new, time_projection

__version__ = "0.1.0"

__all__ = ["Grid", "make_grid", "INF", "QuantumStoppingTime", "qst_new", "time_projection", "__version__"]
