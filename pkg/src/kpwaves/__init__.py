"""Kernel analysis and solitary-wave asymptotics for generalized
Kadomtsev-Petviashvili dispersion operators."""

__version__ = "0.1.0"

from .grids import Field, FieldFormatError, Grid, load_field, save_field
from .solver import (SolverError, WaveState, admissible_p_sup,
                     residual_conv, residual_h0, rescale,
                     solve_solitary_wave)

__all__ = [
    "Field", "FieldFormatError", "Grid", "load_field", "save_field",
    "SolverError", "WaveState", "admissible_p_sup", "residual_conv",
    "residual_h0", "rescale", "solve_solitary_wave", "__version__",
]
