"""Numerical laboratory for valence-bond resource states and
measurement-based quantum computing, at dense desk scale."""

__version__ = "0.1.0"

from .qstate import (
    QuditState,
    DensityMatrix,
    apply_gate,
    measure,
    reduced_density,
    range_projector,
    equal_up_to_global_phase,
)

__all__ = [
    "QuditState",
    "DensityMatrix",
    "apply_gate",
    "measure",
    "reduced_density",
    "range_projector",
    "equal_up_to_global_phase",
    "__version__",
]
