# qspeed/core/__init__.py
"""Core components for qspeed"""

from .bounds import BoundsRecord, bounds_at, bounds_over, max_bound, max_speed
from .evolution import Scenario, SegmentSpec, evolve_dephasing, evolve_grid, rho_dot
from .experiment import ExperimentConfig, TomographyDataset, mc_speed, reconstruct_state
from .file_manager import FileManager
from .quantum import DensityMatrix, Ket, Operator
from .spectral import SpectralModel, model_from_optics

__all__ = [
    "BoundsRecord",
    "DensityMatrix",
    "ExperimentConfig",
    "FileManager",
    "Ket",
    "Operator",
    "Scenario",
    "SegmentSpec",
    "SpectralModel",
    "TomographyDataset",
    "bounds_at",
    "bounds_over",
    "evolve_dephasing",
    "evolve_grid",
    "max_bound",
    "max_speed",
    "mc_speed",
    "model_from_optics",
    "reconstruct_state",
    "rho_dot",
]
