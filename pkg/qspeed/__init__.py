"""
qspeed: quantum speed limits of observables under photonic dephasing
"""

__version__ = "0.1.0"
__description__ = (
    "Numerical laboratory for quantum speed limits on observables in N-photon dephasing "
    "experiments, with a virtual tomography pipeline"
)

from .cli import main

__all__ = ["main"]
