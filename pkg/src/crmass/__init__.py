"""Robin mass, conformal spectra and log-HLS checks on the CR sphere and the Heisenberg group."""

from .constants import (GAMMA3, LAMBDA1, MT_KAPPA, OMEGA3, Q_PRIME_SPHERE, SPHERE_MASS,
                        SPHERE_TOTAL_MASS, VOLUME, eigenvalue)
from .errors import CRMassError, InvalidInputError, StagnationError, UnderResolutionError
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "GAMMA3", "LAMBDA1", "MT_KAPPA", "OMEGA3", "Q_PRIME_SPHERE", "SPHERE_MASS",
    "SPHERE_TOTAL_MASS", "VOLUME", "eigenvalue", "CRMassError", "InvalidInputError",
    "StagnationError", "UnderResolutionError", "KERNEL_BACKEND", "__version__",
]
