"""Detection of single microwave photons with a trapped Bose-Einstein condensate.

The chain runs from a coplanar-waveguide resonator (:mod:`mwsense.cpw`) to the
single-photon field at a rubidium cloud, the cloud's spectral response
(:mod:`mwsense.condensate`) and the number of atoms outcoupled into a
detection volume (:mod:`mwsense.sensing`).
"""

__version__ = "0.1.0"

from .condensate import CondensateDerived, CondensateParams, SpectralKernel, derive
from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .cpw import CpwGeometry, CpwMode, FieldVector, make_mode
from .quadrature import IntegralResult, QuadratureSpec
from .sensing import DetectionVolume, SensingResult, atom_rate

__all__ = [
    "CondensateDerived", "CondensateParams", "CpwGeometry", "CpwMode", "DEFAULT_CONSTANTS", "DetectionVolume",
    "FieldVector", "IntegralResult", "PhysicalConstants", "QuadratureSpec", "SensingResult", "SpectralKernel",
    "atom_rate", "derive", "make_mode",
]
