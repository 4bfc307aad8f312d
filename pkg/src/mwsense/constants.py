"""Physical constants and 87Rb data used throughout the package.

Everything is SI. Frequencies are angular (rad/s) unless a name says ``_hz``.

Provenance
----------
=============  ==========================  ===================================
name           value                       source
=============  ==========================  ===================================
hbar           1.054571817e-34 J s         CODATA 2018 (exact via h)
mu0            1.25663706212e-6 H/m        CODATA 2018
eps0           8.8541878128e-12 F/m        CODATA 2018
c_light        299792458 m/s               exact (SI definition)
mu_bohr        9.2740100783e-24 J/T        CODATA 2018
g_grav         9.80665 m/s^2               standard gravity (CGPM 1901)
mass_rb87      86.909180520 u              Steck, "Rubidium 87 D Line Data"
a_scatt        5.4e-9 m                    value used for the sensing estimate
hf_splitting   2 pi x 6.834682610904 GHz   Steck, ground-state hyperfine
=============  ==========================  ===================================

The atomic mass unit is 1.66053906660e-27 kg (CODATA 2018).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

ATOMIC_MASS_UNIT = 1.66053906660e-27
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalConstants:
    """Immutable bundle of constants; pass a modified copy to explore variations."""

    hbar: float = 1.054571817e-34
    mu0: float = 1.25663706212e-6
    eps0: float = 8.8541878128e-12
    c_light: float = 299792458.0
    mu_bohr: float = 9.2740100783e-24
    g_grav: float = 9.80665
    mass_rb87: float = 86.909180520 * ATOMIC_MASS_UNIT
    a_scatt: float = 5.4e-9
    hf_splitting: float = TWO_PI * 6.834682610904e9

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"constant {f.name} must be positive and finite, got {value!r}")

    @property
    def free_space_impedance(self) -> float:
        """sqrt(mu0/eps0) in ohms."""
        return math.sqrt(self.mu0 / self.eps0)


DEFAULT_CONSTANTS = PhysicalConstants()


def zeeman_splitting(b_offset, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Angular frequency spacing of neighbouring m_F sublevels in the F=2 manifold.

    Uses g_F = 1/2, so hbar * omega0 = mu_B * B / 2.

    Parameters
    ----------
    b_offset : float
        Homogeneous offset field in tesla, must be >= 0.
    """
    if not math.isfinite(b_offset) or b_offset < 0:
        raise ValueError(f"offset field must be a finite non-negative value in tesla, got {b_offset!r}")
    return constants.mu_bohr * b_offset / (2.0 * constants.hbar)


def hz_to_angular(frequency_hz: float) -> float:
    return TWO_PI * frequency_hz


def angular_to_hz(omega: float) -> float:
    return omega / TWO_PI
