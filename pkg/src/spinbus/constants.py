"""Physical constants in the package-wide unit system.

All modules work in meV (energy), ns (time), nm (length) and mT (magnetic
field).  Public frequencies are cyclic (GHz = 1/ns); factors of 2*pi appear
only inside propagation code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants, CODATA values converted to meV/ns/nm/mT."""

    g: float = 2.0                       # Lande g-factor, dimensionless
    mu_B: float = 5.7883818060e-5        # Bohr magneton, meV/mT
    hbar: float = 6.582119569e-4         # reduced Planck constant, meV*ns
    h: float = 4.135667696e-3            # Planck constant, meV*ns

    def __post_init__(self):
        for name in ("g", "mu_B", "hbar", "h"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"constant {name} must be positive")
        if abs(self.h - 2.0 * math.pi * self.hbar) > 1e-9 * self.h:
            raise ValueError("h and hbar are inconsistent (h != 2*pi*hbar)")


CONSTANTS = PhysicalConstants()
