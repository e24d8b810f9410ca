"""Simulation parameters for the coupled spin-valley system."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .constants import CONSTANTS, PhysicalConstants

#: Largest time step that still resolves the valley dynamics, ns.
MAX_DT = 2e-3


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical parameters, in meV / ns / nm / mT units.

    ``db_perp`` is the transverse micro-magnet gradient driving EDSR,
    ``db_par`` the longitudinal gradient transducing charge noise into spin
    dephasing, and ``Q = db_perp / db_par`` their design ratio.
    """

    B_z: float = 20.0          # external field, mT
    db_perp: float = 0.1       # transverse gradient, mT/nm
    db_par: float = 0.02       # longitudinal gradient, mT/nm
    Q: float = 5.0             # gradient ratio, dimensionless
    kappa_z: float = 1e-6      # spin-valley coupling, meV
    T1_v: float = 100.0        # valley relaxation time, ns
    T2_s: float = 2e4          # spin dephasing time, ns
    dx_rms: float = 4e-3       # charge-noise rms displacement, nm
    dt: float = 8e-4           # propagation step, ns
    constants: PhysicalConstants = CONSTANTS

    def __post_init__(self):
        if self.dt <= 0.0 or self.dt > MAX_DT:
            raise ValueError(f"dt must be in (0, {MAX_DT}] ns, got {self.dt}")
        for name in ("T1_v", "T2_s"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.kappa_z < 0.0:
            raise ValueError("kappa_z must be nonnegative")

    def with_q_link(self, db_par: float) -> "SimParams":
        """Return a copy with ``db_par`` set and ``db_perp = Q * db_par``."""
        if db_par <= 0.0:
            raise ValueError("db_par must be positive")
        return replace(self, db_par=db_par, db_perp=self.Q * db_par)

    @property
    def q_link_consistent(self) -> bool:
        return abs(self.db_perp - self.Q * self.db_par) <= 1e-12 * abs(self.db_perp)
