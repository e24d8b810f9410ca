"""Operator algebra and Hamiltonian assembly for the valley (x) spin system.

Basis ordering is {|+k_z>, |-k_z>} (x) {|0>, |1>}, i.e. index = 2*v + s.
The Hamiltonian has four terms: Zeeman, EDSR drive, valley coupling and the
effective spin-valley ZZ interaction.

Drive convention: the transverse term enters as ``g * mu_B * db_perp * x``
on sigma_x (full gradient coupling).  With this normalization a resonant
sinusoid of amplitude x0 nutates the spin at the cyclic Rabi frequency
``g mu_B db_perp x0 / h`` and flips it in exactly the analytical gate time
``pi hbar / (g mu_B db_perp x0)``, keeping the closed-form gate-time and
Rabi-frequency expressions mutually consistent.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateValleyError
from .landscape import LandscapeProfile
from .params import SimParams

# Pauli matrices
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# Spin operators on the 4-level space (valley (x) spin)
SZ4 = np.kron(IDENTITY_2, SIGMA_Z)
SX4 = np.kron(IDENTITY_2, SIGMA_X)
# Valley operators
TX4 = np.kron(SIGMA_X, IDENTITY_2)
TY4 = np.kron(SIGMA_Y, IDENTITY_2)


def hamiltonian_at(x: float, landscape: LandscapeProfile, p: SimParams) -> np.ndarray:
    """Full 4x4 Hamiltonian at displacement ``x`` (nm), in meV."""
    landscape.check_range(x)
    c = p.constants
    dr, di = landscape.delta_at(x, check=False)
    dr, di = float(dr), float(di)

    H = 0.5 * c.g * c.mu_B * p.B_z * SZ4
    H = H + c.g * c.mu_B * p.db_perp * x * SX4
    H = H + dr * TX4 + di * TY4

    if p.kappa_z != 0.0:
        mag = math.hypot(dr, di)
        if mag == 0.0:
            cos_phi, sin_phi = 1.0, 0.0
        else:
            cos_phi, sin_phi = dr / mag, di / mag
        tau_tilde_z = cos_phi * TX4 + sin_phi * TY4
        H = H - p.kappa_z * (tau_tilde_z @ SZ4)
    return H


def valley_splitting(landscape: LandscapeProfile, x) -> np.ndarray:
    """E_V(x) = 2 |Delta(x)| in meV."""
    landscape.check_range(x)
    return landscape.splitting_at(x, check=False)


def valley_phase(landscape: LandscapeProfile, x) -> np.ndarray:
    """arg Delta(x) in (-pi, pi]; defined as 0 where Delta vanishes."""
    landscape.check_range(x)
    return landscape.phase_at(x, check=False)


def local_valley_frame(landscape: LandscapeProfile, x: float):
    """Normalized (ground, excited) valley eigenvectors at ``x``.

    Ground has H_valley eigenvalue -E_V/2.  Raises if the valley sector is
    degenerate, since no local frame exists there.
    """
    ev = float(valley_splitting(landscape, x))
    if ev == 0.0:
        raise DegenerateValleyError(f"valley splitting vanishes at x={x} nm")
    phi = float(valley_phase(landscape, x))
    return _valley_frame_from_phase(phi)


def _valley_frame_from_phase(phi: float):
    ground = np.array([1.0, -np.exp(1j * phi)], dtype=complex) / math.sqrt(2.0)
    excited = np.array([1.0, np.exp(1j * phi)], dtype=complex) / math.sqrt(2.0)
    return ground, excited


def jump_operator_valley(landscape: LandscapeProfile, x: float,
                         mode: str = "true-lowering") -> np.ndarray:
    """2x2 valley relaxation jump operator at ``x``.

    ``true-lowering`` builds |ground><excited| from the local valley frame.
    ``paper-literal`` returns the Hermitian matrix
    [[1, e^{-i phi}], [e^{i phi}, -1]] (eigenvalues +-sqrt(2)), retained for
    comparison because the two readings are not equivalent.
    """
    landscape.check_range(x)
    phi = float(landscape.phase_at(x, check=False))
    return jump_operator_from_phase(phi, mode)


def jump_operator_from_phase(phi: float, mode: str = "true-lowering") -> np.ndarray:
    if mode == "paper-literal":
        return np.array([[1.0, np.exp(-1j * phi)],
                         [np.exp(1j * phi), -1.0]], dtype=complex)
    if mode == "true-lowering":
        ground, excited = _valley_frame_from_phase(phi)
        return np.outer(ground, excited.conj())
    raise ValueError(f"unknown jump operator mode {mode!r}")


# -- closed-form frequencies and times ---------------------------------------

def larmor_frequency(p: SimParams) -> float:
    """Cyclic Larmor frequency, GHz."""
    c = p.constants
    return c.g * c.mu_B * p.B_z / c.h


def rabi_frequency(p: SimParams, x0: float) -> float:
    """Cyclic Rabi (nutation) frequency for drive amplitude ``x0`` nm, GHz."""
    if x0 < 0:
        raise ValueError("x0 must be nonnegative")
    c = p.constants
    return c.g * c.mu_B * p.db_perp * x0 / c.h


def generalized_rabi(p: SimParams, x0: float, delta: float) -> float:
    """Detuned (generalized) Rabi frequency sqrt(delta^2 + f_Rabi^2).

    ``delta`` is the cyclic detuning drive-frequency minus Larmor frequency,
    GHz; the combination is done on cyclic quantities throughout.
    """
    return math.hypot(delta, rabi_frequency(p, x0))


def analytical_gate_time(p: SimParams, x0: float) -> float:
    """pi-rotation gate time for a resonant sinusoid of amplitude x0, ns."""
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    c = p.constants
    return math.pi * c.hbar / (c.g * c.mu_B * p.db_perp * x0)


def analytical_amplitude(p: SimParams, Tg: float) -> float:
    """Drive amplitude whose analytical gate time equals ``Tg`` ns, in nm."""
    if Tg <= 0:
        raise ValueError("Tg must be positive")
    c = p.constants
    return math.pi * c.hbar / (c.g * c.mu_B * p.db_perp * Tg)


def t2_star(p: SimParams) -> float:
    """Inhomogeneous dephasing time from charge noise, ns."""
    if p.db_par <= 0:
        raise ValueError("db_par must be positive")
    if p.dx_rms <= 0:
        raise ValueError("dx_rms must be positive")
    c = p.constants
    return 2.0 * c.h * math.sqrt(math.log(2.0)) / (
        math.pi * c.g * c.mu_B * p.db_par * p.dx_rms)
