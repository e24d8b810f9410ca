"""Spin channel reconstruction and average gate fidelity.

The spin channel is rebuilt by linearity from four propagated input states,
after tracing out the valley.  The comparison unitary is U = U_R U_G where
U_R = exp(-i Omega_R Tg sigma_z / 2) accounts for free Larmor precession
(including the kappa_z frame shift) over the gate, so that an idle electron
realizes the identity gate in the rotating frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SingularReconstructionError
from .landscape import LandscapeProfile
from .model import SIGMA_Y, SIGMA_Z, local_valley_frame
from .params import SimParams
from .propagator import DensityMatrix, evolve_batch
from .pulse import ControlVector, upsample

#: Default tomography set |0>, |1>, |+>, |+i> as kets.
TOMOGRAPHY_KETS = (
    np.array([1.0, 0.0], dtype=complex),
    np.array([0.0, 1.0], dtype=complex),
    np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0),
)

#: pi rotation about the y axis, exp(-i pi sigma_y / 2).
Y_PI = scipy.linalg.expm(-0.5j * np.pi * SIGMA_Y)


@dataclass(frozen=True)
class GateTarget:
    """Target gate plus the rotating-frame bookkeeping needed to score it."""

    U_G: np.ndarray            # 2x2 unitary
    Omega_R: float             # angular frame precession rate, rad/ns
    Tg: float                  # ns

    def __post_init__(self):
        U = np.asarray(self.U_G, dtype=complex)
        if U.shape != (2, 2):
            raise ValueError("U_G must be 2x2")
        if np.max(np.abs(U.conj().T @ U - np.eye(2))) > 1e-12:
            raise ValueError("U_G is not unitary to 1e-12")
        if self.Omega_R < 0:
            raise ValueError("Omega_R must be nonnegative")
        object.__setattr__(self, "U_G", U)


def default_target(p: SimParams, Tg: float, U_G: np.ndarray = Y_PI) -> GateTarget:
    """Target with the frame rate hbar*Omega_R = g mu_B B_z + 2 kappa_z."""
    c = p.constants
    omega = (c.g * c.mu_B * p.B_z + 2.0 * p.kappa_z) / c.hbar
    return GateTarget(U_G=U_G, Omega_R=omega, Tg=Tg)


@dataclass(frozen=True)
class FidelityReport:
    F_ent: float
    F_avg: float
    infidelity: float
    valley_excitation_max: float = 0.0

    def __post_init__(self):
        if not -0.25 - 1e-12 <= self.F_ent <= 1.0 + 1e-12:
            raise ValueError("F_ent outside [-0.25, 1]")
        if abs(self.F_avg - (2.0 * self.F_ent + 1.0) / 3.0) > 1e-12:
            raise ValueError("F_avg inconsistent with F_ent")
        if abs(self.infidelity - (1.0 - self.F_avg)) > 1e-12:
            raise ValueError("infidelity inconsistent with F_avg")

    @staticmethod
    def from_f_ent(F_ent: float, valley_excitation_max: float = 0.0) -> "FidelityReport":
        F_avg = (2.0 * F_ent + 1.0) / 3.0
        return FidelityReport(F_ent=F_ent, F_avg=F_avg,
                              infidelity=1.0 - F_avg,
                              valley_excitation_max=valley_excitation_max)


@dataclass(frozen=True)
class SpinChannel:
    """Linear map on 2x2 operators, stored row-major: vec(E(X)) = M vec(X)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("channel matrix must be 4x4")
        object.__setattr__(self, "matrix", m)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        return (self.matrix @ X.reshape(4)).reshape(2, 2)

    @staticmethod
    def from_unitary(U: np.ndarray) -> "SpinChannel":
        U = np.asarray(U, dtype=complex)
        return SpinChannel(np.kron(U, U.conj()))

    def trace_preservation_defect(self) -> float:
        defect = 0.0
        for k in range(4):
            E = np.zeros(4, dtype=complex)
            E[k] = 1.0
            out = (self.matrix @ E).reshape(2, 2)
            defect = max(defect, abs(np.trace(out) - np.trace(E.reshape(2, 2))))
        return defect


def trace_out_valley(rho4: np.ndarray) -> np.ndarray:
    """Reduced 2x2 spin state of a 4x4 valley (x) spin state."""
    rho4 = np.asarray(rho4, dtype=complex)
    return rho4[:2, :2] + rho4[2:, 2:]


def initial_batch(landscape: LandscapeProfile, x_start: float,
                  spin_kets=TOMOGRAPHY_KETS):
    """Valley local ground state at ``x_start`` paired with each spin ket."""
    ground, _ = local_valley_frame(landscape, x_start)
    return [DensityMatrix.from_ket(np.kron(ground, s)) for s in spin_kets]


def spin_channel_from_batch(results, initial_spin_states=None) -> SpinChannel:
    """Reconstruct the spin channel from propagated tomography states.

    ``results`` are EvolutionResults (or bare 4x4 arrays) for inputs whose
    spin parts are ``initial_spin_states`` (kets or 2x2 density matrices).
    """
    if initial_spin_states is None:
        initial_spin_states = TOMOGRAPHY_KETS
    if len(results) != len(initial_spin_states):
        raise ValueError("need one result per initial spin state")

    ins = []
    for s in initial_spin_states:
        s = np.asarray(s, dtype=complex)
        ins.append(np.outer(s, s.conj()) if s.ndim == 1 else s)
    A = np.stack([r.reshape(4) for r in ins], axis=1)
    if np.linalg.cond(A) > 1e8:
        raise SingularReconstructionError(
            "initial spin states are not tomographically complete")

    outs = []
    for r in results:
        rho4 = r if isinstance(r, np.ndarray) else r.rho_final.matrix
        outs.append(trace_out_valley(rho4))
    Y = np.stack([o.reshape(4) for o in outs], axis=1)
    return SpinChannel(Y @ np.linalg.inv(A))


def counter_rotation(target: GateTarget) -> np.ndarray:
    """R = exp(+i Omega_R Tg sigma_z / 2), undoing free frame precession."""
    theta = 0.5 * target.Omega_R * target.Tg
    return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


def comparison_unitary(target: GateTarget) -> np.ndarray:
    """U = U_R U_G with U_R the inverse of the counter rotation."""
    return counter_rotation(target).conj().T @ target.U_G


def average_gate_fidelity(channel: SpinChannel, target: GateTarget,
                          valley_excitation_max: float = 0.0) -> FidelityReport:
    """Entanglement and average fidelity of ``channel`` against the target."""
    if channel.trace_preservation_defect() > 1e-6:
        raise ValueError("channel is not trace preserving")
    U = comparison_unitary(target)
    Ud = U.conj().T
    F = 0.0
    for i in range(2):
        for j in range(2):
            E_ij = np.zeros((2, 2), dtype=complex)
            E_ij[i, j] = 1.0
            F += (Ud @ channel.apply(E_ij) @ U)[i, j]
    F_ent = float(np.real(F)) / 4.0
    return FidelityReport.from_f_ent(F_ent, valley_excitation_max)


def evaluate_trajectory(controls: ControlVector, landscape: LandscapeProfile,
                        p: SimParams, target: GateTarget,
                        dissipator_mode=None) -> FidelityReport:
    """Full pipeline: upsample, propagate the tomography batch, score."""
    traj = upsample(controls, p.dt)
    rho0s = initial_batch(landscape, float(traj.positions[0]))
    results = evolve_batch(rho0s, traj, landscape, p,
                           dissipator_mode=dissipator_mode)
    channel = spin_channel_from_batch(results)
    vmax = max(r.valley_excitation_max for r in results)
    return average_gate_fidelity(channel, target, valley_excitation_max=vmax)
