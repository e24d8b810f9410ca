"""Lindblad propagation of the 4x4 valley (x) spin density matrix.

One step applies Strang splitting: an exact Hamiltonian half-step
exponential on each side of a first-order dissipative update with the
valley relaxation jump (rate 1/T1_v) and spin dephasing on sigma_z
(rate 1/T2_s).  The dissipative rates per step are of order 1e-5, so
the first-order treatment is far below the trace-drift budget; the
scheme as a whole is second-order in dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import engine
from .errors import NumericalFailureError
from .landscape import LandscapeProfile
from .model import SZ4, hamiltonian_at, jump_operator_valley, local_valley_frame
from .params import SimParams
from .pulse import DiscretizedTrajectory

#: (jump construction, dissipator form) defaults
DEFAULT_JUMP_MODE = "true-lowering"
DEFAULT_DISS_FORM = "standard"

#: Local-valley-excitation diagnostic is recorded every this many steps.
RECORD_STRIDE = 100


@dataclass(frozen=True)
class DensityMatrix:
    """Validated 4x4 density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian to 1e-12")
        if abs(np.trace(m).real - 1.0) > 1e-12 or abs(np.trace(m).imag) > 1e-12:
            raise ValueError("density matrix trace differs from 1 by more than 1e-12")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def from_ket(ket: np.ndarray) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return DensityMatrix(np.outer(ket, ket.conj()))


def _result_matrix(raw: np.ndarray) -> tuple[DensityMatrix, float]:
    """Validated matrix plus its trace drift, removing float-level residue."""
    tr = complex(np.trace(raw))
    drift = abs(tr - 1.0)
    clean = 0.5 * (raw + raw.conj().T)
    clean = clean / np.trace(clean).real
    return DensityMatrix(clean), drift


@dataclass(frozen=True)
class EvolutionResult:
    rho_final: DensityMatrix
    valley_excitation_max: float
    trace_drift: float
    step_count: int

    def __post_init__(self):
        if not 0.0 <= self.valley_excitation_max <= 1.0 + 1e-9:
            raise ValueError("valley_excitation_max outside [0, 1]")
        if self.trace_drift >= 1e-7:
            raise NumericalFailureError(
                f"trace drift {self.trace_drift:.3e} exceeds the 1e-7 budget")


def _dissipator_mode(dissipator_mode):
    if dissipator_mode is None:
        return DEFAULT_JUMP_MODE, DEFAULT_DISS_FORM
    jump_mode, diss_form = dissipator_mode
    if jump_mode not in ("true-lowering", "paper-literal"):
        raise ValueError(f"unknown jump mode {jump_mode!r}")
    if diss_form not in ("standard", "paper-literal"):
        raise ValueError(f"unknown dissipator form {diss_form!r}")
    return jump_mode, diss_form


def step(rho: DensityMatrix, x: float, dt: float, landscape: LandscapeProfile,
         p: SimParams, dissipator_mode=None) -> DensityMatrix:
    """Advance one piecewise-constant Lindblad step at position ``x``."""
    jump_mode, diss_form = _dissipator_mode(dissipator_mode)
    landscape.check_range(x)
    final, _, _ = engine.evolve_states(
        rho.matrix, np.asarray([x]), dt, landscape, p,
        jump_mode=jump_mode, diss_form=diss_form, record_stride=1)
    return DensityMatrix(final)


def _valley_excitation(rhos: np.ndarray, xs: np.ndarray,
                       landscape: LandscapeProfile) -> float:
    """Max population of the instantaneous local valley excited state."""
    best = 0.0
    for rho, x in zip(rhos, xs):
        _, excited = local_valley_frame(landscape, float(x))
        proj = np.kron(np.outer(excited, excited.conj()), np.eye(2))
        pop = float(np.real(np.trace(proj @ rho)))
        best = max(best, pop)
    return min(best, 1.0)


def evolve(rho0: DensityMatrix, traj: DiscretizedTrajectory,
           landscape: LandscapeProfile, p: SimParams,
           dissipator_mode=None) -> EvolutionResult:
    """Propagate ``rho0`` along the trajectory; records diagnostics."""
    jump_mode, diss_form = _dissipator_mode(dissipator_mode)
    if abs(traj.dt - p.dt) > 1e-15:
        raise ValueError("trajectory dt differs from the parameter set dt")
    landscape.check_range(traj.positions)
    final, snaps, xs = engine.evolve_states(
        rho0.matrix, traj.positions, traj.dt, landscape, p,
        jump_mode=jump_mode, diss_form=diss_form, record_stride=RECORD_STRIDE)
    rho_final, drift = _result_matrix(final)
    return EvolutionResult(
        rho_final=rho_final,
        valley_excitation_max=_valley_excitation(snaps, xs, landscape),
        trace_drift=drift,
        step_count=traj.n_steps)


def evolve_batch(rho0_set, traj: DiscretizedTrajectory,
                 landscape: LandscapeProfile, p: SimParams,
                 dissipator_mode=None):
    """Propagate several initial states along one trajectory."""
    jump_mode, diss_form = _dissipator_mode(dissipator_mode)
    if abs(traj.dt - p.dt) > 1e-15:
        raise ValueError("trajectory dt differs from the parameter set dt")
    landscape.check_range(traj.positions)
    batch = np.stack([r.matrix for r in rho0_set])
    final, snaps, xs = engine.evolve_states(
        batch, traj.positions, traj.dt, landscape, p,
        jump_mode=jump_mode, diss_form=diss_form, record_stride=RECORD_STRIDE)
    results = []
    for i in range(batch.shape[0]):
        rho_final, drift = _result_matrix(final[i])
        results.append(EvolutionResult(
            rho_final=rho_final,
            valley_excitation_max=_valley_excitation(snaps[:, i], xs, landscape),
            trace_drift=drift,
            step_count=traj.n_steps))
    return results


def dense_oracle_step(rho: DensityMatrix, x: float, dt: float,
                      landscape: LandscapeProfile, p: SimParams,
                      dissipator_mode=None) -> DensityMatrix:
    """Exact 16x16 Liouvillian exponential for one step.  Test oracle only.

    Uses row-major vectorization, vec(A rho B) = (A kron B^T) vec(rho).
    """
    jump_mode, diss_form = _dissipator_mode(dissipator_mode)
    H = hamiltonian_at(x, landscape, p)
    L2 = jump_operator_valley(landscape, x, mode=jump_mode)
    L = np.kron(L2, np.eye(2))
    I4 = np.eye(4)

    def lmul(A):
        return np.kron(A, I4)

    def rmul(B):
        return np.kron(I4, B.T)

    c = p.constants
    liouv = (-1j / c.hbar) * (lmul(H) - rmul(H))
    if diss_form == "paper-literal":
        M = L @ L.conj().T
    else:
        M = L.conj().T @ L
    liouv = liouv + (1.0 / p.T1_v) * (
        np.kron(L, L.conj()) - 0.5 * (lmul(M) + rmul(M)))
    liouv = liouv + (1.0 / p.T2_s) * (np.kron(SZ4, SZ4.conj()) - np.kron(I4, I4))

    vec = scipy.linalg.expm(liouv * dt) @ rho.matrix.reshape(16)
    out = vec.reshape(4, 4)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out / np.trace(out).real)
