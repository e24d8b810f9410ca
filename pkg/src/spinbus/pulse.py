"""Electron trajectories: shaping, control knots and discretization.

The optimizer works on a coarse vector of position knots (default 10 per
ns); propagation works on a fine piecewise-constant grid (default step
0.8 ps).  ``upsample`` connects the two by linear interpolation, sampling
each fine step at its midpoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_KNOT_RATE = 10.0     # knots per ns
DEFAULT_RISE_TIME = 1.0      # ns
DEFAULT_CONTROL_BOUND = 35.0  # nm


@dataclass(frozen=True)
class TrajectorySpec:
    """Shaped sinusoidal drive x(t) = G(t) * x0 * sin(2 pi omega t + phi)."""

    x0: float                 # nm
    omega: float              # cyclic drive frequency, GHz
    Tg: float                 # gate time, ns
    phi: float = 0.0          # rad
    t_r: float = DEFAULT_RISE_TIME  # ns

    def __post_init__(self):
        if self.x0 < 0:
            raise ValueError("x0 must be nonnegative")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.Tg <= 2.0 * self.t_r:
            raise ValueError("Tg must exceed twice the rise time")


def envelope(t, Tg: float, t_r: float = DEFAULT_RISE_TIME):
    """Gaussian ramp envelope: 0 at t=0 and t=Tg, flat top 1 in between.

    The ramp profile is f(u) = alpha*[exp(-u^2/2 sigma^2) - exp(-t_r^2/2 sigma^2)]
    with sigma = t_r/4 and alpha normalizing f(0) = 1.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > Tg + 1e-12):
        raise ValueError("t outside [0, Tg]")
    sigma = t_r / 4.0
    floor = math.exp(-t_r ** 2 / (2.0 * sigma ** 2))
    alpha = 1.0 / (1.0 - floor)

    def ramp(u):
        return alpha * (np.exp(-u ** 2 / (2.0 * sigma ** 2)) - floor)

    up = ramp(np.minimum(t, t_r) - t_r)
    down = ramp(np.maximum(t, Tg - t_r) - (Tg - t_r))
    out = np.where(t < t_r, up, np.where(t > Tg - t_r, down, 1.0))
    return out if out.ndim else float(out)


@dataclass
class ControlVector:
    """Optimizable trajectory knots on a uniform time grid spanning [0, Tg]."""

    knots: np.ndarray          # nm
    Tg: float                  # ns
    knot_rate: float = DEFAULT_KNOT_RATE
    bound: float = DEFAULT_CONTROL_BOUND

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        expected = knot_count(self.Tg, self.knot_rate)
        if self.knots.size != expected:
            raise ValueError(
                f"knot count {self.knots.size} != round(Tg*knot_rate) = {expected}")
        if not np.all(np.isfinite(self.knots)):
            raise ValueError("knots must be finite")
        if np.any(np.abs(self.knots) > self.bound + 1e-9):
            raise ValueError(f"knots exceed the hardware bound +-{self.bound} nm")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.Tg, self.knots.size)

    def replace_knots(self, knots: np.ndarray) -> "ControlVector":
        return ControlVector(knots=np.asarray(knots, dtype=float), Tg=self.Tg,
                             knot_rate=self.knot_rate, bound=self.bound)


def knot_count(Tg: float, knot_rate: float = DEFAULT_KNOT_RATE) -> int:
    return int(round(Tg * knot_rate))


@dataclass
class DiscretizedTrajectory:
    """Piecewise-constant positions on the fine propagation grid."""

    dt: float                  # ns
    positions: np.ndarray      # nm, one per step
    Tg: float                  # ns

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        expected = int(math.ceil(self.Tg / self.dt - 1e-9))
        if self.positions.size != expected:
            raise ValueError(
                f"step count {self.positions.size} != ceil(Tg/dt) = {expected}")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")

    @property
    def n_steps(self) -> int:
        return self.positions.size


def sinusoid_controls(spec: TrajectorySpec,
                      knot_rate: float = DEFAULT_KNOT_RATE,
                      bound: float = DEFAULT_CONTROL_BOUND) -> ControlVector:
    """Control knots of the envelope-shaped sinusoid."""
    n = knot_count(spec.Tg, knot_rate)
    t = np.linspace(0.0, spec.Tg, n)
    g = envelope(t, spec.Tg, spec.t_r)
    knots = g * spec.x0 * np.sin(2.0 * math.pi * spec.omega * t + spec.phi)
    return ControlVector(knots=knots, Tg=spec.Tg, knot_rate=knot_rate, bound=bound)


def step_midpoints(Tg: float, dt: float) -> np.ndarray:
    n = int(math.ceil(Tg / dt - 1e-9))
    return (np.arange(n) + 0.5) * dt


def upsample(controls: ControlVector, dt: float) -> DiscretizedTrajectory:
    """Sample the linear interpolant of the knots at fine-step midpoints."""
    if dt > 1.0 / controls.knot_rate + 1e-12:
        raise ValueError("dt must not exceed the knot spacing")
    t_mid = step_midpoints(controls.Tg, dt)
    positions = np.interp(t_mid, controls.times, controls.knots)
    return DiscretizedTrajectory(dt=dt, positions=positions, Tg=controls.Tg)


# -- persistence ---------------------------------------------------------------

def save_pulse(controls: ControlVector, path) -> None:
    doc = {
        "Tg_ns": controls.Tg,
        "knot_rate_per_ns": controls.knot_rate,
        "knots_nm": controls.knots.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_pulse(path) -> ControlVector:
    doc = json.loads(Path(path).read_text())
    return ControlVector(knots=np.asarray(doc["knots_nm"], dtype=float),
                         Tg=float(doc["Tg_ns"]),
                         knot_rate=float(doc["knot_rate_per_ns"]))
