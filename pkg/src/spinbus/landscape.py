"""Position-dependent intervalley coupling profiles ("valley landscapes").

Two phenomenological generators are provided.  The Ge-diffusion model draws
the complex intervalley coupling as an isotropic complex Gaussian random
field; the step model places interface miscuts by a Poisson process, with a
fixed complex phase jump across each miscut, and smooths the piecewise
profile with a Gaussian window modelling the finite electron wavefunction.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import LandscapeRangeError, MalformedLandscapeFileError, ConfigError

FORMAT_VERSION = 1

#: Valley splittings below this value count as low-valley-splitting points, meV.
LVSP_THRESHOLD = 15e-3


def _config_digest(model_tag: str, cfg_dict: dict, seed: int) -> str:
    payload = json.dumps({"model": model_tag, "cfg": cfg_dict, "seed": seed},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _cubic_coeffs(x0: float, h: float, y: np.ndarray) -> np.ndarray:
    """Not-a-knot cubic spline coefficients, (n-1, 4), low order first."""
    from scipy.interpolate import CubicSpline
    n = y.size
    xs = x0 + h * np.arange(n)
    cs = CubicSpline(xs, y)
    # cs.c is (4, n-1) highest order first
    return cs.c[::-1].T.copy()


def ppoly_eval(coeffs: np.ndarray, x0: float, h: float, x) -> np.ndarray:
    """Evaluate piecewise cubic at positions ``x`` (clamped segment index)."""
    x = np.asarray(x, dtype=float)
    n_seg = coeffs.shape[0]
    idx = np.clip(np.floor((x - x0) / h).astype(int), 0, n_seg - 1)
    u = x - (x0 + idx * h)
    c = coeffs[idx]
    return ((c[..., 3] * u + c[..., 2]) * u + c[..., 1]) * u + c[..., 0]


@dataclass
class LandscapeProfile:
    """Sampled complex intervalley coupling along the device, with cubic
    interpolation between grid points."""

    x_start: float
    spacing: float
    delta_real: np.ndarray      # meV
    delta_imag: np.ndarray      # meV
    model_tag: str = "explicit"
    seed: int = 0
    config_digest: str = ""
    _coeffs_r: np.ndarray | None = field(default=None, repr=False, compare=False)
    _coeffs_i: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.delta_real = np.asarray(self.delta_real, dtype=float)
        self.delta_imag = np.asarray(self.delta_imag, dtype=float)
        if self.delta_real.shape != self.delta_imag.shape or self.delta_real.ndim != 1:
            raise ConfigError("delta_real/delta_imag must be 1-d arrays of equal length")
        if self.delta_real.size < 2:
            raise ConfigError("landscape needs at least two grid points")
        if self.spacing <= 0:
            raise ConfigError("grid spacing must be positive")
        if not (np.all(np.isfinite(self.delta_real)) and np.all(np.isfinite(self.delta_imag))):
            raise ConfigError("landscape values must be finite")

    # -- geometry ---------------------------------------------------------

    @property
    def n_points(self) -> int:
        return self.delta_real.size

    @property
    def x_grid(self) -> np.ndarray:
        return self.x_start + self.spacing * np.arange(self.n_points)

    @property
    def x_end(self) -> float:
        return self.x_start + self.spacing * (self.n_points - 1)

    def in_range(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.x_start - 1e-9) & (x <= self.x_end + 1e-9)

    def check_range(self, x) -> None:
        if not np.all(self.in_range(x)):
            raise LandscapeRangeError(
                f"position outside landscape range [{self.x_start}, {self.x_end}] nm")

    # -- interpolation ----------------------------------------------------

    def spline_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        if self._coeffs_r is None:
            self._coeffs_r = _cubic_coeffs(self.x_start, self.spacing, self.delta_real)
            self._coeffs_i = _cubic_coeffs(self.x_start, self.spacing, self.delta_imag)
        return self._coeffs_r, self._coeffs_i

    def delta_at(self, x, check: bool = True):
        """Interpolated (delta_real, delta_imag) at ``x``, meV."""
        if check:
            self.check_range(x)
        cr, ci = self.spline_coeffs()
        return (ppoly_eval(cr, self.x_start, self.spacing, x),
                ppoly_eval(ci, self.x_start, self.spacing, x))

    def splitting_at(self, x, check: bool = True):
        """Valley splitting E_V(x) = 2|Delta(x)|, meV."""
        dr, di = self.delta_at(x, check=check)
        return 2.0 * np.hypot(dr, di)

    def phase_at(self, x, check: bool = True):
        """Valley phase arg(Delta) in (-pi, pi]; 0 at degenerate points."""
        dr, di = self.delta_at(x, check=check)
        phase = np.arctan2(di, dr)
        return np.where((dr == 0.0) & (di == 0.0), 0.0, phase)

    def recentered(self, x_center: float) -> "LandscapeProfile":
        """Shift coordinates so that ``x_center`` becomes the origin.

        Trajectories are expressed as displacements about the operating
        point, so experiments recenter the landscape before propagation.
        """
        self.check_range(x_center)
        return LandscapeProfile(
            x_start=self.x_start - x_center,
            spacing=self.spacing,
            delta_real=self.delta_real,
            delta_imag=self.delta_imag,
            model_tag=self.model_tag,
            seed=self.seed,
            config_digest=self.config_digest,
        )


# -- generators -------------------------------------------------------------

@dataclass(frozen=True)
class GeDiffusionConfig:
    length: float = 200.0              # nm
    correlation_length: float = 20.0   # nm
    mean_splitting: float = 0.088      # meV
    grid_spacing: float = 0.1          # nm

    def __post_init__(self):
        if self.correlation_length <= self.grid_spacing:
            raise ConfigError("correlation_length must exceed grid_spacing")
        if self.mean_splitting <= 0:
            raise ConfigError("mean_splitting must be positive")


@dataclass(frozen=True)
class StepModelConfig:
    length: float = 200.0              # nm
    mean_step_spacing: float = 50.0    # nm
    phase_jump_per_step: float = 2.577  # rad, 2*k0*(a/4) for the Si lattice
    base_splitting: float = 0.126      # meV, calibrated to a 100 ueV mean
                                       # center splitting over large ensembles
    dot_smoothing_width: float = 10.0  # nm
    magnitude_jitter: float = 0.15     # relative std
    grid_spacing: float = 0.1          # nm

    def __post_init__(self):
        for name in ("length", "mean_step_spacing", "base_splitting",
                     "dot_smoothing_width", "grid_spacing"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.dot_smoothing_width < self.grid_spacing:
            raise ConfigError("dot_smoothing_width must be >= grid_spacing")


def generate_ge_diffusion(cfg: GeDiffusionConfig, seed: int) -> LandscapeProfile:
    """Draw a stationary complex-Gaussian valley landscape.

    Both quadratures are independent zero-mean Gaussian fields with a
    squared-exponential correlation of length ``cfg.correlation_length`` and
    per-component std ``mean_splitting / (2*sqrt(pi/2))``, which makes the
    splitting 2|Delta| Rayleigh-distributed with the requested mean.
    """
    h = cfg.grid_spacing
    n = int(round(cfg.length / h)) + 1
    ell = cfg.correlation_length
    sigma = cfg.mean_splitting / (2.0 * math.sqrt(math.pi / 2.0))

    # White noise filtered with a Gaussian kernel of std ell/sqrt(2) has
    # exactly squared-exponential correlation exp(-d^2 / (2 ell^2)).
    s_pts = (ell / math.sqrt(2.0)) / h
    half = int(math.ceil(6.0 * s_pts))
    kernel = np.exp(-0.5 * (np.arange(-half, half + 1) / s_pts) ** 2)
    kernel /= math.sqrt(np.sum(kernel ** 2))
    pad = half

    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(2):
        w = rng.standard_normal(n + 2 * pad)
        f = fftconvolve(w, kernel, mode="same")[pad:pad + n]
        fields.append(sigma * f)

    return LandscapeProfile(
        x_start=0.0, spacing=h,
        delta_real=fields[0], delta_imag=fields[1],
        model_tag="ge-diffusion", seed=int(seed),
        config_digest=_config_digest("ge-diffusion", asdict(cfg), int(seed)),
    )


def generate_step_model(cfg: StepModelConfig, seed: int) -> LandscapeProfile:
    """Draw a step-model valley landscape.

    Miscut positions follow a Poisson process.  Between miscuts the coupling
    is constant with a jittered magnitude; across each miscut the complex
    phase jumps by ``phase_jump_per_step``.  The raw piecewise profile is
    convolved with a Gaussian of std ``dot_smoothing_width``, which produces
    the characteristic splitting dips at step edges.
    """
    h = cfg.grid_spacing
    n = int(round(cfg.length / h)) + 1
    rng = np.random.default_rng(seed)

    margin = 6.0 * cfg.dot_smoothing_width
    lo, hi = -margin, cfg.length + margin

    # Poisson process over the padded interval.
    steps = []
    pos = lo + rng.exponential(cfg.mean_step_spacing)
    while pos < hi:
        steps.append(pos)
        pos += rng.exponential(cfg.mean_step_spacing)
    steps = np.asarray(steps)

    n_pad = int(round(margin / h))
    x_pad = -margin + h * np.arange(n + 2 * n_pad)

    phase0 = rng.uniform(-math.pi, math.pi)
    seg_idx = np.searchsorted(steps, x_pad)
    n_seg = len(steps) + 1
    magnitudes = 0.5 * cfg.base_splitting * np.maximum(
        0.05, 1.0 + cfg.magnitude_jitter * rng.standard_normal(n_seg))
    phases = phase0 + cfg.phase_jump_per_step * np.arange(n_seg)

    raw = magnitudes[seg_idx] * np.exp(1j * phases[seg_idx])

    s_pts = cfg.dot_smoothing_width / h
    half = int(math.ceil(6.0 * s_pts))
    kernel = np.exp(-0.5 * (np.arange(-half, half + 1) / s_pts) ** 2)
    kernel /= np.sum(kernel)
    smooth = fftconvolve(raw, kernel, mode="same")[n_pad:n_pad + n]

    return LandscapeProfile(
        x_start=0.0, spacing=h,
        delta_real=smooth.real.copy(), delta_imag=smooth.imag.copy(),
        model_tag="step", seed=int(seed),
        config_digest=_config_digest("step", asdict(cfg), int(seed)),
    )


def derive_seed(base_seed: int, index: int) -> int:
    """Independent 64-bit substream seed for device ``index``."""
    ss = np.random.SeedSequence(entropy=(int(base_seed), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def generate(cfg, seed: int) -> LandscapeProfile:
    if isinstance(cfg, GeDiffusionConfig):
        return generate_ge_diffusion(cfg, seed)
    if isinstance(cfg, StepModelConfig):
        return generate_step_model(cfg, seed)
    raise ConfigError(f"unknown landscape config type {type(cfg)!r}")


def sample_ensemble(cfg, n: int, base_seed: int) -> list[LandscapeProfile]:
    """Generate ``n`` devices with independent, order-independent substreams."""
    if n < 1:
        raise ConfigError("ensemble size must be >= 1")
    return [generate(cfg, derive_seed(base_seed, i)) for i in range(n)]


# -- statistics --------------------------------------------------------------

@dataclass(frozen=True)
class LandscapeStats:
    center_mean: float
    center_std: float
    full_mean: float
    full_std: float
    min_splitting: float
    fraction_center_below: float
    lvsp_positions: tuple[float, ...]
    threshold: float
    n_profiles: int


def _lvsp_positions(profile: LandscapeProfile, threshold: float) -> list[float]:
    ev = profile.splitting_at(profile.x_grid, check=False)
    below = ev < threshold
    positions = []
    i = 0
    while i < len(ev):
        if below[i]:
            j = i
            while j + 1 < len(ev) and below[j + 1]:
                j += 1
            k = i + int(np.argmin(ev[i:j + 1]))
            positions.append(float(profile.x_grid[k]))
            i = j + 1
        else:
            i += 1
    return positions


def landscape_stats(profiles: LandscapeProfile | Sequence[LandscapeProfile],
                    threshold: float = LVSP_THRESHOLD) -> LandscapeStats:
    """Summary statistics of valley splittings at the device center and over
    the full length, plus positions of low-valley-splitting points."""
    if isinstance(profiles, LandscapeProfile):
        profiles = [profiles]
    profiles = list(profiles)
    if not profiles:
        raise ConfigError("landscape_stats needs at least one profile")

    centers, full_means, mins = [], [], []
    lvsps: list[float] = []
    for p in profiles:
        ev = p.splitting_at(p.x_grid, check=False)
        x_c = 0.5 * (p.x_start + p.x_end)
        centers.append(float(p.splitting_at(x_c)))
        full_means.append(float(np.mean(ev)))
        mins.append(float(np.min(ev)))
        lvsps.extend(_lvsp_positions(p, threshold))

    centers = np.asarray(centers)
    return LandscapeStats(
        center_mean=float(np.mean(centers)),
        center_std=float(np.std(centers)),
        full_mean=float(np.mean(full_means)),
        full_std=float(np.std(full_means)),
        min_splitting=float(np.min(mins)),
        fraction_center_below=float(np.mean(centers < 33e-3)),
        lvsp_positions=tuple(sorted(lvsps)),
        threshold=threshold,
        n_profiles=len(profiles),
    )


# -- persistence --------------------------------------------------------------

def save_landscape(profile: LandscapeProfile, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "model_tag": profile.model_tag,
        "seed": profile.seed,
        "config": {"digest": profile.config_digest},
        "x_grid_spacing_nm": profile.spacing,
        "x_start_nm": profile.x_start,
        "delta_real_meV": profile.delta_real.tolist(),
        "delta_imag_meV": profile.delta_imag.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_landscape(path) -> LandscapeProfile:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedLandscapeFileError(f"cannot read landscape file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise MalformedLandscapeFileError(
            f"unsupported or missing format_version in {path}")
    try:
        return LandscapeProfile(
            x_start=float(doc["x_start_nm"]),
            spacing=float(doc["x_grid_spacing_nm"]),
            delta_real=np.asarray(doc["delta_real_meV"], dtype=float),
            delta_imag=np.asarray(doc["delta_imag_meV"], dtype=float),
            model_tag=str(doc["model_tag"]),
            seed=int(doc["seed"]),
            config_digest=str(doc.get("config", {}).get("digest", "")),
        )
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise MalformedLandscapeFileError(f"malformed landscape file {path}: {exc}") from exc


def flat_landscape(splitting: float, phase: float = 0.0, length: float = 200.0,
                   spacing: float = 0.1, centered: bool = True) -> LandscapeProfile:
    """Constant-splitting landscape, handy for tests and idealized studies."""
    n = int(round(length / spacing)) + 1
    mag = 0.5 * splitting
    x_start = -length / 2.0 if centered else 0.0
    return LandscapeProfile(
        x_start=x_start, spacing=spacing,
        delta_real=np.full(n, mag * math.cos(phase)),
        delta_imag=np.full(n, mag * math.sin(phase)),
        model_tag="explicit", seed=0,
        config_digest=_config_digest("explicit", {"splitting": splitting,
                                                  "phase": phase}, 0),
    )
