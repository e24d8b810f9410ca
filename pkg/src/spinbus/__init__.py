"""Simulation and optimal control of shuttling-based EDSR spin qubits."""

from .constants import CONSTANTS, PhysicalConstants
from .errors import (ConfigError, DegenerateValleyError, LandscapeRangeError,
                     MalformedLandscapeFileError, NumericalFailureError,
                     SingularReconstructionError, SpinbusError)
from .experiments import ExperimentConfig, ResultRecord, load_config, run
from .fidelity import (FidelityReport, GateTarget, SpinChannel,
                       average_gate_fidelity, counter_rotation, default_target,
                       evaluate_trajectory, spin_channel_from_batch)
from .landscape import (GeDiffusionConfig, LandscapeProfile, StepModelConfig,
                        derive_seed, flat_landscape, generate,
                        generate_ge_diffusion, generate_step_model,
                        landscape_stats, load_landscape, sample_ensemble,
                        save_landscape)
from .model import (analytical_amplitude, analytical_gate_time, hamiltonian_at,
                    jump_operator_valley, larmor_frequency, local_valley_frame,
                    rabi_frequency, t2_star, valley_phase, valley_splitting)
from .optimize import (CalibrationConfig, CalibrationResult, OptimizationConfig,
                       OptimizationTrace, bayesian_calibrate,
                       infidelity_and_gradient, optimize_trajectory)
from .params import SimParams
from .propagator import (DensityMatrix, EvolutionResult, dense_oracle_step,
                         evolve, evolve_batch, step)
from .pulse import (ControlVector, DiscretizedTrajectory, TrajectorySpec,
                    envelope, load_pulse, save_pulse, sinusoid_controls,
                    upsample)

__version__ = "0.1.0"
