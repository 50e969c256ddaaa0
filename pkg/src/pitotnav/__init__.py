"""Cascade observer for fixed-wing UAV state estimation.

A six-state Kalman filter estimates body-frame air velocity and tilt
(gravity direction in the body frame) from IMU inputs and Pitot-tube
outputs; a nonlinear SO(3) observer fuses the estimated tilt with
magnetometer directions to recover the full attitude.  The package also
ships observability diagnostics, a synthetic-flight simulator with a
Monte-Carlo harness, CSV log replay, and a CLI.
"""

from .attitude import (AttitudeGains, attitude_step, classify_rotation_error,
                       correction, mag_correction, tilt_correction)
from .cascade import (EstimatorOutput, EstimatorOutputs, EvaluationResult,
                      ImuSample, InitialConditions, MagSample, ObserverConfig,
                      PitotSample, evaluate, run)
from .errors import (AlignmentError, ConfigError, DegenerateAirspeed,
                     NumericalFailure, OrderError, ParseError, PitotNavError,
                     SchemaError, StreamOrderError, TrajectoryError)
from .logio import (ParsedLog, ReferenceTrace, RunSettings, build_settings,
                    load_settings, parse_config_file, parse_log,
                    read_estimates_csv, reconstruct_mag_reference, write_log)
from .model import (AeroAngles, GRAVITY, PitotConfig, State6, a_matrix,
                    aero_angles, air_velocity_from_angles, c_matrix,
                    continuous_dynamics, pitot_output)
from .observability import (ExcitationReport, ExcitationWindow, GramianReport,
                            excitation_average, excitation_windows, gramian,
                            transition_matrix, window_diagnostics)
from .riccati import (discretize, gain_continuous, phi_body, predict, update)
from .sim import (MonteCarloResult, SensorNoiseSpec, SensorRates,
                  TrajectorySpec, TruthTrace, equilibrium_probe,
                  generate_truth, monte_carlo_convergence, synthesize_sensors)
from .so3 import (attitude_error, euler_zyx_to_rotation, exp_so3, is_rotation,
                  project_to_so3, random_rotation, reg_projector, rotation_angle,
                  skew)

__version__ = "0.1.0"
