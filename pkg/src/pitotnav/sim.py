"""Synthetic truth and sensor generation, plus the Monte-Carlo harness.

Trajectories are built from closed-form attitude/air-velocity profiles:
the angular velocity and specific acceleration stored in the trace are the
exact inputs that reproduce the prescribed motion, so the trace satisfies
the model kinematics pointwise (no integration error).  Traces are
generated on a dense grid (an oversample factor above the IMU rate) and
sensors are decimated from it.

The catalog deliberately includes excitation-poor cases (level cruise with
a single probe) alongside persistently exciting ones (banked turn,
yaw-pitch weave, tumbling) so the observability diagnostics can be
exercised in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cascade
from .cascade import (ImuSample, InitialConditions, MagSample, ObserverConfig,
                      PitotSample)
from .errors import TrajectoryError
from .model import GRAVITY
from .so3 import exp_so3, random_rotation

TRAJECTORY_KINDS = ("level-cruise", "banked-turn", "yaw-pitch-weave", "tumbling")

_ANTIPODAL = np.diag([1.0, -1.0, -1.0])


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------


@dataclass
class TrajectorySpec:
    """Parametric flight profile.

    ``air_velocity`` is the constant body-frame air velocity (m/s); keep its
    lateral component zero when flying with the zero-sideslip
    pseudo-measurement enabled, as a coordinated aircraft would.
    Angles in rad, rates in rad/s.
    """

    kind: str = "banked-turn"
    duration: float = 60.0
    air_velocity: tuple = (21.0, 0.0, 1.8)
    yaw_rate: float = 0.2
    bank: float = np.pi / 6
    pitch: float = 0.0
    pitch_amplitude: float = 0.15
    pitch_period: float = 10.0
    tumble_rate: tuple = (0.35, -0.25, 0.45)
    yaw0: float = 0.0

    def validate(self) -> None:
        if self.kind not in TRAJECTORY_KINDS:
            raise TrajectoryError(
                f"unknown trajectory kind {self.kind!r}; expected one of {TRAJECTORY_KINDS}")
        if not self.duration > 0.0:
            raise TrajectoryError(f"duration must be positive, got {self.duration}")
        va = np.asarray(self.air_velocity, dtype=np.float64)
        if va.shape != (3,) or not np.all(np.isfinite(va)):
            raise TrajectoryError("air_velocity must be a finite 3-vector")
        if np.linalg.norm(va) <= 0.0:
            raise TrajectoryError("air_velocity must be nonzero (vehicle must fly)")
        for name in ("yaw_rate", "bank", "pitch", "pitch_amplitude", "yaw0"):
            if not np.isfinite(getattr(self, name)):
                raise TrajectoryError(f"{name} must be finite")
        if self.kind == "yaw-pitch-weave" and not self.pitch_period > 0.0:
            raise TrajectoryError(f"pitch_period must be positive, got {self.pitch_period}")


@dataclass
class SensorNoiseSpec:
    """Sensor noise levels; all default to zero (noise-free streams).

    ``gyro_density`` and ``accel_density`` are white-noise densities
    (rad/s/sqrt(Hz), m/s^2/sqrt(Hz)); per-sample sigma is density*sqrt(rate).
    ``pitot_var`` is the per-probe measurement variance in (m/s)^2 and
    ``mag_sigma`` the std (rad) of a random small rotation applied to the
    body magnetic direction (keeps it unit norm).
    """

    gyro_density: float = 0.0
    accel_density: float = 0.0
    pitot_var: float = 0.0
    mag_sigma: float = 0.0

    def validate(self) -> None:
        for name in ("gyro_density", "accel_density", "pitot_var", "mag_sigma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0.0):
                raise TrajectoryError(f"{name} must be a nonnegative number, got {v}")


@dataclass(frozen=True)
class SensorRates:
    """Sampling rates (Hz); each must divide the truth-trace rate."""

    imu: float = 250.0
    pitot: float = 50.0
    mag: float = 10.0


@dataclass
class TruthTrace:
    """Dense ground-truth time series.

    Arrays over n samples: attitude ``R`` (n,3,3), body air velocity ``V_a``
    (n,3), tilt ``z = R^T e3`` (n,3), body angular velocity ``omega`` (n,3),
    specific acceleration ``accel`` (n,3), inertial wind ``wind`` (n,3).
    """

    t: np.ndarray
    R: np.ndarray
    V_a: np.ndarray
    z: np.ndarray
    omega: np.ndarray
    accel: np.ndarray
    wind: np.ndarray
    rate: float
    g: float = GRAVITY

    def __len__(self) -> int:
        return len(self.t)


# ---------------------------------------------------------------------------
# Truth generation
# ---------------------------------------------------------------------------


def _rotation_zyx_arrays(yaw, pitch, roll) -> np.ndarray:
    """Vectorized body-to-inertial DCM from ZYX Euler angle arrays."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    n = len(cy)
    R = np.empty((n, 3, 3))
    R[:, 0, 0] = cy * cp
    R[:, 0, 1] = cy * sp * sr - sy * cr
    R[:, 0, 2] = cy * sp * cr + sy * sr
    R[:, 1, 0] = sy * cp
    R[:, 1, 1] = sy * sp * sr + cy * cr
    R[:, 1, 2] = sy * sp * cr - cy * sr
    R[:, 2, 0] = -sp
    R[:, 2, 1] = cp * sr
    R[:, 2, 2] = cp * cr
    return R


def _body_rates_zyx(yaw, pitch, roll, yaw_dot, pitch_dot, roll_dot) -> np.ndarray:
    """Body angular velocity from ZYX Euler angles and their rates."""
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    omega = np.empty((len(yaw), 3))
    omega[:, 0] = roll_dot - yaw_dot * sp
    omega[:, 1] = pitch_dot * cr + yaw_dot * cp * sr
    omega[:, 2] = -pitch_dot * sr + yaw_dot * cp * cr
    return omega


def generate_truth(spec: TrajectorySpec, wind=(0.0, 0.0, 0.0), seed=None,
                   imu_rate: float = 250.0, oversample: int = 10,
                   wind_drift: tuple | None = None, g: float = GRAVITY) -> TruthTrace:
    """Generate a kinematically consistent truth trace for a trajectory spec.

    Args:
        wind: constant inertial wind vector (m/s).
        wind_drift: optional ``(sigma, tau)`` enabling a first-order
            Gauss-Markov wind drift around the constant value; the induced
            unmodeled disturbance is folded into the stored specific
            acceleration so the IMU sees what a real one would.
        seed: used only by the wind drift.
    """
    spec.validate()
    rate = float(imu_rate) * int(oversample)
    n = int(round(spec.duration * rate)) + 1
    t = np.arange(n) / rate
    zeros = np.zeros(n)

    if spec.kind == "level-cruise":
        yaw = np.full(n, spec.yaw0)
        pitch = np.full(n, spec.pitch)
        roll = zeros
        R = _rotation_zyx_arrays(yaw, pitch, roll)
        omega = np.zeros((n, 3))
    elif spec.kind == "banked-turn":
        yaw = spec.yaw0 + spec.yaw_rate * t
        pitch = np.full(n, spec.pitch)
        roll = np.full(n, spec.bank)
        R = _rotation_zyx_arrays(yaw, pitch, roll)
        omega = _body_rates_zyx(yaw, pitch, roll,
                                np.full(n, spec.yaw_rate), zeros, zeros)
    elif spec.kind == "yaw-pitch-weave":
        yaw = spec.yaw0 + spec.yaw_rate * t
        w = 2.0 * np.pi / spec.pitch_period
        pitch = spec.pitch + spec.pitch_amplitude * np.sin(w * t)
        pitch_dot = spec.pitch_amplitude * w * np.cos(w * t)
        roll = np.full(n, spec.bank)
        R = _rotation_zyx_arrays(yaw, pitch, roll)
        omega = _body_rates_zyx(yaw, pitch, roll,
                                np.full(n, spec.yaw_rate), pitch_dot, zeros)
    else:  # tumbling: constant body angular velocity
        w_vec = np.asarray(spec.tumble_rate, dtype=np.float64)
        w_norm = np.linalg.norm(w_vec)
        if w_norm <= 0.0:
            raise TrajectoryError("tumble_rate must be nonzero")
        R0 = _rotation_zyx_arrays(np.array([spec.yaw0]), np.array([spec.pitch]),
                                  np.array([0.0]))[0]
        axis = w_vec / w_norm
        K = np.array([[0.0, -axis[2], axis[1]],
                      [axis[2], 0.0, -axis[0]],
                      [-axis[1], axis[0], 0.0]])
        K2 = K @ K
        ang = w_norm * t
        # R(t) = R0 (I + sin(a) K + (1 - cos(a)) K^2), fixed rotation axis
        incr = (np.eye(3)[None] + np.sin(ang)[:, None, None] * K[None]
                + (1.0 - np.cos(ang))[:, None, None] * K2[None])
        R = R0 @ incr
        omega = np.tile(w_vec, (n, 1))

    z = R[:, 2, :].copy()  # R^T e3 is the third row of R
    V_a = np.tile(np.asarray(spec.air_velocity, dtype=np.float64), (n, 1))
    accel = np.cross(omega, V_a) - g * z

    wind_arr = np.tile(np.asarray(wind, dtype=np.float64), (n, 1))
    if wind_drift is not None:
        sigma, tau = wind_drift
        rng = np.random.default_rng(seed)
        dt = 1.0 / rate
        dev = np.zeros(3)
        devs = np.empty((n, 3))
        for i in range(n):
            devs[i] = dev
            dev = dev - (dev / tau) * dt + sigma * np.sqrt(dt) * rng.standard_normal(3)
        wind_arr = wind_arr + devs
        # unmodeled wind acceleration enters the specific force the IMU sees
        wdot = np.gradient(wind_arr, dt, axis=0)
        accel = accel + np.einsum("nij,nj->ni", R.transpose(0, 2, 1), wdot)

    return TruthTrace(t=t, R=R, V_a=V_a, z=z, omega=omega, accel=accel,
                      wind=wind_arr, rate=rate, g=g)


# ---------------------------------------------------------------------------
# Sensor synthesis
# ---------------------------------------------------------------------------


def _decimation_step(trace_rate: float, sensor_rate: float, name: str) -> int:
    step = trace_rate / sensor_rate
    if abs(step - round(step)) > 1e-9 or step < 1:
        raise ValueError(
            f"{name} rate {sensor_rate} Hz must divide the trace rate {trace_rate} Hz")
    return int(round(step))


def synthesize_sensors(trace: TruthTrace, noise: SensorNoiseSpec | None = None,
                       rates: SensorRates | None = None, seed: int = 0,
                       axes=((1.0, 0.0, 0.0),),
                       mag_inertial=cascade._DEFAULT_MAG_INERTIAL) -> list:
    """Decimate a truth trace into a merged, time-sorted sensor stream.

    Pitot rows carry one projection per physical probe axis; the
    zero-sideslip pseudo-measurement is an observer-side construct and is
    never synthesized.  With zero noise the samples equal the exact model
    outputs at the sample times.
    """
    noise = SensorNoiseSpec() if noise is None else noise
    noise.validate()
    rates = SensorRates() if rates is None else rates
    rng = np.random.default_rng(seed)
    axes = [np.asarray(b, dtype=np.float64) for b in axes]
    m_i = np.asarray(mag_inertial, dtype=np.float64)

    imu_idx = np.arange(0, len(trace), _decimation_step(trace.rate, rates.imu, "imu"))
    pitot_idx = np.arange(0, len(trace), _decimation_step(trace.rate, rates.pitot, "pitot"))
    mag_idx = np.arange(0, len(trace), _decimation_step(trace.rate, rates.mag, "mag"))

    sigma_gyro = noise.gyro_density * np.sqrt(rates.imu)
    sigma_accel = noise.accel_density * np.sqrt(rates.imu)
    gyro = trace.omega[imu_idx]
    accel = trace.accel[imu_idx]
    if sigma_gyro > 0.0:
        gyro = gyro + sigma_gyro * rng.standard_normal(gyro.shape)
    if sigma_accel > 0.0:
        accel = accel + sigma_accel * rng.standard_normal(accel.shape)

    pitot_vals = np.column_stack([trace.V_a[pitot_idx] @ b for b in axes])
    if noise.pitot_var > 0.0:
        pitot_vals = pitot_vals + np.sqrt(noise.pitot_var) * rng.standard_normal(pitot_vals.shape)

    m_body = np.einsum("nij,j->ni", trace.R[mag_idx].transpose(0, 2, 1), m_i)
    if noise.mag_sigma > 0.0:
        for i in range(len(m_body)):
            m_body[i] = exp_so3(noise.mag_sigma * rng.standard_normal(3)) @ m_body[i]

    stream = []
    for i, j in enumerate(imu_idx):
        stream.append(ImuSample(t=float(trace.t[j]), accel=accel[i], gyro=gyro[i]))
    for i, j in enumerate(pitot_idx):
        stream.append(PitotSample(t=float(trace.t[j]), values=pitot_vals[i]))
    for i, j in enumerate(mag_idx):
        stream.append(MagSample(t=float(trace.t[j]), m_body=m_body[i]))
    order = {ImuSample: 0, PitotSample: 1, MagSample: 2}
    stream.sort(key=lambda s: (s.t, order[type(s)]))
    return stream


# ---------------------------------------------------------------------------
# Monte-Carlo convergence harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    index: int
    convergence_time: float | None
    terminal_att_err: float
    terminal_tilt_err: float
    terminal_air_vel_err: float


@dataclass
class MonteCarloResult:
    threshold: float
    trials: list = field(default_factory=list)

    @property
    def n_converged(self) -> int:
        return sum(1 for tr in self.trials if tr.convergence_time is not None)

    def all_converged(self) -> bool:
        return self.n_converged == len(self.trials)


def monte_carlo_convergence(n_trials: int, spec: TrajectorySpec | None = None,
                            config: ObserverConfig | None = None, seed: int = 0,
                            noise: SensorNoiseSpec | None = None,
                            threshold: float = 1e-3,
                            init_velocity_sigma: float = 10.0) -> MonteCarloResult:
    """Run the cascade from random initial attitudes and report convergence.

    Each trial draws the initial attitude estimate uniformly on SO(3) (its
    tilt estimate consistent with it) and a Gaussian initial air-velocity
    estimate, then runs the full cascade on the same synthetic stream.
    Convergence time is the first time the attitude error
    ``trace(I - R_hat R^T)`` stays below ``threshold``.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    spec = TrajectorySpec() if spec is None else spec
    config = ObserverConfig() if config is None else config
    truth = generate_truth(spec, imu_rate=1.0 / config.ts)
    stream = synthesize_sensors(truth, noise=noise, seed=seed,
                                axes=config.pitot.axes,
                                mag_inertial=config.mag_inertial,
                                rates=SensorRates(imu=1.0 / config.ts))
    rng = np.random.default_rng(seed)
    result = MonteCarloResult(threshold=threshold)
    for i in range(n_trials):
        R0 = random_rotation(rng)
        init = InitialConditions(
            air_velocity=rng.normal(0.0, init_velocity_sigma, 3),
            attitude=R0)
        outputs = cascade.run(stream, config, init)
        ev = cascade.evaluate(outputs, truth)
        result.trials.append(TrialResult(
            index=i,
            convergence_time=ev.convergence_time("att", threshold),
            terminal_att_err=float(ev.att_err[-1]),
            terminal_tilt_err=float(ev.tilt_err[-1]),
            terminal_air_vel_err=float(ev.air_vel_err[-1])))
    return result


def equilibrium_probe(spec: TrajectorySpec | None = None,
                      config: ObserverConfig | None = None,
                      perturbation: float = 0.0, perturb_axis=None, seed: int = 0):
    """Run the cascade seeded on (or near) the antipodal equilibrium.

    The initial attitude estimate is the truth rotated by pi about the
    body x-axis and the initial filter state is exact, which places the
    error pair exactly on the unstable equilibrium set of the attitude
    stage.  ``perturbation`` (rad) optionally displaces the attitude seed
    by a small rotation, about ``perturb_axis`` when given and a random
    axis otherwise.  Returns the evaluation against truth.
    """
    spec = TrajectorySpec() if spec is None else spec
    config = ObserverConfig() if config is None else config
    truth = generate_truth(spec, imu_rate=1.0 / config.ts)
    stream = synthesize_sensors(truth, seed=seed, axes=config.pitot.axes,
                                mag_inertial=config.mag_inertial,
                                rates=SensorRates(imu=1.0 / config.ts))
    R0 = _ANTIPODAL @ truth.R[0]
    if perturbation > 0.0:
        if perturb_axis is None:
            rng = np.random.default_rng(seed)
            xi = rng.standard_normal(3)
        else:
            xi = np.asarray(perturb_axis, dtype=np.float64)
        xi = xi * (perturbation / np.linalg.norm(xi))
        R0 = exp_so3(xi) @ R0
    init = InitialConditions(air_velocity=truth.V_a[0].copy(),
                             attitude=R0, tilt=truth.z[0].copy())
    outputs = cascade.run(stream, config, init)
    return cascade.evaluate(outputs, truth)
