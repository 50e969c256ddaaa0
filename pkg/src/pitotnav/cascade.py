"""End-to-end observer: multirate sensor scheduling and the two-stage loop.

The run loop steps at the IMU rate.  Each IMU sample triggers a filter
prediction; a Pitot sample timestamped within the step's interval
``[t_k, t_k + ts)`` triggers a measurement update producing the estimate
at the end of the interval (latest sample wins when several fall in one
step); the covariance is re-symmetrized every step.  The magnetometer
correction is recomputed whenever a magnetometer sample is available and
zero-order-held in between; the tilt fed to the attitude stage is the
estimate available at the start of the step.  The attitude stage never
feeds back into the velocity filter, so the cascade is strictly
one-directional.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import riccati
from .attitude import AttitudeGains, mag_correction
from .errors import AlignmentError, ConfigError, StreamOrderError
from .model import EPS_AIRSPEED, GRAVITY, PitotConfig, c_matrix
from .so3 import E3, check_rotation, euler_zyx_to_rotation, exp_so3, project_to_so3

# ---------------------------------------------------------------------------
# Sensor samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImuSample:
    """Specific acceleration (m/s^2) and angular velocity (rad/s) at time t (s)."""

    t: float
    accel: np.ndarray
    gyro: np.ndarray


@dataclass(frozen=True)
class PitotSample:
    """Projected air-velocity readings (m/s), one per physical probe."""

    t: float
    values: np.ndarray


@dataclass(frozen=True)
class MagSample:
    """Unit magnetic direction in the body frame.

    ``m_inertial`` optionally carries a per-sample inertial reference
    direction (used in log replay, where the reference attitude serves to
    reconstruct an equivalent inertial field); when None, the fixed
    configured direction is used.
    """

    t: float
    m_body: np.ndarray
    m_inertial: np.ndarray | None = None


# ---------------------------------------------------------------------------
# Configuration and initial conditions
# ---------------------------------------------------------------------------

_DEFAULT_PROCESS_DIAG = (0.02, 0.01, 0.01, 1e-4, 1e-4, 1e-4)
_DEFAULT_INIT_COV_DIAG = (116.6, 6.15, 3.3, 0.6, 0.6, 0.6)
_DEFAULT_INIT_AIR_VELOCITY = (10.0, 2.0, 0.3)
_DEFAULT_INIT_EULER_ZYX = (np.pi / 6, -np.pi / 18, np.pi / 9)
# North-pointing unit field with a 60 degree downward dip (NED frame).
_DEFAULT_MAG_INERTIAL = (0.5, 0.0, np.sqrt(3.0) / 2.0)


@dataclass
class ObserverConfig:
    """Everything the observer needs besides the sensor stream.

    Attributes:
        pitot: probe geometry and pseudo-measurement flag.
        pitot_var: measurement variance per physical probe, (m/s)^2.
        pseudo_var: pseudo-measurement variance; defaults to 10x pitot_var
            (sideslip fluctuates around zero even in coordinated flight).
        process_cov: (6,6) continuous-time process covariance.
        gains: attitude correction gains.
        ts: IMU sampling period, s.
        g: gravity constant, m/s^2.
        mag_inertial: unit inertial magnetic direction used when samples do
            not carry their own reference.
        joseph: use the Joseph-form covariance update.
        reproject_every: if positive, polar-project the attitude estimate
            back onto SO(3) every that many steps (float-drift repair).
    """

    pitot: PitotConfig = field(default_factory=lambda: PitotConfig(pseudo_sideslip=True))
    pitot_var: float = 1e-3
    pseudo_var: float | None = None
    process_cov: np.ndarray = field(
        default_factory=lambda: np.diag(_DEFAULT_PROCESS_DIAG))
    gains: AttitudeGains = field(default_factory=AttitudeGains)
    ts: float = 1.0 / 250.0
    g: float = GRAVITY
    mag_inertial: np.ndarray = field(
        default_factory=lambda: np.array(_DEFAULT_MAG_INERTIAL))
    joseph: bool = False
    reproject_every: int = 0

    def __post_init__(self):
        self.process_cov = np.asarray(self.process_cov, dtype=np.float64)
        self.mag_inertial = np.asarray(self.mag_inertial, dtype=np.float64)

    def measurement_cov(self) -> np.ndarray:
        """Diagonal measurement covariance, pseudo-measurement row last."""
        diag = [self.pitot_var] * self.pitot.n_probes
        if self.pitot.pseudo_sideslip:
            pseudo = 10.0 * self.pitot_var if self.pseudo_var is None else self.pseudo_var
            diag.append(pseudo)
        return np.diag(diag)

    def validate(self) -> None:
        if self.ts <= 0.0:
            raise ConfigError(f"ts must be positive, got {self.ts}")
        if self.g <= 0.0:
            raise ConfigError(f"g must be positive, got {self.g}")
        if self.pitot_var <= 0.0:
            raise ConfigError(f"pitot_var must be positive, got {self.pitot_var}")
        if self.pseudo_var is not None and self.pseudo_var <= 0.0:
            raise ConfigError(f"pseudo_var must be positive, got {self.pseudo_var}")
        S = self.process_cov
        if S.shape != (6, 6) or np.linalg.norm(S - S.T) > 1e-10:
            raise ConfigError("process_cov must be a symmetric 6x6 matrix")
        if np.linalg.eigvalsh(S)[0] <= 0.0:
            raise ConfigError("process_cov must be positive definite")
        if abs(np.linalg.norm(self.mag_inertial) - 1.0) > 1e-6:
            raise ConfigError("mag_inertial must be a unit vector")


@dataclass
class InitialConditions:
    """Initial estimates for both stages.

    The tilt defaults to ``attitude.T @ e3`` (consistent with the initial
    attitude estimate); the remaining defaults reproduce a large but
    recoverable initialization error.
    """

    air_velocity: np.ndarray = field(
        default_factory=lambda: np.array(_DEFAULT_INIT_AIR_VELOCITY))
    attitude: np.ndarray = field(
        default_factory=lambda: euler_zyx_to_rotation(*_DEFAULT_INIT_EULER_ZYX))
    tilt: np.ndarray | None = None
    covariance: np.ndarray = field(
        default_factory=lambda: np.diag(_DEFAULT_INIT_COV_DIAG))

    def __post_init__(self):
        self.air_velocity = np.asarray(self.air_velocity, dtype=np.float64)
        self.attitude = check_rotation(self.attitude, what="initial attitude")
        if self.tilt is None:
            self.tilt = self.attitude.T @ E3
        else:
            self.tilt = np.asarray(self.tilt, dtype=np.float64)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)

    def state_vector(self) -> np.ndarray:
        return np.concatenate([self.air_velocity, self.tilt])


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorOutput:
    """Single-step view of the estimator outputs."""

    t: float
    air_velocity: np.ndarray
    tilt: np.ndarray
    attitude: np.ndarray
    cov_diag: np.ndarray
    airspeed: float
    alpha: float
    beta: float

    @property
    def aero_valid(self) -> bool:
        return bool(np.isfinite(self.alpha))


class EstimatorOutputs:
    """Column-oriented estimator outputs, one row per IMU step.

    Arrays: ``t`` (n,), ``air_velocity`` (n,3), ``tilt`` (n,3),
    ``attitude`` (n,3,3), ``cov_diag`` (n,6), and the aero angles
    ``airspeed``/``alpha``/``beta`` (n,), NaN where the airspeed is too low
    for them to be meaningful.  ``meta`` records scheduling facts (whether
    a magnetometer sample was present at the first step, update counts).
    """

    def __init__(self, t, air_velocity, tilt, attitude, cov_diag,
                 airspeed, alpha, beta, meta=None, covariance=None):
        self.t = t
        self.air_velocity = air_velocity
        self.tilt = tilt
        self.attitude = attitude
        self.cov_diag = cov_diag
        self.airspeed = airspeed
        self.alpha = alpha
        self.beta = beta
        self.meta = meta or {}
        self.covariance = covariance

    def __len__(self) -> int:
        return len(self.t)

    def row(self, i: int) -> EstimatorOutput:
        return EstimatorOutput(
            t=float(self.t[i]), air_velocity=self.air_velocity[i],
            tilt=self.tilt[i], attitude=self.attitude[i],
            cov_diag=self.cov_diag[i], airspeed=float(self.airspeed[i]),
            alpha=float(self.alpha[i]), beta=float(self.beta[i]))


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------


def _split_stream(stream):
    imu, pitot, mag = [], [], []
    for sample in stream:
        if isinstance(sample, ImuSample):
            imu.append(sample)
        elif isinstance(sample, PitotSample):
            pitot.append(sample)
        elif isinstance(sample, MagSample):
            mag.append(sample)
        else:
            raise ConfigError(f"unknown sample type {type(sample).__name__}")
    for name, seq in (("imu", imu), ("pitot", pitot), ("mag", mag)):
        for a, b in zip(seq, seq[1:]):
            if b.t <= a.t:
                raise StreamOrderError(
                    f"{name} timestamps not strictly increasing at t={b.t}")
    return imu, pitot, mag


def run(stream, config: ObserverConfig | None = None,
        init: InitialConditions | None = None,
        store_covariance: bool = False) -> EstimatorOutputs:
    """Run the cascade observer over a time-sorted sensor stream.

    Emits exactly one output per IMU sample, timestamped at the end of the
    sample's interval.  Pitot and magnetometer samples are consumed by the
    step whose interval contains their timestamp; their relative order
    within a step does not affect the result.
    """
    config = ObserverConfig() if config is None else config
    config.validate()
    init = InitialConditions() if init is None else init
    imu, pitot, mag = _split_stream(stream)
    n = len(imu)
    ts, g = config.ts, config.g
    C = c_matrix(config.pitot)
    Q = config.measurement_cov()
    S = config.process_cov
    k_z, k_m = config.gains.k_z, config.gains.k_m
    pseudo = config.pitot.pseudo_sideslip
    n_probes = config.pitot.n_probes

    xhat = init.state_vector()
    P = init.covariance.copy()
    R_hat = init.attitude.copy()
    sigma_mag = np.zeros(3)

    t_out = np.empty(n)
    va_out = np.empty((n, 3))
    tilt_out = np.empty((n, 3))
    att_out = np.empty((n, 3, 3))
    cov_out = np.empty((n, 6))
    cov_full = np.empty((n, 6, 6)) if store_covariance else None

    ip = im = 0
    n_pitot, n_mag = len(pitot), len(mag)
    pitot_updates = mag_updates = 0
    initial_mag = False
    y_buf = np.zeros(config.pitot.n_outputs)

    for k in range(n):
        s = imu[k]
        t_end = imu[k + 1].t if k + 1 < n else s.t + ts
        z_step = xhat[3:6].copy()  # tilt available entering this step

        xhat, P = riccati.predict(xhat, P, s.gyro, s.accel, ts, g, S)

        p_sample = None
        while ip < n_pitot and pitot[ip].t < t_end:
            p_sample = pitot[ip]
            ip += 1
        if p_sample is not None:
            values = np.asarray(p_sample.values, dtype=np.float64)
            if values.shape != (n_probes,):
                raise ConfigError(
                    f"pitot sample at t={p_sample.t} has {values.size} values, "
                    f"config expects {n_probes}")
            y_buf[:n_probes] = values  # pseudo-measurement slot stays 0
            xhat, P = riccati.update(xhat, P, y_buf, C, Q, joseph=config.joseph)
            pitot_updates += 1
        P = 0.5 * (P + P.T)

        m_sample = None
        while im < n_mag and mag[im].t < t_end:
            m_sample = mag[im]
            im += 1
        if m_sample is not None:
            m_inertial = (config.mag_inertial if m_sample.m_inertial is None
                          else m_sample.m_inertial)
            sigma_mag = mag_correction(R_hat, z_step, m_sample.m_body, m_inertial, k_m)
            mag_updates += 1
            if k == 0:
                initial_mag = True

        w = R_hat @ z_step  # e3 x w = (-w1, w0, 0)
        sigma = np.array([-k_z * w[1] + sigma_mag[0],
                          k_z * w[0] + sigma_mag[1], sigma_mag[2]])
        R_hat = R_hat @ exp_so3((s.gyro - R_hat.T @ sigma) * ts)
        if config.reproject_every and (k + 1) % config.reproject_every == 0:
            R_hat = project_to_so3(R_hat)

        t_out[k] = t_end
        va_out[k] = xhat[:3]
        tilt_out[k] = xhat[3:6]
        att_out[k] = R_hat
        cov_out[k] = np.diagonal(P)
        if store_covariance:
            cov_full[k] = P

    airspeed, alpha, beta = _aero_columns(va_out)
    meta = {
        "initial_mag_present": initial_mag,
        "pitot_updates": pitot_updates,
        "mag_updates": mag_updates,
        "imu_steps": n,
    }
    return EstimatorOutputs(t_out, va_out, tilt_out, att_out, cov_out,
                            airspeed, alpha, beta, meta=meta, covariance=cov_full)


def _aero_columns(va, eps: float = EPS_AIRSPEED):
    """Vectorized aero angles; NaN where degenerate (low or rearward airspeed)."""
    speed = np.linalg.norm(va, axis=1)
    valid = (speed > eps) & (va[:, 0] > eps)
    alpha = np.full(len(va), np.nan)
    beta = np.full(len(va), np.nan)
    np.arcsin(np.divide(va[:, 2], speed, out=np.zeros_like(speed), where=valid),
              out=alpha, where=valid)
    np.arctan(np.divide(va[:, 1], va[:, 0], out=np.zeros_like(speed), where=valid),
              out=beta, where=valid)
    airspeed = np.where(valid, speed, np.nan)
    return airspeed, alpha, beta


# ---------------------------------------------------------------------------
# Evaluation against a reference trace
# ---------------------------------------------------------------------------


@dataclass
class EvaluationResult:
    """Per-sample error metrics against a reference trace plus summaries.

    ``att_err`` is ``trace(I - R_hat R_ref^T)`` in [0, 4]; ``tilt_err`` and
    ``air_vel_err`` are Euclidean norms of the respective differences.
    """

    t: np.ndarray
    air_vel_err: np.ndarray
    tilt_err: np.ndarray
    att_err: np.ndarray

    def rmse(self, channel: str) -> float:
        x = getattr(self, channel + "_err")
        return float(np.sqrt(np.mean(x**2)))

    def terminal(self, channel: str, window: float = 0.1) -> float:
        """Mean error over the trailing ``window`` fraction of the run."""
        x = getattr(self, channel + "_err")
        n = max(1, int(round(window * len(x))))
        return float(np.mean(x[-n:]))

    def convergence_time(self, channel: str = "att", threshold: float = 1e-3):
        """First time after which the metric stays below ``threshold``
        for the rest of the run (None if never)."""
        x = getattr(self, channel + "_err")
        below = np.maximum.accumulate(x[::-1])[::-1] < threshold
        idx = np.nonzero(below)[0]
        return float(self.t[idx[0]]) if len(idx) else None

    def summary(self) -> dict:
        out = {}
        for channel in ("air_vel", "tilt", "att"):
            out[f"rmse_{channel}"] = self.rmse(channel)
            out[f"terminal_{channel}_err"] = self.terminal(channel)
        out["convergence_time_att_1e-3"] = self.convergence_time("att", 1e-3)
        out["convergence_time_tilt_1e-2"] = self.convergence_time("tilt", 1e-2)
        return out


def evaluate(outputs: EstimatorOutputs, reference, ts: float | None = None,
             min_coverage: float = 0.99) -> EvaluationResult:
    """Align estimates with a reference trace and compute error metrics.

    Alignment is nearest-neighbor within half an IMU period.  Raises
    ``AlignmentError`` when the reference covers less than ``min_coverage``
    of the output span.
    """
    ref_t = np.asarray(reference.t, dtype=np.float64)
    out_t = np.asarray(outputs.t, dtype=np.float64)
    if ts is None:
        ts = float(np.median(np.diff(out_t))) if len(out_t) > 1 else 1.0
    idx = np.searchsorted(ref_t, out_t)
    lo = np.clip(idx - 1, 0, len(ref_t) - 1)
    hi = np.clip(idx, 0, len(ref_t) - 1)
    nearest = np.where(np.abs(ref_t[lo] - out_t) <= np.abs(ref_t[hi] - out_t), lo, hi)
    ok = np.abs(ref_t[nearest] - out_t) <= 0.5 * ts + 1e-12
    coverage = float(np.mean(ok)) if len(ok) else 0.0
    if coverage < min_coverage:
        raise AlignmentError(
            f"reference covers {coverage:.1%} of outputs, need {min_coverage:.0%}")

    sel = nearest[ok]
    ref_R = np.asarray(reference.R)[sel]
    ref_va = np.asarray(reference.V_a)[sel]
    ref_z = np.asarray(reference.z)[sel]
    air_vel_err = np.linalg.norm(outputs.air_velocity[ok] - ref_va, axis=1)
    tilt_err = np.linalg.norm(outputs.tilt[ok] - ref_z, axis=1)
    att_err = 3.0 - np.einsum("nij,nij->n", outputs.attitude[ok], ref_R)
    return EvaluationResult(t=out_t[ok], air_vel_err=air_vel_err,
                            tilt_err=tilt_err, att_err=att_err)
