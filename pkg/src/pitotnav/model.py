"""Continuous-time model of the estimation problem.

State convention: the six-dimensional state stacks the body-frame air
velocity ``V_a`` (m/s) and the tilt ``z = R.T @ e3`` (gravity direction in
the body frame, unit norm for true states).  Driven by body angular
velocity ``omega`` and specific acceleration ``a`` from the IMU:

    d(V_a)/dt = -omega x V_a + g z + a
    d(z)/dt   = -omega x z

Pitot probes measure projections ``b_i . V_a`` along fixed body axes; an
optional zero-sideslip pseudo-measurement treats coordinated flight
(``V_a2 = 0``) as one extra output row along ``e2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateAirspeed
from .so3 import E2, skew

GRAVITY = 9.81  # m/s^2

# Below this airspeed (m/s) the angle-of-attack/sideslip parametrization is
# meaningless and aero angles are reported as unavailable.
EPS_AIRSPEED = 0.5


@dataclass(frozen=True)
class State6:
    """Stacked filter state: body-frame air velocity and tilt."""

    V_a: np.ndarray
    z: np.ndarray

    @property
    def vec(self) -> np.ndarray:
        """The state as a flat 6-vector ``[V_a; z]``."""
        return np.concatenate([self.V_a, self.z])

    @staticmethod
    def from_vec(x) -> "State6":
        x = np.asarray(x, dtype=np.float64)
        return State6(V_a=x[:3].copy(), z=x[3:6].copy())


@dataclass(frozen=True)
class PitotConfig:
    """Pitot probe geometry and output configuration.

    Attributes:
        axes: unit body-frame probe directions (1 to 3, pairwise distinct).
        pseudo_sideslip: append the zero-sideslip pseudo-measurement
            ``V_a2 = 0`` as an extra output row along ``e2``.
    """

    axes: tuple = field(default=((1.0, 0.0, 0.0),))
    pseudo_sideslip: bool = False

    def __post_init__(self):
        axes = tuple(np.asarray(b, dtype=np.float64) for b in self.axes)
        if not 1 <= len(axes) <= 3:
            raise ConfigError(f"need 1 to 3 Pitot axes, got {len(axes)}")
        for b in axes:
            if b.shape != (3,) or not np.all(np.isfinite(b)):
                raise ConfigError("Pitot axis must be a finite 3-vector")
            if abs(np.linalg.norm(b) - 1.0) > 1e-9:
                raise ConfigError(f"Pitot axis {b} is not unit norm")
        for i in range(len(axes)):
            for j in range(i + 1, len(axes)):
                if np.allclose(axes[i], axes[j]):
                    raise ConfigError("Pitot axes must be pairwise distinct")
        object.__setattr__(self, "axes", axes)

    @property
    def n_probes(self) -> int:
        """Number of physical probes."""
        return len(self.axes)

    @property
    def n_outputs(self) -> int:
        """Measurement dimension, including the pseudo-measurement row."""
        return self.n_probes + (1 if self.pseudo_sideslip else 0)

    def b_matrix(self) -> np.ndarray:
        """3 x m direction matrix including the pseudo-measurement axis e2."""
        cols = list(self.axes)
        if self.pseudo_sideslip:
            cols.append(E2)
        return np.column_stack(cols)


@dataclass(frozen=True)
class AeroAngles:
    """Airspeed (m/s), angle of attack and sideslip angle (rad)."""

    airspeed: float
    alpha: float
    beta: float


def a_matrix(omega, g: float = GRAVITY) -> np.ndarray:
    """State matrix ``[[-[omega]x, g I], [0, -[omega]x]]`` of the LTV dynamics."""
    W = -skew(omega)
    A = np.zeros((6, 6))
    A[:3, :3] = W
    A[3:, 3:] = W
    A[:3, 3:] = g * np.eye(3)
    return A


def c_matrix(cfg: PitotConfig) -> np.ndarray:
    """Output matrix: row ``[b_i^T, 0]`` per probe, plus ``[e2^T, 0]`` if the
    pseudo-measurement is enabled."""
    B = cfg.b_matrix()
    C = np.zeros((B.shape[1], 6))
    C[:, :3] = B.T
    return C


def continuous_dynamics(x: State6, omega, a, g: float = GRAVITY):
    """Time derivative ``(dV_a/dt, dz/dt)`` of the six-dimensional state."""
    omega = np.asarray(omega, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    v_dot = -np.cross(omega, x.V_a) + g * x.z + a
    z_dot = -np.cross(omega, x.z)
    return v_dot, z_dot


def aero_angles(V_a, eps: float = EPS_AIRSPEED) -> AeroAngles:
    """Airspeed / angle-of-attack / sideslip from body-frame air velocity.

        alpha = arcsin(V_a3 / |V_a|),  beta = arctan(V_a2 / V_a1)

    Valid for forward flight only.  Raises ``DegenerateAirspeed`` when the
    airspeed or the forward component is at or below ``eps`` (the arctan
    branch would be meaningless, e.g. in hover or rearward flight).
    """
    V_a = np.asarray(V_a, dtype=np.float64)
    speed = float(np.linalg.norm(V_a))
    if speed <= eps:
        raise DegenerateAirspeed(f"airspeed {speed:.3g} m/s <= {eps} m/s")
    if V_a[0] <= eps:
        raise DegenerateAirspeed(
            f"forward air velocity {V_a[0]:.3g} m/s <= {eps} m/s; sideslip undefined")
    alpha = float(np.arcsin(V_a[2] / speed))
    beta = float(np.arctan(V_a[1] / V_a[0]))
    return AeroAngles(airspeed=speed, alpha=alpha, beta=beta)


def air_velocity_from_angles(airspeed: float, alpha: float, beta: float) -> np.ndarray:
    """Inverse parametrization: ``|V| [c_a c_b, c_a s_b, s_a]``."""
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    return airspeed * np.array([ca * cb, ca * sb, sa])


def pitot_output(state, cfg: PitotConfig) -> np.ndarray:
    """Truth-side measurement vector for a state.

    Physical rows are the projections ``b_i . V_a``; the pseudo-sideslip
    row, when enabled, carries the constant 0 (the coordinated-flight
    condition itself, not ``e2 . V_a``).
    """
    V_a = state.V_a if isinstance(state, State6) else np.asarray(state, dtype=np.float64)
    y = [float(b @ V_a) for b in cfg.axes]
    if cfg.pseudo_sideslip:
        y.append(0.0)
    return np.array(y)
