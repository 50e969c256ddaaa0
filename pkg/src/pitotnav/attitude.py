"""Nonlinear attitude observer on SO(3).

Fuses the tilt estimate from the velocity filter with magnetometer
directions through the correction vector

    sigma = k_z (e3 x R_hat z_hat) + k_m (mbar_I x R_hat mbar_B)

where ``mbar_I`` and ``mbar_B`` are the inertial and body magnetic
directions passed through regularized projectors (``|u|^2 I - u u^T``)
that remove their components along e3 and along the tilt respectively.
The projection keeps the magnetometer from actuating roll/pitch and stays
well defined even when the tilt estimate transiently vanishes.  The
discrete step is an exponential Euler update that keeps the estimate on
SO(3) up to float drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .so3 import E3, exp_so3, reg_projector

# classify_rotation_error thresholds: "aligned" below ALIGNED_TRACE_TOL of
# attitude error; "antipodal" within ANTIPODAL_TOL of a symmetric rotation
# by pi.
ALIGNED_TRACE_TOL = 1e-3
ANTIPODAL_TOL = 1e-3


@dataclass(frozen=True)
class AttitudeGains:
    """Correction gains: tilt gain ``k_z > 0``, magnetometer gain ``k_m >= 0``."""

    k_z: float = 2.0
    k_m: float = 1.0

    def __post_init__(self):
        if not self.k_z > 0.0:
            raise ConfigError(f"k_z must be positive, got {self.k_z}")
        if self.k_m < 0.0:
            raise ConfigError(f"k_m must be nonnegative, got {self.k_m}")


def tilt_correction(R_hat, z_hat, k_z: float) -> np.ndarray:
    """Tilt part ``k_z (e3 x R_hat z_hat)`` of the correction.

    Note ``e3 . (e3 x R_hat z_hat) = 0`` identically: the tilt term never
    directly actuates inertial yaw.
    """
    return k_z * np.cross(E3, R_hat @ np.asarray(z_hat, dtype=np.float64))


def mag_correction(R_hat, z_hat, m_body, m_inertial, k_m: float) -> np.ndarray:
    """Magnetometer part ``k_m (mbar_I x R_hat mbar_B)`` of the correction.

    ``z_hat`` need not be unit norm; the regularized projector handles
    arbitrary (even zero) tilt estimates.
    """
    m_bar_i = reg_projector(E3) @ np.asarray(m_inertial, dtype=np.float64)
    m_bar_b = reg_projector(z_hat) @ np.asarray(m_body, dtype=np.float64)
    return k_m * np.cross(m_bar_i, R_hat @ m_bar_b)


def correction(R_hat, z_hat, m_body, m_inertial, gains: AttitudeGains) -> np.ndarray:
    """Full correction vector (tilt term plus magnetometer term)."""
    return (tilt_correction(R_hat, z_hat, gains.k_z)
            + mag_correction(R_hat, z_hat, m_body, m_inertial, gains.k_m))


def attitude_step(R_hat, omega, sigma, ts: float) -> np.ndarray:
    """Exponential Euler step ``R+ = R_hat exp(([omega - R_hat^T sigma]) ts)``."""
    omega = np.asarray(omega, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    return R_hat @ exp_so3((omega - R_hat.T @ sigma) * ts)


def classify_rotation_error(R_err, tol: float = ANTIPODAL_TOL) -> str:
    """Classify an error rotation ``R_hat @ R_true.T``.

    Returns:
        ``"aligned"`` when ``trace(I - R_err)`` is below ``ALIGNED_TRACE_TOL``;
        ``"antipodal"`` when ``R_err`` is symmetric with eigenvalues near
        ``{1, -1, -1}`` (a rotation by pi, the unstable equilibrium family
        of the observer); ``"other"`` otherwise.
    """
    R_err = np.asarray(R_err, dtype=np.float64)
    if 3.0 - np.trace(R_err) < ALIGNED_TRACE_TOL:
        return "aligned"
    if np.linalg.norm(R_err - R_err.T) < tol:
        w = np.sort(np.linalg.eigvalsh(0.5 * (R_err + R_err.T)))
        if np.allclose(w, [-1.0, -1.0, 1.0], atol=tol):
            return "antipodal"
    return "other"
