"""Continuous-discrete Kalman filter for the air-velocity/tilt state.

Prediction runs at the IMU period with an exact exponential transition
block for the rotating body frame; the measurement update applies Pitot
(and pseudo-sideslip) rows and re-symmetrizes the covariance.  All
functions are pure: they take ``(xhat, P)`` and return new arrays, so
snapshots can be shared freely across threads or Monte-Carlo trials.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalFailure
from .model import GRAVITY
from .so3 import exp_so3

# A minimum covariance eigenvalue below -NUMERICAL_TOL * trace(P) signals a
# misconfigured gain/covariance setup; smaller negative eigenvalues are left
# to the explicit symmetrization.
NUMERICAL_TOL = 1e-8


def phi_body(omega, ts: float) -> np.ndarray:
    """Transition block for vectors expressed in the rotating body frame.

    Solves ``d(phi)/dt = -[omega]x phi`` over one sample period with
    ``omega`` held constant, i.e. ``exp_so3(-omega * ts)``.
    """
    return exp_so3(-np.asarray(omega, dtype=np.float64) * ts)


def discretize(omega, ts: float, g: float = GRAVITY, process_cov=None):
    """First-order discretization of the LTV dynamics at period ``ts``.

    Returns:
        A_d: (6,6) ``[[phi, g ts I], [0, phi]]`` with ``phi = phi_body(omega, ts)``.
        B_d: (6,3) input matrix ``[ts I; 0]``.
        S_d: (6,6) discrete process covariance ``ts * process_cov``
            (None when ``process_cov`` is None).
    """
    phi = phi_body(omega, ts)
    A_d = np.zeros((6, 6))
    A_d[:3, :3] = phi
    A_d[3:, 3:] = phi
    gts = g * ts
    A_d[0, 3] = A_d[1, 4] = A_d[2, 5] = gts
    B_d = np.zeros((6, 3))
    B_d[0, 0] = B_d[1, 1] = B_d[2, 2] = ts
    S_d = None if process_cov is None else ts * np.asarray(process_cov, dtype=np.float64)
    return A_d, B_d, S_d


def predict(xhat, P, omega, accel, ts: float, g: float = GRAVITY, process_cov=None):
    """One prediction step: ``x+ = A_d x + B_d a``, ``P+ = A_d P A_d^T + S_d``."""
    A_d, B_d, S_d = discretize(omega, ts, g, process_cov)
    x_next = A_d @ xhat + B_d @ np.asarray(accel, dtype=np.float64)
    P_next = A_d @ P @ A_d.T
    if S_d is not None:
        P_next = P_next + S_d
    return x_next, P_next


def update(xhat, P, y, C, meas_cov, joseph: bool = False):
    """Measurement update with explicit covariance symmetrization.

    ``K = P C^T (C P C^T + Q)^-1``; the covariance uses the plain
    ``(I - K C) P`` form followed by ``P <- (P + P^T)/2``.  The Joseph form
    ``(I-KC) P (I-KC)^T + K Q K^T`` is available as an opt-in for
    ill-conditioned runs.

    Raises:
        NumericalFailure: the updated covariance has an eigenvalue below
            ``-NUMERICAL_TOL * trace(P)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(meas_cov, dtype=np.float64))
    S = C @ P @ C.T + Q
    K = np.linalg.solve(S.T, C @ P).T  # P C^T S^-1 without forming S^-1
    x_next = xhat + K @ (y - C @ xhat)
    if joseph:
        IKC = np.eye(6) - K @ C
        P_next = IKC @ P @ IKC.T + K @ Q @ K.T
    else:
        P_next = P - K @ (C @ P)
    P_next = 0.5 * (P_next + P_next.T)
    check_covariance_health(P_next)
    return x_next, P_next


def gain_continuous(P, C, meas_cov) -> np.ndarray:
    """Continuous-time gain ``K = P C^T Q^-1`` (used by the Riccati-equation
    diagnostics and the optional continuous integration mode)."""
    Q = np.atleast_2d(np.asarray(meas_cov, dtype=np.float64))
    return np.linalg.solve(Q.T, C @ P).T


def riccati_rhs(P, A, C, meas_cov, process_cov) -> np.ndarray:
    """Right-hand side of the continuous Riccati equation
    ``dP/dt = A P + P A^T - K Q K^T + S`` with ``K = P C^T Q^-1``."""
    K = gain_continuous(P, C, meas_cov)
    Q = np.atleast_2d(np.asarray(meas_cov, dtype=np.float64))
    return A @ P + P @ A.T - K @ Q @ K.T + np.asarray(process_cov, dtype=np.float64)


def check_covariance_health(P) -> None:
    """Raise ``NumericalFailure`` if ``P`` is not positive definite within
    tolerance.  A successful Cholesky factorization is the fast path."""
    try:
        np.linalg.cholesky(P)
        return
    except np.linalg.LinAlgError:
        pass
    w = np.linalg.eigvalsh(P)
    if w[0] < -NUMERICAL_TOL * np.trace(P):
        raise NumericalFailure(
            f"covariance lost positive definiteness (min eig {w[0]:.3e}, trace {np.trace(P):.3e})")
