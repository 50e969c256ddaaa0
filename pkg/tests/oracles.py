"""Independent reference implementations used as test oracles.

Everything here is deliberately written from scratch against the math,
not by calling the package's own routines, so each check has two
independent code paths to the same quantity.
"""

import numpy as np


def skew_oracle(u):
    return np.array([[0.0, -u[2], u[1]],
                     [u[2], 0.0, -u[0]],
                     [-u[1], u[0], 0.0]], dtype=np.float64)


def series_expm(theta, n_terms=30):
    """Matrix exponential of skew(theta) by truncated power series."""
    K = skew_oracle(np.asarray(theta, dtype=np.float64))
    out = np.eye(3)
    term = np.eye(3)
    for k in range(1, n_terms + 1):
        term = term @ K / k
        out = out + term
    return out


def rk4_matrix_ode(rhs, X0, t0, t1, n_steps):
    """Integrate dX/dt = rhs(t, X) with classic RK4."""
    X = np.array(X0, dtype=np.float64)
    h = (t1 - t0) / n_steps
    t = t0
    for _ in range(n_steps):
        k1 = rhs(t, X)
        k2 = rhs(t + 0.5 * h, X + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, X + 0.5 * h * k2)
        k4 = rhs(t + h, X + h * k3)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return X


def kf_predict_oracle(x, P, A_d, B_d, u, S_d):
    """Textbook Kalman prediction."""
    x_next = A_d @ x + B_d @ u
    P_next = A_d @ P @ A_d.T + S_d
    return x_next, P_next


def kf_update_oracle(x, P, y, C, Q):
    """Textbook Kalman update with the (I - K C) P form plus symmetrization."""
    S = C @ P @ C.T + Q
    K = P @ C.T @ np.linalg.inv(S)
    x_next = x + K @ (y - C @ x)
    P_next = (np.eye(len(x)) - K @ C) @ P
    P_next = 0.5 * (P_next + P_next.T)
    return x_next, P_next


def correction_oracle(R_hat, z_hat, m_body, m_inertial, k_z, k_m):
    """Componentwise expansion of the attitude correction vector."""
    e3 = np.array([0.0, 0.0, 1.0])

    def proj(u, v):
        # (|u|^2 I - u u^T) v
        return (u @ u) * v - u * (u @ v)

    def cross(a, b):
        return np.array([a[1] * b[2] - a[2] * b[1],
                         a[2] * b[0] - a[0] * b[2],
                         a[0] * b[1] - a[1] * b[0]])

    mi = proj(e3, np.asarray(m_inertial, dtype=np.float64))
    mb = proj(np.asarray(z_hat, dtype=np.float64), np.asarray(m_body, dtype=np.float64))
    return k_z * cross(e3, R_hat @ z_hat) + k_m * cross(mi, R_hat @ mb)


def deriv4(values, dt):
    """Fourth-order central-difference time derivative of a sampled array.

    Returns the derivative on the interior (two samples trimmed per side).
    """
    v = np.asarray(values, dtype=np.float64)
    return (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * dt)


def rotation_angle_quat(R):
    """Rotation angle extracted through the quaternion scalar component."""
    w = 0.5 * np.sqrt(max(0.0, 1.0 + np.trace(R)))
    return 2.0 * np.arccos(np.clip(w, -1.0, 1.0))


def smooth_omega_trace(rng, n, ts, amplitude=1.0, n_modes=3):
    """Random smooth angular-velocity trace: a few sinusoids per axis."""
    t = np.arange(n) * ts
    omega = np.zeros((n, 3))
    for axis in range(3):
        for _ in range(n_modes):
            a = amplitude * rng.uniform(0.2, 1.0) / n_modes
            f = rng.uniform(0.1, 2.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            omega[:, axis] += a * np.sin(2.0 * np.pi * f * t + phase)
    return t, omega
