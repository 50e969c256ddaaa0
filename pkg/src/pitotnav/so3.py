"""Rotation-group primitives used across the package.

Rotations are plain 3x3 float64 arrays.  Throughout the package ``R`` maps
body-frame vectors to the inertial (NED) frame, so the columns of ``R`` are
the body axes expressed inertially and the tilt (gravity direction in the
body frame) is ``R.T @ e3``, i.e. the third row of ``R``.
"""

from __future__ import annotations

import numpy as np

# Below this rotation angle the Rodrigues coefficients switch to their
# second-order Taylor expansions; both branches agree to ~1e-12 there.
SMALL_ANGLE = 1e-6

# Default tolerance for orthonormality / unit-determinant checks.
ROTATION_TOL = 1e-9

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

_I3 = np.eye(3)


def skew(u) -> np.ndarray:
    """Return the 3x3 antisymmetric matrix ``[u]x`` with ``[u]x @ v = u x v``."""
    ux, uy, uz = float(u[0]), float(u[1]), float(u[2])
    return np.array([[0.0, -uz, uy],
                     [uz, 0.0, -ux],
                     [-uy, ux, 0.0]])


def exp_so3(theta) -> np.ndarray:
    """Exponential map R^3 -> SO(3) via the Rodrigues formula.

    Args:
        theta: (3,) rotation vector, angle ``|theta|`` about axis ``theta/|theta|``.

    Returns:
        (3,3) rotation matrix ``I + sin|t|/|t| [t]x + (1-cos|t|)/|t|^2 [t]x^2``.
        Angles below ``SMALL_ANGLE`` use the Taylor fallback
        ``I + [t]x + 0.5 [t]x^2`` to avoid 0/0.
    """
    theta = np.asarray(theta, dtype=np.float64)
    angle = np.sqrt(theta @ theta)
    K = skew(theta)
    K2 = K @ K
    if angle < SMALL_ANGLE:
        return _I3 + K + 0.5 * K2
    return _I3 + (np.sin(angle) / angle) * K + ((1.0 - np.cos(angle)) / angle**2) * K2


def reg_projector(u) -> np.ndarray:
    """Regularized projector ``|u|^2 I - u u^T``.

    Symmetric positive semidefinite, annihilates ``u``, and stays well
    defined (zero matrix) when ``u = 0`` -- no normalization involved.
    """
    u = np.asarray(u, dtype=np.float64)
    return (u @ u) * np.eye(3) - np.outer(u, u)


def random_rotation(seed) -> np.ndarray:
    """Draw a rotation matrix uniformly on SO(3).

    Uses the normalized-quaternion method: four standard normals, normalized,
    mapped to a rotation matrix.  Deterministic per seed.

    Args:
        seed: integer seed or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    q = rng.standard_normal(4)
    q /= np.sqrt(q @ q)
    w, x, y, z = q
    return np.array([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])


def attitude_error(R_hat, R_ref) -> float:
    """Full attitude error ``trace(I - R_hat @ R_ref.T)``, in [0, 4].

    Zero iff the attitudes coincide; 4 for antipodal attitudes (relative
    rotation by pi).
    """
    R_hat = np.asarray(R_hat, dtype=np.float64)
    R_ref = np.asarray(R_ref, dtype=np.float64)
    return 3.0 - float(np.trace(R_hat @ R_ref.T))


def rotation_angle(R) -> float:
    """Rotation angle in [0, pi] of a rotation matrix."""
    c = 0.5 * (float(np.trace(R)) - 1.0)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def project_to_so3(M) -> np.ndarray:
    """Closest rotation matrix to ``M`` (polar projection via SVD).

    Used to repair accumulated float drift after long integrations; the
    exponential updates preserve SO(3) exactly only in exact arithmetic.
    """
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    """Check ``R R^T = I`` (Frobenius) and ``det R = 1`` within ``tol``."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    ortho = np.linalg.norm(R @ R.T - np.eye(3))
    return ortho <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def check_rotation(R, tol: float = ROTATION_TOL, what: str = "matrix") -> np.ndarray:
    """Validate a rotation matrix, raising ``ValueError`` if it fails."""
    R = np.asarray(R, dtype=np.float64)
    if not is_rotation(R, tol):
        raise ValueError(f"{what} is not a rotation matrix within tolerance {tol}")
    return R


def euler_zyx_to_rotation(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Body-to-inertial rotation from ZYX (yaw-pitch-roll) Euler angles."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])
