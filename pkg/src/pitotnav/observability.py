"""Observability diagnostics for the air-velocity/tilt system.

Provides the factored state transition matrix of the LTV dynamics, the
windowed observability Gramian, the directional-excitation average whose
minimum eigenvalue quantifies persistency of excitation, and a windowed
condition-number monitor of the excitation integral usable online as a
practical observability health check.

Angular-velocity and attitude traces are sampled time series; all
integrals treat samples as zero-order-held over their interval and use
composite trapezoid quadrature on the sample grid.

The transition matrix factors as

    Phi(t, s) = T(t)^T expm(Abar (t-s)) T(s),   T = diag(phi, phi)

with ``d(phi)/dt = phi [omega]x`` and ``Abar`` the constant
gravity-coupling block, which is nilpotent, so
``expm(Abar tau) = [[I, g tau I], [0, I]]`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GRAVITY, PitotConfig
from .so3 import exp_so3

# A window matrix is reported singular (condition number inf) when its
# smallest eigenvalue falls below SINGULAR_RTOL times its largest.
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class GramianReport:
    """Windowed observability Gramian with its eigenvalue diagnostics."""

    t_start: float
    t_end: float
    gramian: np.ndarray
    min_eig: float
    cond: float


@dataclass(frozen=True)
class ExcitationReport:
    """Windowed average of the directional excitation ``R B B^T R^T``."""

    t_start: float
    t_end: float
    sigma_avg: np.ndarray
    min_eig: float


@dataclass(frozen=True)
class ExcitationWindow:
    """Per-window excitation integral and its condition number."""

    index: int
    t_start: float
    t_end: float
    matrix: np.ndarray
    cond: float


def _probe_matrix(probe) -> np.ndarray:
    """Accept a PitotConfig or a raw 3 x m direction matrix."""
    if isinstance(probe, PitotConfig):
        return probe.b_matrix()
    B = np.asarray(probe, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    return B


def _conditioning(matrix) -> tuple[float, float]:
    """(min eigenvalue, condition number) with the singularity rule applied."""
    w = np.linalg.eigvalsh(matrix)
    w_min, w_max = float(w[0]), float(w[-1])
    if w_max <= 0.0 or w_min < SINGULAR_RTOL * w_max:
        return w_min, np.inf
    return w_min, w_max / w_min


def _segment_rotations(times, omegas, t_start: float, t_end: float, phi_start=None):
    """Integrate ``d(phi)/dt = phi [omega]x`` over [t_start, t_end].

    Returns the quadrature grid (clipped sample times plus both endpoints)
    and phi at each grid point, starting from ``phi_start`` (identity by
    default).
    """
    times = np.asarray(times, dtype=np.float64)
    omegas = np.asarray(omegas, dtype=np.float64)
    if t_start < times[0] - 1e-12 or t_end > times[-1] + 1e-12:
        raise ValueError(
            f"window [{t_start}, {t_end}] not covered by trace [{times[0]}, {times[-1]}]")
    i0 = int(np.searchsorted(times, t_start, side="right")) - 1
    i0 = max(i0, 0)
    grid = [t_start]
    inner = times[(times > t_start) & (times < t_end)]
    grid.extend(inner.tolist())
    grid.append(t_end)
    grid = np.array(grid)

    phi = np.eye(3) if phi_start is None else np.array(phi_start, dtype=np.float64)
    phis = np.empty((len(grid), 3, 3))
    phis[0] = phi
    idx = i0
    for j in range(1, len(grid)):
        dt = grid[j] - grid[j - 1]
        # advance idx to the sample interval containing the segment start
        while idx + 1 < len(times) and times[idx + 1] <= grid[j - 1] + 1e-15:
            idx += 1
        phi = phi @ exp_so3(omegas[idx] * dt)
        phis[j] = phi
    return grid, phis


def transition_matrix(times, omegas, t: float, s: float,
                      g: float = GRAVITY, phi_start=None) -> np.ndarray:
    """State transition matrix ``Phi(t, s)`` for ``s <= t`` from a sampled
    angular-velocity trace (zero-order-held between samples)."""
    if t < s:
        raise ValueError("transition_matrix requires s <= t")
    grid, phis = _segment_rotations(times, omegas, s, t, phi_start)
    phi_s, phi_t = phis[0], phis[-1]
    tau = t - s
    Phi = np.zeros((6, 6))
    block = phi_t.T @ phi_s
    Phi[:3, :3] = block
    Phi[3:, 3:] = block
    Phi[:3, 3:] = (g * tau) * block
    return Phi


def gramian(times, omegas, probe, t: float, delta: float,
            g: float = GRAVITY, phi_start=None) -> GramianReport:
    """Observability Gramian ``(1/delta) int_t^{t+delta} Phi(s,t)^T C^T C Phi(s,t) ds``.

    ``probe`` is a PitotConfig or a raw 3 x m direction matrix; the output
    matrix is ``C = [B^T, 0]``.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    B = _probe_matrix(probe)
    grid, phis = _segment_rotations(times, omegas, t, t + delta, phi_start)
    phi0 = phis[0]

    W = np.zeros((6, 6))
    M_prev = None
    for j in range(len(grid)):
        tau = grid[j] - t
        psi = phis[j].T @ phi0  # phi(s)^T phi(t)
        row = B.T @ psi  # B^T phi(s)^T phi(t), m x 3
        CPhi = np.hstack([row, (g * tau) * row])
        M = CPhi.T @ CPhi
        if M_prev is not None:
            W += 0.5 * (grid[j] - grid[j - 1]) * (M + M_prev)
        M_prev = M
    W /= delta
    W = 0.5 * (W + W.T)
    min_eig, cond = _conditioning(W)
    return GramianReport(t_start=t, t_end=t + delta, gramian=W, min_eig=min_eig, cond=cond)


def _excitation_integral(times, rotations, B, t_start: float, t_end: float) -> np.ndarray:
    """Trapezoid integral of ``R(s) B B^T R(s)^T`` over [t_start, t_end]."""
    times = np.asarray(times, dtype=np.float64)
    mask = (times >= t_start - 1e-12) & (times <= t_end + 1e-12)
    idx = np.nonzero(mask)[0]
    if len(idx) < 2:
        raise ValueError(f"window [{t_start}, {t_end}] has fewer than 2 samples")
    R = np.asarray(rotations, dtype=np.float64)[idx]
    tt = times[idx]
    RB = R @ B  # (n, 3, m)
    sigma = RB @ np.transpose(RB, (0, 2, 1))  # (n, 3, 3)
    widths = np.diff(tt)
    M = np.tensordot(0.5 * widths, sigma[:-1] + sigma[1:], axes=(0, 0))
    return 0.5 * (M + M.T)


def excitation_average(times, rotations, probe, t: float, delta: float) -> ExcitationReport:
    """Windowed average ``(1/delta) int R B B^T R^T ds`` and its minimum
    eigenvalue.  A strictly positive minimum across all windows is the
    persistency-of-excitation property that underpins filter convergence."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    B = _probe_matrix(probe)
    M = _excitation_integral(times, rotations, B, t, t + delta) / delta
    w = np.linalg.eigvalsh(M)
    return ExcitationReport(t_start=t, t_end=t + delta, sigma_avg=M, min_eig=float(w[0]))


def excitation_windows(times, rotations, probe, delta: float = 2.0) -> list[ExcitationWindow]:
    """Condition number of the excitation integral over contiguous,
    non-overlapping windows of length ``delta`` (reported inf when the
    window matrix is singular)."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    times = np.asarray(times, dtype=np.float64)
    B = _probe_matrix(probe)
    out = []
    k = 0
    while times[0] + (k + 1) * delta <= times[-1] + 1e-12:
        t0 = times[0] + k * delta
        t1 = t0 + delta
        M = _excitation_integral(times, rotations, B, t0, t1)
        _, cond = _conditioning(M)
        out.append(ExcitationWindow(index=k, t_start=t0, t_end=t1, matrix=M, cond=cond))
        k += 1
    return out


def window_diagnostics(times, omegas, rotations, probe, delta: float = 2.0,
                       g: float = GRAVITY) -> list[dict]:
    """Combined per-window diagnostics rows.

    One dict per contiguous window with keys ``t_start``, ``t_end``,
    ``min_eig_gramian``, ``cond_gramian``, ``min_eig_sigma``, ``cond_M``.
    """
    rows = []
    for win in excitation_windows(times, rotations, probe, delta):
        gram = gramian(times, omegas, probe, win.t_start, delta, g)
        pe = excitation_average(times, rotations, probe, win.t_start, delta)
        rows.append({
            "t_start": win.t_start,
            "t_end": win.t_end,
            "min_eig_gramian": gram.min_eig,
            "cond_gramian": gram.cond,
            "min_eig_sigma": pe.min_eig,
            "cond_M": win.cond,
        })
    return rows
