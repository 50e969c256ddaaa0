"""Flight-log CSV parsing/writing, config files, and result emission.

Log schema
----------
A merged log is a CSV file with header ``t_s,sensor,v1,...,v15`` and one
row per sample.  The ``sensor`` column selects the row layout:

    imu    6 values: a1 a2 a3 w1 w2 w3   (specific accel m/s^2, gyro rad/s)
    pitot  1-3 values: one projected air velocity (m/s) per probe
    mag    3 values: unit magnetic direction, body frame
    ref    15 values: attitude row-major r11..r33, then va1 va2 va3 (m/s)

Alternatively a directory holds per-sensor files ``imu.csv``, ``pitot.csv``,
``mag.csv`` and optionally ``reference.csv`` with a ``t_s`` column followed
by the same values.  Timestamps must be strictly increasing per sensor.
``ref`` rows are an onboard reference trace used for evaluation and for
reconstructing an inertial magnetic direction during replay; they are not
observer inputs.

All numeric output is written with 17 significant digits so that
write/parse round trips are bit-exact.

Config files are flat ``key = value`` lines with ``#`` comments; vectors
are comma-separated, multiple Pitot axes semicolon-separated.  Every
observer default can be overridden; unknown keys are rejected.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .attitude import AttitudeGains
from .cascade import (EstimatorOutputs, ImuSample, InitialConditions,
                      MagSample, ObserverConfig, PitotSample)
from .errors import ConfigError, OrderError, ParseError, SchemaError
from .model import PitotConfig
from .sim import SensorNoiseSpec, SensorRates, TrajectorySpec
from .so3 import euler_zyx_to_rotation

_SENSOR_WIDTHS = {"imu": 6, "mag": 3, "ref": 15}
_MAX_VALUES = 15


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Reference trace
# ---------------------------------------------------------------------------


@dataclass
class ReferenceTrace:
    """Onboard reference attitude and air velocity, used for evaluation."""

    t: np.ndarray
    R: np.ndarray
    V_a: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return self.R[:, 2, :]

    def __len__(self) -> int:
        return len(self.t)

    def nearest_attitude(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.t, t))
        if i > 0 and (i == len(self.t) or abs(self.t[i - 1] - t) <= abs(self.t[i] - t)):
            i -= 1
        return self.R[i]


@dataclass
class ParsedLog:
    """Typed, time-sorted sensor streams plus an optional reference trace."""

    imu: list = field(default_factory=list)
    pitot: list = field(default_factory=list)
    mag: list = field(default_factory=list)
    reference: ReferenceTrace | None = None

    def merged(self) -> list:
        order = {ImuSample: 0, PitotSample: 1, MagSample: 2}
        stream = self.imu + self.pitot + self.mag
        stream.sort(key=lambda s: (s.t, order[type(s)]))
        return stream

    def clipped(self, t0: float) -> "ParsedLog":
        """Samples (and reference rows) at or after ``t0``."""
        ref = self.reference
        if ref is not None:
            keep = ref.t >= t0
            ref = ReferenceTrace(t=ref.t[keep], R=ref.R[keep], V_a=ref.V_a[keep])
        return ParsedLog(
            imu=[s for s in self.imu if s.t >= t0],
            pitot=[s for s in self.pitot if s.t >= t0],
            mag=[s for s in self.mag if s.t >= t0],
            reference=ref)


def reconstruct_mag_reference(log: ParsedLog) -> ParsedLog:
    """Attach per-sample inertial magnetic directions ``R_ref @ m_body``.

    Uses the reference attitude nearest to each magnetometer sample, so the
    observer never consumes raw magnetometer headings directly (isolates it
    from field disturbances).  Requires a reference trace.
    """
    if log.reference is None:
        raise ConfigError("cannot reconstruct magnetic reference without ref rows")
    mags = [MagSample(t=m.t, m_body=m.m_body,
                      m_inertial=log.reference.nearest_attitude(m.t) @ m.m_body)
            for m in log.mag]
    return ParsedLog(imu=log.imu, pitot=log.pitot, mag=mags, reference=log.reference)


# ---------------------------------------------------------------------------
# Log parsing
# ---------------------------------------------------------------------------


def _parse_floats(cells, line: int) -> list:
    vals = []
    for c in cells:
        c = c.strip()
        if c == "":
            break
        try:
            vals.append(float(c))
        except ValueError:
            raise ParseError(f"cannot parse {c!r} as a number", line=line) from None
    return vals


def _check_monotonic(name: str, t: float, last: dict, line: int) -> None:
    prev = last.get(name)
    if prev is not None and t <= prev:
        raise OrderError(f"{name} time {t} not after {prev}", line=line)
    last[name] = t


def parse_log(path) -> ParsedLog:
    """Parse a merged log file or a per-sensor log directory."""
    import os

    if os.path.isdir(path):
        return _parse_log_dir(path)
    return _parse_log_merged(path)


def _parse_log_merged(path) -> ParsedLog:
    log = ParsedLog()
    ref_t, ref_R, ref_va = [], [], []
    last = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line, row in enumerate(reader, start=1):
            if line == 1 and row and row[0].strip() == "t_s":
                continue  # header
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) < 2:
                raise SchemaError(f"need at least t_s and sensor columns", line=line)
            try:
                t = float(row[0])
            except ValueError:
                raise ParseError(f"cannot parse timestamp {row[0]!r}", line=line) from None
            sensor = row[1].strip()
            vals = _parse_floats(row[2:], line)
            if sensor == "pitot":
                if not 1 <= len(vals) <= 3:
                    raise SchemaError(
                        f"pitot row has {len(vals)} values, expected 1-3", line=line)
                if log.pitot and len(log.pitot[0].values) != len(vals):
                    raise SchemaError(
                        f"pitot row width changed from {len(log.pitot[0].values)} "
                        f"to {len(vals)}", line=line)
            elif sensor in _SENSOR_WIDTHS:
                want = _SENSOR_WIDTHS[sensor]
                if len(vals) != want:
                    raise SchemaError(
                        f"{sensor} row has {len(vals)} values, expected {want}", line=line)
            else:
                raise SchemaError(f"unknown sensor {sensor!r}", line=line)
            _check_monotonic(sensor, t, last, line)
            v = np.array(vals)
            if sensor == "imu":
                log.imu.append(ImuSample(t=t, accel=v[:3], gyro=v[3:]))
            elif sensor == "pitot":
                log.pitot.append(PitotSample(t=t, values=v))
            elif sensor == "mag":
                log.mag.append(MagSample(t=t, m_body=v))
            else:
                ref_t.append(t)
                ref_R.append(v[:9].reshape(3, 3))
                ref_va.append(v[9:])
    if ref_t:
        log.reference = ReferenceTrace(t=np.array(ref_t), R=np.array(ref_R),
                                       V_a=np.array(ref_va))
    return log


def _parse_log_dir(path) -> ParsedLog:
    import os

    log = ParsedLog()
    tables = {}
    for name in ("imu", "pitot", "mag", "reference"):
        fp = os.path.join(path, name + ".csv")
        if os.path.exists(fp):
            tables[name] = _read_table(fp, name)
    for t, vals, line in tables.get("imu", []):
        if len(vals) != 6:
            raise SchemaError(f"imu row has {len(vals)} values, expected 6", line=line)
        log.imu.append(ImuSample(t=t, accel=np.array(vals[:3]), gyro=np.array(vals[3:])))
    width = None
    for t, vals, line in tables.get("pitot", []):
        if not 1 <= len(vals) <= 3 or (width is not None and len(vals) != width):
            raise SchemaError(f"pitot row has {len(vals)} values", line=line)
        width = len(vals)
        log.pitot.append(PitotSample(t=t, values=np.array(vals)))
    for t, vals, line in tables.get("mag", []):
        if len(vals) != 3:
            raise SchemaError(f"mag row has {len(vals)} values, expected 3", line=line)
        log.mag.append(MagSample(t=t, m_body=np.array(vals)))
    ref = tables.get("reference")
    if ref:
        ref_t, ref_R, ref_va = [], [], []
        for t, vals, line in ref:
            if len(vals) != 15:
                raise SchemaError(f"reference row has {len(vals)} values, expected 15",
                                  line=line)
            ref_t.append(t)
            ref_R.append(np.array(vals[:9]).reshape(3, 3))
            ref_va.append(np.array(vals[9:]))
        log.reference = ReferenceTrace(t=np.array(ref_t), R=np.array(ref_R),
                                       V_a=np.array(ref_va))
    return log


def _read_table(path, name):
    rows = []
    last = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line, row in enumerate(reader, start=1):
            if line == 1 and row and row[0].strip() == "t_s":
                continue
            if not row or all(c.strip() == "" for c in row):
                continue
            try:
                t = float(row[0])
            except ValueError:
                raise ParseError(f"cannot parse timestamp {row[0]!r}", line=line) from None
            _check_monotonic(name, t, last, line)
            rows.append((t, _parse_floats(row[1:], line), line))
    return rows


# ---------------------------------------------------------------------------
# Log writing
# ---------------------------------------------------------------------------


def write_log(path, stream, reference: ReferenceTrace | None = None) -> None:
    """Write a merged log file (sensor stream plus optional ref rows)."""
    rows = []
    for s in stream:
        if isinstance(s, ImuSample):
            rows.append((s.t, 0, "imu", list(s.accel) + list(s.gyro)))
        elif isinstance(s, PitotSample):
            rows.append((s.t, 1, "pitot", list(s.values)))
        elif isinstance(s, MagSample):
            rows.append((s.t, 2, "mag", list(s.m_body)))
        else:
            raise ConfigError(f"cannot serialize sample type {type(s).__name__}")
    if reference is not None:
        for i in range(len(reference)):
            rows.append((float(reference.t[i]), 3, "ref",
                         list(reference.R[i].ravel()) + list(reference.V_a[i])))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "sensor"] + [f"v{i}" for i in range(1, _MAX_VALUES + 1)])
        for t, _, sensor, vals in rows:
            writer.writerow([_fmt(t), sensor] + [_fmt(v) for v in vals])


# ---------------------------------------------------------------------------
# Estimate / metric / diagnostic emission
# ---------------------------------------------------------------------------

_EST_HEADER = (["t_s", "va1", "va2", "va3", "z1", "z2", "z3"]
               + [f"r{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
               + [f"p{i}{i}" for i in (1, 2, 3, 4, 5, 6)]
               + ["airspeed", "alpha", "beta"])


def write_estimates_csv(path, outputs: EstimatorOutputs) -> None:
    """One row per IMU step; aero-angle cells are empty when unavailable."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_EST_HEADER)
        for i in range(len(outputs)):
            aero = [outputs.airspeed[i], outputs.alpha[i], outputs.beta[i]]
            row = ([_fmt(outputs.t[i])]
                   + [_fmt(v) for v in outputs.air_velocity[i]]
                   + [_fmt(v) for v in outputs.tilt[i]]
                   + [_fmt(v) for v in outputs.attitude[i].ravel()]
                   + [_fmt(v) for v in outputs.cov_diag[i]]
                   + ["" if not np.isfinite(v) else _fmt(v) for v in aero])
            writer.writerow(row)


def read_estimates_csv(path) -> EstimatorOutputs:
    """Parse an estimates CSV back into column arrays."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _EST_HEADER:
            raise SchemaError("unexpected estimates header", line=1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(_EST_HEADER):
                raise SchemaError(f"expected {len(_EST_HEADER)} columns", line=line)
            rows.append([float(c) if c != "" else np.nan for c in row])
    data = np.array(rows) if rows else np.empty((0, len(_EST_HEADER)))
    return EstimatorOutputs(
        t=data[:, 0], air_velocity=data[:, 1:4], tilt=data[:, 4:7],
        attitude=data[:, 7:16].reshape(-1, 3, 3), cov_diag=data[:, 16:22],
        airspeed=data[:, 22], alpha=data[:, 23], beta=data[:, 24])


def write_metrics_csv(path, ev) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "air_vel_err", "tilt_err", "att_err"])
        for i in range(len(ev.t)):
            writer.writerow([_fmt(ev.t[i]), _fmt(ev.air_vel_err[i]),
                             _fmt(ev.tilt_err[i]), _fmt(ev.att_err[i])])


def write_windows_csv(path, rows) -> None:
    """Per-window observability diagnostics rows."""
    cols = ["t_start", "t_end", "min_eig_gramian", "cond_gramian",
            "min_eig_sigma", "cond_M"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in rows:
            writer.writerow([_fmt(r[c]) for c in cols])


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Run configuration files
# ---------------------------------------------------------------------------


@dataclass
class RunSettings:
    """Aggregated settings for a simulate/replay/observability run."""

    observer: ObserverConfig = field(default_factory=ObserverConfig)
    init: InitialConditions = field(default_factory=InitialConditions)
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    noise: SensorNoiseSpec = field(default_factory=SensorNoiseSpec)
    rates: SensorRates = field(default_factory=SensorRates)
    wind: tuple = (0.0, 0.0, 0.0)
    seed: int = 0
    oversample: int = 10
    t0: float | None = None


def _parse_value(raw: str):
    raw = raw.strip()
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if ";" in raw:
        return [_parse_value(part) for part in raw.split(";")]
    if "," in raw:
        return tuple(float(p) for p in raw.split(","))
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config_file(path) -> dict:
    """Parse a flat ``key = value`` config file into a mapping."""
    mapping = {}
    with open(path) as fh:
        for line, text in enumerate(fh, start=1):
            text = text.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(f"expected 'key = value', got {text!r}", line=line)
            key, raw = text.split("=", 1)
            mapping[key.strip()] = _parse_value(raw)
    return mapping


_KNOWN_KEYS = {
    "gravity", "imu.rate", "pitot.rate", "mag.rate",
    "pitot.axes", "pitot.pseudo_sideslip", "pitot.var", "pitot.pseudo_var",
    "process.diag", "gains.k_z", "gains.k_m", "mag.inertial", "filter.joseph",
    "init.air_velocity", "init.euler_zyx", "init.cov_diag",
    "traj.kind", "traj.duration", "traj.air_velocity", "traj.yaw_rate",
    "traj.bank", "traj.pitch", "traj.pitch_amplitude", "traj.pitch_period",
    "traj.tumble_rate", "traj.yaw0",
    "noise.gyro_density", "noise.accel_density", "noise.pitot_var", "noise.mag_sigma",
    "sim.seed", "sim.wind", "sim.oversample", "replay.t0",
}


def _vec(value, n, key) -> tuple:
    if np.isscalar(value):
        value = (float(value),)
    if len(value) != n:
        raise ConfigError(f"{key} needs {n} comma-separated values")
    return tuple(float(v) for v in value)


def build_settings(mapping: dict) -> RunSettings:
    """Turn a flat config mapping into typed run settings.

    Raises ``ConfigError`` on unknown keys or malformed values.
    """
    unknown = set(mapping) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    s = RunSettings()
    m = mapping

    axes = m.get("pitot.axes")
    if axes is not None:
        axes = axes if isinstance(axes, list) else [axes]
        axes = tuple(_vec(a, 3, "pitot.axes") for a in axes)
    pitot_kwargs = {}
    if axes is not None:
        pitot_kwargs["axes"] = axes
    if "pitot.pseudo_sideslip" in m:
        pitot_kwargs["pseudo_sideslip"] = bool(m["pitot.pseudo_sideslip"])
    if pitot_kwargs:
        defaults = PitotConfig(pseudo_sideslip=True)
        pitot_kwargs.setdefault("axes", defaults.axes)
        pitot_kwargs.setdefault("pseudo_sideslip", defaults.pseudo_sideslip)
        s.observer.pitot = PitotConfig(**pitot_kwargs)
    if "pitot.var" in m:
        s.observer.pitot_var = float(m["pitot.var"])
    if "pitot.pseudo_var" in m:
        s.observer.pseudo_var = float(m["pitot.pseudo_var"])
    if "process.diag" in m:
        s.observer.process_cov = np.diag(_vec(m["process.diag"], 6, "process.diag"))
    if "gains.k_z" in m or "gains.k_m" in m:
        s.observer.gains = AttitudeGains(
            k_z=float(m.get("gains.k_z", 2.0)), k_m=float(m.get("gains.k_m", 1.0)))
    if "gravity" in m:
        s.observer.g = float(m["gravity"])
    if "imu.rate" in m:
        s.observer.ts = 1.0 / float(m["imu.rate"])
    if "mag.inertial" in m:
        s.observer.mag_inertial = np.array(_vec(m["mag.inertial"], 3, "mag.inertial"))
    if "filter.joseph" in m:
        s.observer.joseph = bool(m["filter.joseph"])

    init_kwargs = {}
    if "init.air_velocity" in m:
        init_kwargs["air_velocity"] = _vec(m["init.air_velocity"], 3, "init.air_velocity")
    if "init.euler_zyx" in m:
        init_kwargs["attitude"] = euler_zyx_to_rotation(
            *_vec(m["init.euler_zyx"], 3, "init.euler_zyx"))
    if "init.cov_diag" in m:
        init_kwargs["covariance"] = np.diag(_vec(m["init.cov_diag"], 6, "init.cov_diag"))
    if init_kwargs:
        s.init = InitialConditions(**init_kwargs)

    traj = s.trajectory
    if "traj.kind" in m:
        traj.kind = str(m["traj.kind"])
    for key, attr in (("traj.duration", "duration"), ("traj.yaw_rate", "yaw_rate"),
                      ("traj.bank", "bank"), ("traj.pitch", "pitch"),
                      ("traj.pitch_amplitude", "pitch_amplitude"),
                      ("traj.pitch_period", "pitch_period"), ("traj.yaw0", "yaw0")):
        if key in m:
            setattr(traj, attr, float(m[key]))
    if "traj.air_velocity" in m:
        traj.air_velocity = _vec(m["traj.air_velocity"], 3, "traj.air_velocity")
    if "traj.tumble_rate" in m:
        traj.tumble_rate = _vec(m["traj.tumble_rate"], 3, "traj.tumble_rate")

    for key, attr in (("noise.gyro_density", "gyro_density"),
                      ("noise.accel_density", "accel_density"),
                      ("noise.pitot_var", "pitot_var"),
                      ("noise.mag_sigma", "mag_sigma")):
        if key in m:
            setattr(s.noise, attr, float(m[key]))

    imu_rate = 1.0 / s.observer.ts
    s.rates = SensorRates(imu=imu_rate,
                          pitot=float(m.get("pitot.rate", 50.0)),
                          mag=float(m.get("mag.rate", 10.0)))
    if "sim.seed" in m:
        s.seed = int(m["sim.seed"])
    if "sim.wind" in m:
        s.wind = _vec(m["sim.wind"], 3, "sim.wind")
    if "sim.oversample" in m:
        s.oversample = int(m["sim.oversample"])
    if "replay.t0" in m:
        s.t0 = float(m["replay.t0"])
    return s


def load_settings(path=None) -> RunSettings:
    """Settings from a config file, or pure defaults when ``path`` is None."""
    if path is None:
        return RunSettings()
    return build_settings(parse_config_file(path))
