"""Sensor placement, noisy measurement extraction, and lag-window datasets.

Sensors are identified by flat indices into the stacked state vector, so a
reading is literally ``snapshot[index]``; for multi-field systems the field
a sensor reads is the index divided by the grid size.  Placement draws
distinct grid locations uniformly at random and, for multi-field systems,
assigns fields to sensors in alternation (the choice of observed field is
not physically constrained here, so we spread sensors evenly).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .numerics import RngStream
from .pde.trajectory import Trajectory


@dataclass(frozen=True)
class SensorLayout:
    indices: np.ndarray        # flat state indices, distinct
    p: int                     # training sensors
    q: int                     # excess real-deployment sensors
    field_selector: np.ndarray # field read by each sensor
    state_dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "field_selector",
                           np.asarray(self.field_selector, dtype=int))
        if self.p < 1 or self.q < 0:
            raise ValueError("need p >= 1 and q >= 0")
        if idx.size != self.p + self.q:
            raise ValueError("layout size != p + q")
        if len(set(idx.tolist())) != idx.size:
            raise ValueError("sensor indices must be distinct")
        if idx.min() < 0 or idx.max() >= self.state_dim:
            raise ValueError("sensor index out of range")

    @property
    def count(self) -> int:
        return self.p + self.q


def place_sensors(state_dim: int, p: int, q: int, rng: RngStream,
                  field_count: int = 1) -> SensorLayout:
    """Uniform random sensor placement, reproducible per seed.

    Fields are assigned in alternation; locations are drawn without
    replacement within each field, so two sensors may share a grid point
    only when they read different fields.
    """
    grid_size = state_dim // field_count
    if field_count * grid_size != state_dim:
        raise ValueError("state_dim must be a multiple of field_count")
    n = p + q
    fields = np.arange(n) % field_count
    per_field = np.bincount(fields, minlength=field_count)
    if per_field.max() > grid_size:
        raise ValueError(
            f"p+q = {n} across {field_count} field(s) exceeds grid size "
            f"{grid_size}")
    gen = rng.generator()
    locations = np.empty(n, dtype=int)
    for f in range(field_count):
        locations[fields == f] = gen.choice(grid_size, size=int(per_field[f]),
                                            replace=False)
    return SensorLayout(indices=fields * grid_size + locations, p=p, q=q,
                        field_selector=fields, state_dim=state_dim)


@dataclass(frozen=True)
class SensorSeries:
    times: np.ndarray
    readings: np.ndarray       # shape (n_times, p+q)
    noise_level: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        r = np.asarray(self.readings, dtype=float)
        if r.ndim != 2 or r.shape[0] != t.size:
            raise ValueError("readings must be (n_times, n_sensors)")
        if not np.all(np.isfinite(r)):
            raise ValueError("readings contain non-finite values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "readings", r)

    @property
    def n_sensors(self) -> int:
        return self.readings.shape[1]

    def __len__(self) -> int:
        return self.times.size


def measure(traj: Trajectory, layout: SensorLayout, noise_level: float = 0.0,
            rng: RngStream | None = None) -> SensorSeries:
    """Sample the trajectory at the sensor locations, plus Gaussian noise.

    The noise standard deviation for a sensor is ``noise_level`` times the
    standard deviation, over the whole trajectory, of the field that sensor
    reads (the "n% noise" convention; with noise_level=0 the readings are
    exact samples).
    """
    if layout.state_dim != traj.state_dim:
        raise ValueError("layout does not match trajectory state dimension")
    clean = traj.snapshots[:, layout.indices]
    if noise_level == 0.0:
        return SensorSeries(traj.times, clean.copy(), 0.0)
    if rng is None:
        raise ValueError("noisy measurement requires an RngStream")
    grid_size = traj.state_dim // traj.field_count
    per_field_std = np.array([
        traj.snapshots[:, f * grid_size:(f + 1) * grid_size].std()
        for f in range(traj.field_count)])
    scale = noise_level * per_field_std[layout.field_selector]
    noise = rng.generator().standard_normal(clean.shape) * scale
    return SensorSeries(traj.times, clean + noise, noise_level)


def build_windows(series: SensorSeries, k: int):
    """All full lag windows: array (m-k+1, k, n_sensors) plus target indices.

    Window i ends at series index ``targets[i]`` = k-1+i, and its last row
    equals the reading at that index; warm-up windows that would need
    zero padding are excluded.
    """
    if k < 2:
        raise ValueError("lag window length must be >= 2")
    m = len(series)
    if k >= m + 1:
        raise ValueError(f"lag k={k} too long for a series of length {m}")
    idx = np.arange(k)[None, :] + np.arange(m - k + 1)[:, None]
    windows = series.readings[idx]
    targets = np.arange(k - 1, m)
    return windows, targets


def window_ending_at(series: SensorSeries, k: int, t: int) -> np.ndarray:
    """The single k-row window whose last row is series index t."""
    if t < k - 1 or t >= len(series):
        raise ValueError(f"no full window ends at index {t}")
    return series.readings[t - k + 1:t + 1]


def series_to_csv(series: SensorSeries) -> str:
    """CSV export: header t,s_0,...,s_{n-1}; 17 significant digits."""
    buf = io.StringIO()
    cols = ",".join(f"s_{j}" for j in range(series.n_sensors))
    buf.write(f"t,{cols}\n")
    for t, row in zip(series.times, series.readings):
        vals = ",".join(f"{v:.17g}" for v in row)
        buf.write(f"{t:.17g},{vals}\n")
    return buf.getvalue()


def series_from_csv(text: str) -> SensorSeries:
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    if header[0] != "t" or any(not h.startswith("s_") for h in header[1:]):
        raise ValueError("not a sensor-series CSV")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return SensorSeries(times=rows[:, 0], readings=rows[:, 1:], noise_level=0.0)
