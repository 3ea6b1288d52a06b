"""Reconstruction-quality metrics and their plot-ready CSV form."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from ..pde.trajectory import Trajectory


def rmse_series(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-time root-mean-square difference of two (m, n) snapshot stacks."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return np.sqrt(np.mean((a - b) ** 2, axis=1))


def compute_rmse(a: Trajectory, b: Trajectory) -> np.ndarray:
    """Per-time RMSE between two aligned trajectories."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValueError("trajectories are not time-aligned")
    return rmse_series(a.snapshots, b.snapshots)


@dataclass(frozen=True)
class MetricsSeries:
    times: np.ndarray
    rmse_sim: np.ndarray       # simulation prior vs hidden truth
    rmse_dashred: np.ndarray   # assimilated reconstruction vs hidden truth
    rmse_sensor: np.ndarray    # reconstruction at sensors vs actual readings

    def __post_init__(self):
        n = np.asarray(self.times).size
        for name in ("rmse_sim", "rmse_dashred", "rmse_sensor"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size != n:
                raise ValueError(f"{name} length != times length")
            if np.any(arr < 0):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,rmse_sim,rmse_dashred,rmse_sensor\n")
        for t, a, b, c in zip(self.times, self.rmse_sim, self.rmse_dashred,
                              self.rmse_sensor):
            buf.write(f"{t:.17g},{a:.17g},{b:.17g},{c:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MetricsSeries":
        lines = text.strip().splitlines()
        if lines[0] != "t,rmse_sim,rmse_dashred,rmse_sensor":
            raise ValueError("not a metrics CSV")
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        return cls(times=rows[:, 0], rmse_sim=rows[:, 1],
                   rmse_dashred=rows[:, 2], rmse_sensor=rows[:, 3])
