"""Trajectory container and its binary file format.

File layout (all little-endian):

    magic "DASF" | u16 version=1 | u8 field_count | u8 ndim |
    u64 dims[ndim] | u64 snapshot_count | f64 times[count] |
    f64 snapshots[count * field_count * prod(dims)]   (row-major)

Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"DASF"
VERSION = 1


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered full-state snapshots, one flat state vector per time."""

    times: np.ndarray
    snapshots: np.ndarray          # shape (n_times, state_dim)
    field_count: int
    dims: tuple                    # per-axis grid point counts, () for 0-D
    system: object = None          # SystemId, when known
    grid: object = field(default=None, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        snaps = np.asarray(self.snapshots, dtype=float)
        if snaps.ndim != 2 or snaps.shape[0] != times.size:
            raise ValueError("snapshots must be (n_times, state_dim)")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        expected = self.field_count * int(np.prod(self.dims, dtype=int))
        if snaps.shape[1] != expected:
            raise ValueError(
                f"state dim {snaps.shape[1]} != field_count * prod(dims) = {expected}")
        if not np.all(np.isfinite(snaps)):
            raise ValueError("trajectory contains non-finite snapshots")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "snapshots", snaps)

    @property
    def state_dim(self) -> int:
        return self.snapshots.shape[1]

    @property
    def n_times(self) -> int:
        return self.times.size

    def fields_at(self, t_index: int) -> np.ndarray:
        """Snapshot t_index reshaped to (field_count, *dims)."""
        return self.snapshots[t_index].reshape(self.field_count, *self.dims)


def write_dasf(path, traj: Trajectory) -> None:
    dims = tuple(int(d) for d in traj.dims)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HBB", VERSION, traj.field_count, len(dims)))
        for d in dims:
            f.write(struct.pack("<Q", d))
        f.write(struct.pack("<Q", traj.n_times))
        f.write(traj.times.astype("<f8").tobytes())
        f.write(np.ascontiguousarray(traj.snapshots, dtype="<f8").tobytes())


def read_dasf(path) -> Trajectory:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        version, field_count, ndim = struct.unpack("<HBB", f.read(4))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        dims = tuple(struct.unpack("<Q", f.read(8))[0] for _ in range(ndim))
        (count,) = struct.unpack("<Q", f.read(8))
        times = np.frombuffer(f.read(8 * count), dtype="<f8").copy()
        state_dim = field_count * int(np.prod(dims, dtype=int))
        data = np.frombuffer(f.read(8 * count * state_dim), dtype="<f8")
        if data.size != count * state_dim:
            raise ValueError(f"{path}: truncated snapshot payload")
        snaps = data.reshape(count, state_dim).copy()
    return Trajectory(times=times, snapshots=snaps, field_count=field_count,
                      dims=dims)
