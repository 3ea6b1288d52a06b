"""Model checkpoints: a single file of length-prefixed named f64 tensors.

Layout (little-endian):

    magic "DASM" | u16 version=1 | repeated tensor records:
        u16 name_len | name bytes (utf-8) | u8 rank | u64 dims[rank] |
        f64 data[prod(dims)]   (row-major)

Everything needed to rebuild the model is stored as tensors, scalars as
rank-0 records.  Round-trips are bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from ..numerics import PodBasis
from ..sensing import SensorLayout
from .model import ShredModel

MAGIC = b"DASM"
VERSION = 1


def write_tensors(path, tensors: dict) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        for name in tensors:
            arr = np.asarray(tensors[name], dtype="<f8")
            enc = name.encode("utf-8")
            f.write(struct.pack("<H", len(enc)))
            f.write(enc)
            f.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<Q", d))
            f.write(np.ascontiguousarray(arr).tobytes())


def read_tensors(path) -> dict:
    tensors = {}
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        (version,) = struct.unpack("<H", f.read(2))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        while True:
            head = f.read(2)
            if not head:
                break
            (name_len,) = struct.unpack("<H", head)
            name = f.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<B", f.read(1))
            dims = tuple(struct.unpack("<Q", f.read(8))[0] for _ in range(rank))
            count = int(np.prod(dims, dtype=int)) if rank else 1
            data = np.frombuffer(f.read(8 * count), dtype="<f8")
            if data.size != count:
                raise ValueError(f"{path}: truncated tensor {name!r}")
            tensors[name] = data.reshape(dims).copy() if rank else float(data[0])
    return tensors


def save_model(path, model: ShredModel) -> None:
    t: dict = dict(model.params)
    t["pod.modes"] = model.pod.modes
    t["pod.singular_values"] = model.pod.singular_values
    t["std.mean"] = model.sensor_mean
    t["std.std"] = model.sensor_std
    t["coeff.mean"] = model.coeff_mean
    t["coeff.scale"] = np.float64(model.coeff_scale)
    t["layout.indices"] = model.layout.indices.astype(float)
    t["layout.fields"] = model.layout.field_selector.astype(float)
    for name, val in (("lag", model.lag), ("hidden", model.hidden),
                      ("n_layers", model.n_layers),
                      ("decoder_hidden", model.decoder_hidden),
                      ("rank", model.rank), ("p", model.layout.p),
                      ("q", model.layout.q),
                      ("state_dim", model.layout.state_dim)):
        t[f"meta.{name}"] = np.float64(val)
    write_tensors(path, t)


def load_model(path) -> ShredModel:
    t = read_tensors(path)
    meta = {k.split(".", 1)[1]: int(t.pop(k))
            for k in sorted(t) if k.startswith("meta.")}
    modes = t.pop("pod.modes")
    sv = t.pop("pod.singular_values")
    pod = PodBasis(n=modes.shape[0], r=modes.shape[1], modes=modes,
                   singular_values=sv)
    layout = SensorLayout(indices=t.pop("layout.indices").astype(int),
                          p=meta["p"], q=meta["q"],
                          field_selector=t.pop("layout.fields").astype(int),
                          state_dim=meta["state_dim"])
    sensor_mean = t.pop("std.mean")
    sensor_std = t.pop("std.std")
    coeff_mean = t.pop("coeff.mean")
    coeff_scale = float(t.pop("coeff.scale"))
    return ShredModel(params=t, pod=pod, lag=meta["lag"], layout=layout,
                      sensor_mean=sensor_mean, sensor_std=sensor_std,
                      coeff_mean=coeff_mean, coeff_scale=coeff_scale,
                      hidden=meta["hidden"], n_layers=meta["n_layers"],
                      decoder_hidden=meta["decoder_hidden"],
                      rank=meta["rank"])
