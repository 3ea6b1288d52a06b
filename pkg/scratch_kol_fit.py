import time

import numpy as np

from dashred.numerics import RngStream, pod_compress
from dashred.pde import Grid2D, SystemId, default_ic, default_params, integrate
from dashred.sensing import build_windows, measure, place_sensors
from dashred.shred import TrainConfig, train_sim

g = Grid2D(64, 64, 8 * np.pi, 8 * np.pi)
p = default_params("kolmogorov")
rng = np.random.default_rng(0)
ic0 = default_ic("kolmogorov", g, rng)
sid = SystemId("kolmogorov", "sim")
burn = integrate(sid, ic0, g, p, 0.01, n_steps=6000, save_every=6000)
traj = integrate(sid, burn.snapshots[-1], g, p, 0.01, n_steps=12000, save_every=5)
print("train data:", traj.n_times, "snapshots; std drift",
      traj.snapshots[:600].std(), traj.snapshots[-600:].std())

X = traj.snapshots.T
for r in (16, 24, 48):
    pod = pod_compress(X, r)
    print(f"POD{r} trunc:",
          np.linalg.norm(X - pod.modes @ (pod.modes.T @ X)) / np.linalg.norm(X))

layout = place_sensors(g.size, 10, 10, RngStream(42))
series = measure(traj, layout, 0.0)

for label, rank, lag, hidden, lr, epochs in [
    ("base", 24, 50, 64, 1e-3, 120),
    ("wide", 24, 50, 128, 1e-3, 120),
    ("short-lag", 24, 25, 64, 1e-3, 120),
    ("long-lag", 24, 100, 64, 1e-3, 120),
    ("low-lr", 24, 50, 64, 3e-4, 160),
]:
    t0 = time.time()
    cfg = TrainConfig(epochs=epochs, batch=64, lr=lr, val_frac=0.2,
                      patience=35, seed=1)
    model = train_sim(series, traj, rank=rank, config=cfg, lag=lag,
                      layout=layout, hidden=hidden)
    h = model.history["train"]
    w, tidx = build_windows(series, lag)
    nval = int(0.2 * len(w))
    recon = model.reconstruct(w[-nval:])
    xs = traj.snapshots[tidx[-nval:]]
    rel = np.linalg.norm(recon - xs) / np.linalg.norm(xs)
    print(f"{label}: val0 {h['val_loss'][0]:.3f} last-train {h['train_loss'][-1]:.3f} "
          f"best-val {min(h['val_loss']):.3f} epochs {len(h['train_loss'])} "
          f"field-rel {rel:.3f} ({time.time()-t0:.0f}s)")
