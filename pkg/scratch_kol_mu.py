import time
import warnings

import numpy as np

warnings.filterwarnings("ignore")

from dashred.numerics import RngStream, pod_compress
from dashred.pde import Grid2D, SystemId, default_ic, integrate, params_with_overrides
from dashred.sensing import build_windows, measure, place_sensors
from dashred.shred import TrainConfig, train_sim

g = Grid2D(64, 64, 8 * np.pi, 8 * np.pi)

for mu, save_every, steps in [(0.05, 10, 24000), (0.02, 10, 24000),
                              (0.05, 5, 12000), (0.1, 10, 24000)]:
    p = params_with_overrides("kolmogorov", {"mu": mu})
    rng = np.random.default_rng(0)
    ic0 = default_ic("kolmogorov", g, rng)
    sid = SystemId("kolmogorov", "sim")
    t0 = time.time()
    burn = integrate(sid, ic0, g, p, 0.01, n_steps=8000, save_every=8000)
    traj = integrate(sid, burn.snapshots[-1], g, p, 0.01, n_steps=steps,
                     save_every=save_every)
    X = traj.snapshots.T
    pod = pod_compress(X, 32)
    trunc = np.linalg.norm(X - pod.modes @ (pod.modes.T @ X)) / np.linalg.norm(X)
    drift = traj.snapshots[: traj.n_times // 4].std(), \
        traj.snapshots[-traj.n_times // 4:].std()
    layout = place_sensors(g.size, 10, 10, RngStream(42))
    series = measure(traj, layout, 0.0)
    cfg = TrainConfig(epochs=50, batch=64, lr=1e-3, val_frac=0.2, patience=50,
                      seed=1)
    model = train_sim(series, traj, rank=32, config=cfg, lag=50, layout=layout)
    h = model.history["train"]
    w, tidx = build_windows(series, 50)
    nval = int(0.2 * len(w))
    recon = model.reconstruct(w[-nval:])
    xs = traj.snapshots[tidx[-nval:]]
    rel = np.linalg.norm(recon - xs) / np.linalg.norm(xs)
    print(f"mu={mu} save={save_every}: POD32 {trunc:.3f} drift {drift[0]:.2f}->{drift[1]:.2f} "
          f"val0 {h['val_loss'][0]:.3f} best {min(h['val_loss']):.3f} "
          f"train {h['train_loss'][-1]:.3f} field-rel {rel:.3f} ({time.time()-t0:.0f}s)")
