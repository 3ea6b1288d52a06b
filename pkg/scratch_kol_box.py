import time
import warnings

import numpy as np

warnings.filterwarnings("ignore")

from dashred.numerics import RngStream, pod_compress
from dashred.pde import Grid2D, SystemId, default_ic, integrate, params_with_overrides
from dashred.sensing import build_windows, measure, place_sensors
from dashred.shred.model import _block_split

g = Grid2D(64, 64, 4 * np.pi, 4 * np.pi)

for mu in (0.1, 0.3):
    p = params_with_overrides("kolmogorov", {"mu": mu})
    rng = np.random.default_rng(0)
    ic0 = default_ic("kolmogorov", g, rng)
    t0 = time.time()
    burn = integrate(SystemId("kolmogorov", "sim"), ic0, g, p, 0.01,
                     n_steps=40000, save_every=40000)
    traj = integrate(SystemId("kolmogorov", "sim"), burn.snapshots[-1], g, p,
                     0.01, n_steps=24000, save_every=10)
    X = traj.snapshots.T
    pod = pod_compress(X, 32)
    trunc = np.linalg.norm(X - pod.modes @ (pod.modes.T @ X)) / np.linalg.norm(X)
    fluct = traj.snapshots - traj.snapshots.mean(0)
    print(f"mu={mu} SIM: std {traj.snapshots.std():.3f} fluct/std "
          f"{fluct.std()/traj.snapshots.std():.3f} POD32 {trunc:.4f} "
          f"drift {traj.snapshots[:600].std():.3f}->{traj.snapshots[-600:].std():.3f}")

    layout = place_sensors(g.size, 10, 10, RngStream(42))
    series = measure(traj, layout, 0.0)
    c = traj.snapshots @ pod.modes
    targets = (c - c.mean(0)) / (c - c.mean(0)).std()
    w, tidx = build_windows(series, 50)
    flat = w.reshape(w.shape[0], -1)
    flat = (flat - flat.mean(0)) / (flat.std(0) + 1e-12)
    y = targets[tidx]
    n = len(flat)
    tr, va = _block_split(n, int(0.2 * n), 50)
    A = np.hstack([flat, np.ones((n, 1))])
    W = np.linalg.solve(A[tr].T @ A[tr] + 1.0 * np.eye(A.shape[1]),
                        A[tr].T @ y[tr])
    print(f"  ridge block-val {np.mean((A[va] @ W - y[va]) ** 2):.4f} "
          f"({time.time()-t0:.0f}s)")

    burn_r = integrate(SystemId("kolmogorov", "real_a"), ic0, g, p, 0.01,
                       n_steps=20000, save_every=20000)
    real = integrate(SystemId("kolmogorov", "real_a"), burn_r.snapshots[-1],
                     g, p, 0.01, n_steps=8000, save_every=10)
    fluct_r = real.snapshots - real.snapshots.mean(0)
    print(f"  REAL: std {real.snapshots.std():.3f} "
          f"fluct/std {fluct_r.std()/max(real.snapshots.std(),1e-12):.3f}")
