import time

import numpy as np

from dashred.numerics import RngStream, pod_compress
from dashred.pde import *
from dashred.sensing import build_windows, measure, place_sensors
from dashred.shred import AssimilateConfig, TrainConfig, assimilate, train_sim

t_start = time.time()
g = Grid2D(64, 64, 64.0, 64.0)
dt = 0.05
rng = np.random.default_rng(42)

# burn-in both variants from the same seeded noise
ic0 = default_ic("ks2d", g, rng)
burn_real = integrate(SystemId("ks2d", "real_a"), ic0, g, dt=dt, n_steps=800, save_every=800)
burn_sim = integrate(SystemId("ks2d", "sim"), ic0, g, dt=dt, n_steps=800, save_every=800)
ic_truth = burn_real.snapshots[-1]
ic_train = burn_sim.snapshots[-1]
print(f"burn-in done {time.time()-t_start:.1f}s")

# truth (hidden) and the sim prior from the same IC
truth = integrate(SystemId("ks2d", "real_a"), ic_truth, g, dt=dt, n_steps=400, save_every=1)
prior = integrate(SystemId("ks2d", "sim"), ic_truth, g, dt=dt, n_steps=400, save_every=1)

# training trajectory: long sim run
train_traj = integrate(SystemId("ks2d", "sim"), ic_train, g, dt=dt, n_steps=1600, save_every=1)
print(f"integrations done {time.time()-t_start:.1f}s  train std {train_traj.snapshots.std():.3f} truth std {truth.snapshots.std():.3f}")

# POD truncation check
X = train_traj.snapshots.T
pod = pod_compress(X, 32)
proj = pod.modes @ (pod.modes.T @ X)
print("POD32 rel trunc (train):", np.linalg.norm(X - proj) / np.linalg.norm(X))
Xt = truth.snapshots.T
projt = pod.modes @ (pod.modes.T @ Xt)
print("POD32 rel trunc (truth fields, sim basis):", np.linalg.norm(Xt - projt) / np.linalg.norm(Xt))
for r in (48, 64):
    p2 = pod_compress(X, r)
    pr = p2.modes @ (p2.modes.T @ Xt)
    print(f"POD{r} truth-proj rel:", np.linalg.norm(Xt - pr) / np.linalg.norm(Xt))

layout = place_sensors(g.size, 5, 5, RngStream(7))
series = measure(train_traj, layout, 0.0)
cfg = TrainConfig(epochs=60, batch=64, lr=1e-3, val_frac=0.2, patience=15, seed=1)
t0 = time.time()
model = train_sim(series, train_traj, rank=32, config=cfg, lag=50, layout=layout)
print(f"train_sim {time.time()-t0:.1f}s val curve head/tail",
      model.history["train"]["val_loss"][:2], model.history["train"]["val_loss"][-2:])

# validation full-field error on sim data
w, tidx = build_windows(series, 50)
nval = int(0.2 * len(w))
recon = model.reconstruct(w[-nval:])
xs = train_traj.snapshots[tidx[-nval:]]
print("sim val full-field rel err:",
      np.linalg.norm(recon - xs) / np.linalg.norm(xs))

# assimilate on truth sensors
real_series = measure(truth, layout, 0.0)
t0 = time.time()
model_a = assimilate(model, real_series, AssimilateConfig(epochs=600, lr=5e-4, seed=2))
h = model_a.history["assimilate"]
print(f"assimilate {time.time()-t0:.1f}s sensor rmse pre/post: {h['pre_sensor_rmse']:.4f} {h['final_sensor_rmse']:.4f}")

# full-field RMSE over the horizon
wr, tr_idx = build_windows(real_series, 50)
recon_states = model_a.reconstruct(wr)
pre_states = model.reconstruct(wr)
err_da = np.sqrt(np.mean((recon_states - truth.snapshots[tr_idx]) ** 2, axis=1))
err_pre = np.sqrt(np.mean((pre_states - truth.snapshots[tr_idx]) ** 2, axis=1))
err_sim = np.sqrt(np.mean((prior.snapshots[tr_idx] - truth.snapshots[tr_idx]) ** 2, axis=1))
times = truth.times[tr_idx]
win = times >= 10.0
print(f"time-avg RMSE t in [10,20]: dashred {err_da[win].mean():.4f}  pre-assim {err_pre[win].mean():.4f}  sim prior {err_sim[win].mean():.4f}")
print(f"ratio dashred/sim: {err_da[win].mean()/err_sim[win].mean():.3f} (need <= 0.3)")
print(f"total {time.time()-t_start:.1f}s")
