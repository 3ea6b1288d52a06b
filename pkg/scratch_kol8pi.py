import time

import numpy as np

from dashred.discrepancy import (algorithm1_search, build_library,
                                 sparse_regress, sparsity_sweep)
from dashred.harness import Config, build_context, run_experiment, sim_tendency_fn
from dashred.numerics import pod_compress

base = """
system = kolmogorov
seed = {seed}
grid.lx = 25.132741228718345
grid.ly = 25.132741228718345
pde.burn_in = 4000
pde.steps = 2000
pde.save_every = 5
pde.train_steps = 10000
shred.rank = {rank}
sensors.p = {p}
sensors.q = {q}
train.epochs = 70
assim.epochs = 800
"""

for seed in (11, 12):
    t0 = time.time()
    res20 = run_experiment(Config.parse(base.format(seed=seed, rank=40, p=10, q=10)),
                           f"/tmp/kol8pi_{seed}_20")
    s = res20.summary
    print(f"seed {seed} p+q=20: val {s['final_val_loss']:.3f} "
          f"rmse_dashred {s['rmse_dashred_final_quarter']:.3f} "
          f"rmse_sim {s['rmse_sim_final_quarter']:.3f} ({time.time()-t0:.0f}s)")
    t0 = time.time()
    res4 = run_experiment(Config.parse(base.format(seed=seed, rank=40, p=2, q=2)),
                          f"/tmp/kol8pi_{seed}_4")
    s4 = res4.summary
    print(f"seed {seed} p+q=4 : rmse_dashred {s4['rmse_dashred_final_quarter']:.3f} "
          f"({time.time()-t0:.0f}s)")

    # discovery from reconstructions
    cfg = Config.parse(base.format(seed=seed, rank=40, p=10, q=10))
    ctx = build_context(cfg)
    model = res20.state["model_a"]
    series = res20.state["real_series"]
    lib = build_library("kolmogorov")
    dt_save = float(series.times[1] - series.times[0])
    t_idx = list(range(model.lag, len(series) - 1, 2))[:120]
    prob = algorithm1_search(model, sim_tendency_fn(ctx), series, lib,
                             dt_save, t_idx, ctx.grid, ctx.params)
    sweep = sparsity_sweep(prob)
    ls = sparse_regress(prob, 0.0)
    print("  recon LS:", dict(zip(ls.term_names, np.round(ls.xi, 4))))
    print("  recon sparsity-mode:", sweep.sparsity_mode.support,
          "rmse-mode:", sweep.rmse_mode.support)

# POD check on the training data
X = res20.state["train_traj"].snapshots.T
for r in (32, 40, 64):
    pod = pod_compress(X, r)
    print(f"POD{r} trunc:",
          np.linalg.norm(X - pod.modes @ (pod.modes.T @ X)) / np.linalg.norm(X))
