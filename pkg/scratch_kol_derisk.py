import time

import numpy as np

from dashred.discrepancy import (algorithm1_search, algorithm2_advancing,
                                 build_library, sparse_regress, sparsity_sweep,
                                 true_coefficients)
from dashred.harness import Config, run_experiment, sim_tendency_fn, build_context

t0 = time.time()
cfg = Config.parse("""
system = kolmogorov
seed = 11
discover.enabled = false
""")
res = run_experiment(cfg, "/tmp/kol_run")
print(f"pipeline {time.time()-t0:.0f}s summary:")
for k, v in sorted(res.summary.items()):
    print(" ", k, "=", v)

ctx = build_context(cfg)
model = res.state["model_a"]
series = res.state["real_series"]
truth = res.state["truth"]
library = build_library("kolmogorov")
dt_save = float(series.times[1] - series.times[0])

# exact-state oracle: substitute hidden-truth states for reconstructions
t_indices = list(range(model.lag, len(series) - 1, 3))[:80]
prob = algorithm1_search(model, sim_tendency_fn(ctx), series, library,
                         dt_save, t_indices, ctx.grid, ctx.params,
                         states=truth.snapshots)
ls = sparse_regress(prob, 0.0)
print("exact-state LS coefficients:", dict(zip(ls.term_names, np.round(ls.xi, 4))))
sweep = sparsity_sweep(prob)
print("exact-state sparsity-mode:", sweep.sparsity_mode.support,
      dict(zip(sweep.sparsity_mode.term_names, np.round(sweep.sparsity_mode.xi, 4))))
print("exact-state rmse-mode:", sweep.rmse_mode.support)

# full-pipeline (reconstruction-based) version
prob2 = algorithm1_search(model, sim_tendency_fn(ctx), series, library,
                          dt_save, t_indices, ctx.grid, ctx.params)
sweep2 = sparsity_sweep(prob2)
ls2 = sparse_regress(prob2, 0.0)
print("recon LS coefficients:", dict(zip(ls2.term_names, np.round(ls2.xi, 4))))
print("recon sparsity-mode:", sweep2.sparsity_mode.support,
      dict(zip(sweep2.sparsity_mode.term_names, np.round(sweep2.sparsity_mode.xi, 4))))
print("recon rmse-mode:", sweep2.rmse_mode.support)
print("true:", true_coefficients("kolmogorov", "real_a", ctx.params))
print(f"total {time.time()-t0:.0f}s")
