import time
import warnings

import numpy as np

warnings.filterwarnings("ignore")

from dashred.harness import Config, run_experiment

GS = """
system = grayscott
seed = {seed}
truth_variant = {variant}
discover.enabled = true
discover.algorithm = search
discover.count = 80
discover.stride = 4
"""

RDE = """
system = rde1d
seed = {seed}
truth_variant = {variant}
{extra}
discover.enabled = true
discover.algorithm = search
discover.count = 80
discover.stride = 4
"""


def front_track_score(res):
    import numpy as np

    from dashred.pde import read_dasf
    from dashred.sensing import build_windows, series_from_csv

    truth = read_dasf(res.outdir / "truth.dasf")
    from dashred.shred import load_model

    model = load_model(res.outdir / "model_dashred.dasm")
    series = series_from_csv((res.outdir / "sensors_real.csv").read_text())
    w, tidx = build_windows(series, model.lag)
    recon = model.reconstruct(w)
    nx = truth.dims[0]
    hits = 0
    for i, t in enumerate(tidx):
        p_true = int(np.argmax(truth.snapshots[t][:nx]))
        p_rec = int(np.argmax(recon[i][:nx]))
        d = min(abs(p_true - p_rec), nx - abs(p_true - p_rec))
        hits += d <= 2
    return hits / len(tidx)


for variant in ("real_a", "real_b"):
    t0 = time.time()
    extra = "param.eps2 = 0.01" if variant == "real_b" else ""
    cfg = Config.parse(GS.format(seed=21, variant=variant))
    res = run_experiment(cfg, f"/tmp/gs_{variant}")
    s = res.summary
    print(f"GS {variant}: val {s['final_val_loss']:.3f} "
          f"dashred {s['rmse_dashred_final_quarter']:.4f} "
          f"sim {s['rmse_sim_final_quarter']:.4f} "
          f"support {s['discovered_support']} rmse-mode {s['rmse_mode_support']} "
          f"({time.time()-t0:.0f}s)")

for variant in ("real_a", "real_b"):
    t0 = time.time()
    extra = "param.eps2 = 0.01" if variant == "real_b" else ""
    cfg = Config.parse(RDE.format(seed=31, variant=variant, extra=extra))
    res = run_experiment(cfg, f"/tmp/rde_{variant}")
    s = res.summary
    msg = (f"RDE {variant}: val {s['final_val_loss']:.3f} "
           f"dashred {s['rmse_dashred_final_quarter']:.4f} "
           f"sim {s['rmse_sim_final_quarter']:.4f} "
           f"support {s['discovered_support']} rmse-mode {s['rmse_mode_support']}")
    if variant == "real_a":
        msg += f" front-score {front_track_score(res):.3f}"
    print(msg, f"({time.time()-t0:.0f}s)")
