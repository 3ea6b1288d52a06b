"""End-to-end twin experiments: simulate, sense, train, adapt, measure,
and recover the missing physics, writing every artifact to a run directory.

A run is driven by a flat config plus one master seed; the seed is split
deterministically into one sub-seed per pipeline stage, and those are the
only sources of randomness, so re-running a config reproduces every CSV
byte and every checkpoint tensor.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..discrepancy import (algorithm1_search, algorithm2_advancing,
                           build_library, coefficients_csv, sparsity_sweep,
                           sweep_csv)
from ..numerics import RngStream
from ..pde import (DEFAULT_DT, DEFAULT_GRID, SystemId, default_ic, integrate,
                   params_as_dict, params_with_overrides, write_dasf)
from ..pde.params import FIELD_COUNT
from ..pde.systems import (grayscott_sim_tendency, kolmogorov_sim_tendency,
                           ks2d_sim_tendency, rde_sim_tendency)
from ..sensing import build_windows, measure, place_sensors, series_to_csv
from ..shred import (AssimilateConfig, TrainConfig, assimilate, save_model,
                     train_sim)
from .config import Config, ConfigError
from .metrics import MetricsSeries, rmse_series

STAGES = ("truth", "sim", "sensors", "train", "assimilate", "metrics",
          "discover")

# per-system pipeline defaults; every entry can be overridden from a config
PIPELINE_DEFAULTS = {
    "ks2d": dict(burn_in=800, steps=400, save_every=1, train_steps=1600,
                 p=5, q=5, noise=0.0, rank=32, lag=50,
                 train_epochs=60, assim_epochs=600),
    "kolmogorov": dict(burn_in=6000, steps=3000, save_every=10,
                       train_steps=24000, p=10, q=10, noise=0.0, rank=48,
                       lag=50, train_epochs=60, assim_epochs=600),
    "grayscott": dict(burn_in=2000, steps=2000, save_every=2,
                      train_steps=4000, p=10, q=10, noise=0.0, rank=32,
                      lag=50, train_epochs=60, assim_epochs=600),
    "rde1d": dict(burn_in=20000, steps=30000, save_every=50,
                  train_steps=100000, p=8, q=8, noise=0.0, rank=24, lag=50,
                  train_epochs=60, assim_epochs=800),
    "pendulum": dict(burn_in=0, steps=20000, save_every=20,
                     train_steps=40000, p=1, q=1, noise=0.05, rank=2, lag=50,
                     train_epochs=50, assim_epochs=400),
}


def worker_count() -> int:
    """Worker-thread cap from DASHRED_THREADS (default: hardware count)."""
    env = os.environ.get("DASHRED_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DASHRED_THREADS is not an integer: {env!r}")
    return os.cpu_count() or 1


@dataclass
class ExperimentContext:
    """Everything derived from a config before any stage runs."""

    system: str
    truth_variant: str
    grid: object
    params: object
    dt: float
    master_seed: int
    cfg: Config
    defaults: dict

    def geti(self, key, default):
        return self.cfg.get_int(key, default)

    def getf(self, key, default):
        return self.cfg.get_float(key, default)


def build_context(cfg: Config) -> ExperimentContext:
    system = cfg.require("system")
    if system not in PIPELINE_DEFAULTS:
        raise ConfigError(f"unknown system {system!r}")
    master = cfg.get_int("seed")
    truth_variant = cfg.get("truth_variant", "real_a")
    SystemId(system, truth_variant)  # validates the pair

    base = DEFAULT_GRID[system]()
    if system in ("ks2d", "kolmogorov", "grayscott"):
        grid = type(base)(nx=cfg.get_int("grid.nx", base.nx),
                          ny=cfg.get_int("grid.ny", base.ny),
                          lx=cfg.get_float("grid.lx", base.lx),
                          ly=cfg.get_float("grid.ly", base.ly))
    elif system == "rde1d":
        grid = type(base)(nx=cfg.get_int("grid.nx", base.nx),
                          lx=cfg.get_float("grid.lx", base.lx))
    else:
        grid = base

    overrides = {k: float(v) for k, v in cfg.subsection("param").items()}
    params = params_with_overrides(system, overrides)
    dt = cfg.get_float("pde.dt", DEFAULT_DT[system])
    return ExperimentContext(system=system, truth_variant=truth_variant,
                             grid=grid, params=params, dt=dt,
                             master_seed=master, cfg=cfg,
                             defaults=PIPELINE_DEFAULTS[system])


def stage_seeds(master_seed: int) -> dict:
    state = np.random.SeedSequence(master_seed).generate_state(
        len(STAGES), dtype=np.uint64)
    return {name: int(s) for name, s in zip(STAGES, state)}


def sim_tendency_fn(ctx: ExperimentContext):
    """Flat-state simulation tendency N(u) for the discovery algorithms."""
    g, p, system = ctx.grid, ctx.params, ctx.system

    if system == "ks2d":
        return lambda s: ks2d_sim_tendency(s.reshape(g.shape), g, p).ravel()
    if system == "kolmogorov":
        return lambda s: kolmogorov_sim_tendency(s.reshape(g.shape), g, p).ravel()
    if system == "grayscott":
        def fn(s):
            u, v = s.reshape(2, *g.shape)
            du, dv = grayscott_sim_tendency(u, v, g, p)
            return np.concatenate([du.ravel(), dv.ravel()])
        return fn
    if system == "rde1d":
        def fn(s):
            du, dlam = rde_sim_tendency(s[:g.nx], s[g.nx:], g, p)
            return np.concatenate([du, dlam])
        return fn
    raise ConfigError(f"no simulation tendency registered for {system!r}")


def effective_config(ctx: ExperimentContext) -> Config:
    """The config with every default materialized (manifest echo)."""
    d = ctx.defaults
    cfg = ctx.cfg
    eff = {
        "system": ctx.system,
        "truth_variant": ctx.truth_variant,
        "seed": str(ctx.master_seed),
        "pde.dt": repr(ctx.dt),
        "pde.burn_in": str(cfg.get_int("pde.burn_in", d["burn_in"])),
        "pde.steps": str(cfg.get_int("pde.steps", d["steps"])),
        "pde.save_every": str(cfg.get_int("pde.save_every", d["save_every"])),
        "pde.train_steps": str(cfg.get_int("pde.train_steps", d["train_steps"])),
        "sensors.p": str(cfg.get_int("sensors.p", d["p"])),
        "sensors.q": str(cfg.get_int("sensors.q", d["q"])),
        "sensors.noise": repr(cfg.get_float("sensors.noise", d["noise"])),
        "shred.rank": str(cfg.get_int("shred.rank", d["rank"])),
        "shred.lag": str(cfg.get_int("shred.lag", d["lag"])),
        "shred.hidden": str(cfg.get_int("shred.hidden", 64)),
        "shred.layers": str(cfg.get_int("shred.layers", 2)),
        "shred.decoder_hidden": str(cfg.get_int("shred.decoder_hidden", 350)),
        "train.epochs": str(cfg.get_int("train.epochs", d["train_epochs"])),
        "train.batch": str(cfg.get_int("train.batch", 64)),
        "train.lr": repr(cfg.get_float("train.lr", 1e-3)),
        "train.val_frac": repr(cfg.get_float("train.val_frac", 0.2)),
        "train.patience": str(cfg.get_int("train.patience", 25)),
        "assim.epochs": str(cfg.get_int("assim.epochs", d["assim_epochs"])),
        "assim.batch": str(cfg.get_int("assim.batch", 64)),
        "assim.lr": repr(cfg.get_float("assim.lr", 5e-4)),
        "assim.patience": str(cfg.get_int("assim.patience", 60)),
        "assim.unfreeze_encoder":
            str(cfg.get_bool("assim.unfreeze_encoder", False)).lower(),
        "discover.enabled":
            str(cfg.get_bool("discover.enabled", False)).lower(),
        "discover.algorithm": cfg.get("discover.algorithm", "search"),
        "discover.mode": cfg.get("discover.mode", "stlsq"),
        "discover.count": str(cfg.get_int("discover.count", 60)),
        "discover.stride": str(cfg.get_int("discover.stride", 1)),
        "discover.radius": repr(cfg.get_float("discover.radius", 2.0)),
    }
    for name, value in params_as_dict(ctx.params).items():
        eff[f"param.{name}"] = repr(value)
    if hasattr(ctx.grid, "ny"):
        eff.update({"grid.nx": str(ctx.grid.nx), "grid.ny": str(ctx.grid.ny),
                    "grid.lx": repr(ctx.grid.lx), "grid.ly": repr(ctx.grid.ly)})
    elif hasattr(ctx.grid, "nx"):
        eff.update({"grid.nx": str(ctx.grid.nx), "grid.lx": repr(ctx.grid.lx)})
    return Config(eff)


@dataclass
class RunResult:
    outdir: Path
    statuses: dict
    summary: dict = field(default_factory=dict)
    state: dict = field(default_factory=dict)  # in-memory stage products


def run_experiment(cfg: Config, outdir) -> RunResult:
    """Run the full pipeline; always writes a manifest, partial on failure."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = build_context(cfg)
    eff = effective_config(ctx)
    seeds = stage_seeds(ctx.master_seed)
    statuses = {name: "skipped" for name in STAGES}
    summary: dict = {}
    state: dict = {}

    def write_manifest():
        manifest = Config(dict(eff.values))
        for name in STAGES:
            manifest.values[f"stage.{name}.status"] = statuses[name]
            manifest.values[f"stage.{name}.seed"] = str(seeds[name])
        manifest.save(outdir / "manifest.txt")

    try:
        for name in STAGES:
            if name == "discover" and not eff.get_bool("discover.enabled"):
                statuses[name] = "skipped"
                continue
            _STAGE_FUNCS[name](ctx, eff, seeds[name], outdir, state, summary)
            statuses[name] = "ok"
    except Exception as exc:
        statuses[name] = f"failed: {type(exc).__name__}"
        write_manifest()
        raise
    write_manifest()
    return RunResult(outdir=outdir, statuses=statuses, summary=summary,
                     state=state)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _stage_truth(ctx, eff, seed, outdir, state, summary):
    rng = RngStream(seed).generator()
    ic0 = default_ic(ctx.system, ctx.grid, rng)
    burn = eff.get_int("pde.burn_in")
    truth_id = SystemId(ctx.system, ctx.truth_variant)
    if burn:
        ic_truth = integrate(truth_id, ic0, ctx.grid, ctx.params, ctx.dt,
                             n_steps=burn, save_every=burn).snapshots[-1]
    else:
        ic_truth = ic0
    truth = integrate(truth_id, ic_truth, ctx.grid, ctx.params, ctx.dt,
                      n_steps=eff.get_int("pde.steps"),
                      save_every=eff.get_int("pde.save_every"))
    write_dasf(outdir / "truth.dasf", truth)
    state["ic0"] = ic0
    state["ic_truth"] = ic_truth
    state["truth"] = truth


def _stage_sim(ctx, eff, seed, outdir, state, summary):
    sim_id = SystemId(ctx.system, "sim")
    prior = integrate(sim_id, state["ic_truth"], ctx.grid, ctx.params, ctx.dt,
                      n_steps=eff.get_int("pde.steps"),
                      save_every=eff.get_int("pde.save_every"))
    write_dasf(outdir / "sim_prior.dasf", prior)
    burn = eff.get_int("pde.burn_in")
    if burn:
        ic_train = integrate(sim_id, state["ic0"], ctx.grid, ctx.params,
                             ctx.dt, n_steps=burn,
                             save_every=burn).snapshots[-1]
    else:
        ic_train = state["ic0"]
    train_traj = integrate(sim_id, ic_train, ctx.grid, ctx.params, ctx.dt,
                           n_steps=eff.get_int("pde.train_steps"),
                           save_every=eff.get_int("pde.save_every"))
    write_dasf(outdir / "train_sim.dasf", train_traj)
    state["prior"] = prior
    state["train_traj"] = train_traj


def _stage_sensors(ctx, eff, seed, outdir, state, summary):
    place_rng, noise_rng = RngStream(seed).split(2)
    layout = place_sensors(state["truth"].state_dim,
                           eff.get_int("sensors.p"), eff.get_int("sensors.q"),
                           place_rng, field_count=FIELD_COUNT[ctx.system])
    train_series = measure(state["train_traj"], layout, 0.0)
    real_series = measure(state["truth"], layout,
                          eff.get_float("sensors.noise"), noise_rng)
    (outdir / "sensors_train.csv").write_text(series_to_csv(train_series))
    (outdir / "sensors_real.csv").write_text(series_to_csv(real_series))
    state["layout"] = layout
    state["train_series"] = train_series
    state["real_series"] = real_series


def _stage_train(ctx, eff, seed, outdir, state, summary):
    tc = TrainConfig(epochs=eff.get_int("train.epochs"),
                     batch=eff.get_int("train.batch"),
                     lr=eff.get_float("train.lr"),
                     val_frac=eff.get_float("train.val_frac"),
                     patience=eff.get_int("train.patience"),
                     seed=seed)
    model = train_sim(state["train_series"], state["train_traj"],
                      rank=eff.get_int("shred.rank"), config=tc,
                      lag=eff.get_int("shred.lag"), layout=state["layout"],
                      hidden=eff.get_int("shred.hidden"),
                      n_layers=eff.get_int("shred.layers"),
                      decoder_hidden=eff.get_int("shred.decoder_hidden"))
    save_model(outdir / "model_sim.dasm", model)
    summary["final_val_loss"] = model.history["train"]["val_loss"][-1]
    state["model"] = model


def _stage_assimilate(ctx, eff, seed, outdir, state, summary):
    ac = AssimilateConfig(
        epochs=eff.get_int("assim.epochs"), batch=eff.get_int("assim.batch"),
        lr=eff.get_float("assim.lr"), patience=eff.get_int("assim.patience"),
        seed=seed,
        unfreeze_encoder=eff.get_bool("assim.unfreeze_encoder"))
    model_a = assimilate(state["model"], state["real_series"], ac)
    save_model(outdir / "model_dashred.dasm", model_a)
    h = model_a.history["assimilate"]
    summary["pre_sensor_rmse"] = h["pre_sensor_rmse"]
    summary["final_sensor_rmse"] = h["final_sensor_rmse"]
    state["model_a"] = model_a


def _stage_metrics(ctx, eff, seed, outdir, state, summary):
    model_a = state["model_a"]
    truth, prior = state["truth"], state["prior"]
    series = state["real_series"]
    windows, t_idx = build_windows(series, model_a.lag)
    recon = model_a.reconstruct(windows)
    times = truth.times[t_idx]
    rmse_dashred = rmse_series(recon, truth.snapshots[t_idx])
    rmse_sim = rmse_series(prior.snapshots[t_idx], truth.snapshots[t_idx])
    pred_sensors = recon[:, model_a.layout.indices]
    rmse_sensor = np.sqrt(np.mean(
        (pred_sensors - series.readings[t_idx]) ** 2, axis=1))
    m = MetricsSeries(times=times, rmse_sim=rmse_sim,
                      rmse_dashred=rmse_dashred, rmse_sensor=rmse_sensor)
    (outdir / "metrics.csv").write_text(m.to_csv())
    quarter = times >= times[0] + 0.75 * (times[-1] - times[0])
    summary["rmse_sim_final_quarter"] = float(rmse_sim[quarter].mean())
    summary["rmse_dashred_final_quarter"] = float(rmse_dashred[quarter].mean())
    state["metrics"] = m


def _stage_discover(ctx, eff, seed, outdir, state, summary):
    model_a = state["model_a"]
    series = state["real_series"]
    library = build_library(ctx.system)
    dt_save = float(series.times[1] - series.times[0])
    lag = model_a.lag
    stride = eff.get_int("discover.stride")
    count = eff.get_int("discover.count")
    t_lo, t_hi = lag, len(series) - 2
    t_indices = list(range(t_lo, t_hi + 1, stride))[:count]
    algorithm = eff.get("discover.algorithm")
    if algorithm == "search":
        problem = algorithm1_search(model_a, sim_tendency_fn(ctx), series,
                                    library, dt_save, t_indices, ctx.grid,
                                    ctx.params)
    elif algorithm == "advancing":
        problem = algorithm2_advancing(model_a, series, library,
                                       state["layout"], dt_save, t_indices,
                                       ctx.grid, ctx.params,
                                       radius=eff.get_float("discover.radius"))
    else:
        raise ConfigError(f"unknown discovery algorithm {algorithm!r}")
    sweep = sparsity_sweep(problem, mode=eff.get("discover.mode"))
    (outdir / "discovery_sweep.csv").write_text(sweep_csv(sweep))
    (outdir / "discovery_coefficients.csv").write_text(
        coefficients_csv(sweep.sparsity_mode))
    (outdir / "discovery_coefficients_rmse_mode.csv").write_text(
        coefficients_csv(sweep.rmse_mode))
    summary["discovered_support"] = sweep.sparsity_mode.support
    summary["rmse_mode_support"] = sweep.rmse_mode.support
    state["sweep"] = sweep


_STAGE_FUNCS = {
    "truth": _stage_truth,
    "sim": _stage_sim,
    "sensors": _stage_sensors,
    "train": _stage_train,
    "assimilate": _stage_assimilate,
    "metrics": _stage_metrics,
    "discover": _stage_discover,
}
