"""Command-line surface: simulate / train / assimilate / discover / verify / run.

Stage commands operate on run directories: ``simulate`` writes trajectory
files plus a manifest echoing every resolved parameter, and downstream
commands read that manifest back as their config, so a pipeline can be
driven end to end from the shell or all at once via ``run``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..discrepancy import (algorithm1_search, algorithm2_advancing,
                           build_library, coefficients_csv, sparse_regress,
                           sparsity_sweep, sweep_csv)
from ..numerics import RngStream
from ..pde import SystemId, default_ic, integrate, read_dasf, write_dasf
from ..sensing import measure, place_sensors, series_from_csv, series_to_csv
from ..shred import (AssimilateConfig, TrainConfig, assimilate, load_model,
                     save_model, train_sim)
from ..pde.params import FIELD_COUNT
from .config import Config, ConfigError
from .experiment import (build_context, effective_config, run_experiment,
                         sim_tendency_fn, stage_seeds)
from .verify import SUITES, run_suite


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dashred",
        description="twin-experiment reconstruction and missing-physics "
                    "recovery from sparse sensors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one system variant")
    p.add_argument("--system", required=True)
    p.add_argument("--variant", default="sim",
                   choices=("sim", "real_a", "real_b"))
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train", help="train a model on a simulated run dir")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("assimilate",
                       help="adapt a trained model to a deployed sensor CSV")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--sensors", type=Path, required=True)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_assimilate)

    p = sub.add_parser("discover",
                       help="recover missing-physics terms from a run dir")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--algorithm", default="search",
                   choices=("search", "advancing"))
    p.add_argument("--sweep", action="store_true",
                   help="scan the regularization grid (default: single fit)")
    p.add_argument("--reg-weight", type=float, default=0.1)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("verify", help="run a fast oracle suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_run)
    return parser


def _load_config(path: Path | None, **overrides) -> Config:
    cfg = Config.load(path) if path else Config({})
    return cfg.with_values(**overrides) if overrides else cfg


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config, system=args.system,
                       truth_variant=args.variant)
    if "seed" not in cfg:
        cfg = cfg.with_values(seed=0)
    ctx = build_context(cfg)
    eff = effective_config(ctx)
    seeds = stage_seeds(ctx.master_seed)
    rng = RngStream(seeds["truth"]).generator()
    ic0 = default_ic(ctx.system, ctx.grid, rng)
    burn = eff.get_int("pde.burn_in")
    system = SystemId(ctx.system, args.variant)
    if burn:
        ic0 = integrate(system, ic0, ctx.grid, ctx.params, ctx.dt,
                        n_steps=burn, save_every=burn).snapshots[-1]
    traj = integrate(system, ic0, ctx.grid, ctx.params, ctx.dt,
                     n_steps=eff.get_int("pde.steps"),
                     save_every=eff.get_int("pde.save_every"))
    args.out.mkdir(parents=True, exist_ok=True)
    write_dasf(args.out / f"{ctx.system}_{args.variant}.dasf", traj)
    eff.save(args.out / "manifest.txt")
    for key in sorted(eff.values):
        if key.startswith("param."):
            print(f"{key} = {eff.values[key]}")
    print(f"wrote {args.out / f'{ctx.system}_{args.variant}.dasf'}")
    return 0


def _cmd_train(args) -> int:
    cfg = Config.load(args.data / "manifest.txt")
    ctx = build_context(cfg)
    eff = effective_config(ctx)
    seeds = stage_seeds(ctx.master_seed)
    name = ctx.system
    traj_path = next(p for p in (args.data / f"{name}_sim.dasf",
                                 args.data / "train_sim.dasf") if p.exists())
    traj = read_dasf(traj_path)
    sensors_path = args.data / "sensors_train.csv"
    if sensors_path.exists():
        series = series_from_csv(sensors_path.read_text())
        layout = _layout_from_series(ctx, eff, traj, seeds)
    else:
        layout = _layout_from_series(ctx, eff, traj, seeds)
        series = measure(traj, layout, 0.0)
    tc = TrainConfig(epochs=eff.get_int("train.epochs"),
                     batch=eff.get_int("train.batch"),
                     lr=eff.get_float("train.lr"),
                     val_frac=eff.get_float("train.val_frac"),
                     patience=eff.get_int("train.patience"),
                     seed=seeds["train"])
    model = train_sim(series, traj, rank=eff.get_int("shred.rank"),
                      config=tc, lag=eff.get_int("shred.lag"), layout=layout,
                      hidden=eff.get_int("shred.hidden"),
                      n_layers=eff.get_int("shred.layers"),
                      decoder_hidden=eff.get_int("shred.decoder_hidden"))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_model(args.out, model)
    print(f"final validation loss "
          f"{model.history['train']['val_loss'][-1]:.6g}; wrote {args.out}")
    return 0


def _layout_from_series(ctx, eff, traj, seeds):
    return place_sensors(traj.state_dim, eff.get_int("sensors.p"),
                         eff.get_int("sensors.q"), RngStream(seeds["sensors"]),
                         field_count=FIELD_COUNT[ctx.system])


def _cmd_assimilate(args) -> int:
    model = load_model(args.model)
    series = series_from_csv(args.sensors.read_text())
    cfg = _load_config(args.config)
    ac = AssimilateConfig(
        epochs=cfg.get_int("assim.epochs", 600),
        batch=cfg.get_int("assim.batch", 64),
        lr=cfg.get_float("assim.lr", 5e-4),
        patience=cfg.get_int("assim.patience", 60),
        seed=cfg.get_int("assim.seed", 0),
        unfreeze_encoder=cfg.get_bool("assim.unfreeze_encoder", False))
    adapted = assimilate(model, series, ac)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_model(args.out, adapted)
    h = adapted.history["assimilate"]
    print(f"sensor rmse {h['pre_sensor_rmse']:.6g} -> "
          f"{h['final_sensor_rmse']:.6g}; wrote {args.out}")
    return 0


def _cmd_discover(args) -> int:
    cfg = Config.load(args.data / "manifest.txt")
    ctx = build_context(cfg)
    eff = effective_config(ctx)
    model = load_model(args.model)
    series = series_from_csv((args.data / "sensors_real.csv").read_text())
    library = build_library(ctx.system)
    dt_save = float(series.times[1] - series.times[0])
    stride = eff.get_int("discover.stride")
    count = eff.get_int("discover.count")
    t_indices = list(range(model.lag, len(series) - 1, stride))[:count]
    if args.algorithm == "search":
        problem = algorithm1_search(model, sim_tendency_fn(ctx), series,
                                    library, dt_save, t_indices, ctx.grid,
                                    ctx.params)
    else:
        from ..sensing import SensorLayout

        layout = model.layout
        problem = algorithm2_advancing(model, series, library, layout,
                                       dt_save, t_indices, ctx.grid,
                                       ctx.params,
                                       radius=eff.get_float("discover.radius"))
    args.out.mkdir(parents=True, exist_ok=True)
    if args.sweep:
        sweep = sparsity_sweep(problem, mode=eff.get("discover.mode"))
        (args.out / "discovery_sweep.csv").write_text(sweep_csv(sweep))
        (args.out / "discovery_coefficients.csv").write_text(
            coefficients_csv(sweep.sparsity_mode))
        (args.out / "discovery_coefficients_rmse_mode.csv").write_text(
            coefficients_csv(sweep.rmse_mode))
        print("sparsity-mode support:", ", ".join(sweep.sparsity_mode.support)
              or "(empty)")
    else:
        coeffs = sparse_regress(problem, args.reg_weight,
                                mode=eff.get("discover.mode"))
        (args.out / "discovery_coefficients.csv").write_text(
            coefficients_csv(coeffs))
        print("support:", ", ".join(coeffs.support) or "(empty)")
    return 0


def _cmd_verify(args) -> int:
    passed, lines = run_suite(args.suite)
    for line in lines:
        print(line)
    print(f"suite {args.suite}: {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


def _cmd_run(args) -> int:
    cfg = Config.load(args.config)
    result = run_experiment(cfg, args.out)
    for key, val in sorted(result.summary.items()):
        print(f"{key} = {val}")
    print(f"run complete: {result.outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
