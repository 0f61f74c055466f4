"""Command-line front end: one pipeline stage per sub-command.

Stages and the files they leave in the output directory::

    simulate  -> trajectory_<controller>.csv
    dataset   -> dataset.csv               (needs trajectory_fourier.csv)
    train     -> model.json, train_report.json, predictions.csv, history.csv
    grid      -> grid.csv, grid_runs.csv, grid_models/*.json
    sweep     -> sweep.csv                 (needs a model)
    plot      -> <name>.svg

Every data file gets a ``<file>.meta.json`` sidecar holding the config hash,
the seeds and the SHA-256 of the input artifacts. Nothing time-dependent is
written, so a rerun reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .control import NeuralControl
from .errors import CapsuleError, ConfigError
from .model import State
from .neural import Dataset, Mlp, build_dataset, fit, grid_run, split_shuffle, top_cells
from .plots import PLOT_KINDS, PlotSpec, render
from .robustness import sweep
from .sim import Trajectory, distance, simulate

FOURIER_TRAJECTORY = "trajectory_fourier.csv"
DATASET = "dataset.csv"
MODEL = "model.json"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # keep usage errors on one line like every other failure
        self.exit(2, f"{self.prog}: error: {message}\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_meta(artifact: Path, cfg: RunConfig, command: str, inputs: dict[str, Path] | None = None,
                extra: dict | None = None) -> None:
    meta = {
        "artifact": artifact.name,
        "command": command,
        "config_hash": cfg.hash(),
        "config": cfg.to_dict(),
        "seeds": cfg.to_dict()["seeds"],
        "inputs": {k: {"path": p.name, "sha256": _sha256(p)} for k, p in (inputs or {}).items()},
        "version": __version__,
    }
    if extra:
        meta.update(extra)
    Path(f"{artifact}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _require(path: Path, stage: str) -> Path:
    if not path.is_file():
        raise ConfigError(f"missing {path.name} in {path.parent}; run `capsule {stage}` first")
    return path


def _resolve_controller(choice: str, cfg: RunConfig, out: Path):
    """``(controller, id, model path or None)`` for a ``--controller`` value."""
    if choice == "fourier":
        return cfg.fourier.build(), "fourier", None
    if choice.startswith("model:"):
        path = Path(choice[len("model:"):])
        if not path.is_file():
            raise ConfigError(f"model file not found: {path}")
        return NeuralControl(Mlp.load(path)), f"model:{path.stem}", path
    if choice == "model":
        path = _require(out / MODEL, "train")
        return NeuralControl(Mlp.load(path)), f"model:{path.stem}", path
    raise ConfigError(f"--controller must be 'fourier', 'model' or 'model:PATH', got {choice!r}")


# -- commands -------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out: Path, controller: str = "fourier") -> float:
    law, cid, model_path = _resolve_controller(controller, cfg, out)
    traj = simulate(State(), law, cfg.capsule, cfg.sim, controller_id=cid)
    d = distance(traj)
    name = "fourier" if model_path is None else model_path.stem
    path = out / f"trajectory_{name}.csv"
    traj.to_csv(path)
    _write_meta(path, cfg, "simulate", {"model": model_path} if model_path else None,
                {"controller": cid, "distance": d, "mode_switches": traj.meta["events"]})
    print(f"distance {d:#.4g}")
    return d


def cmd_dataset(cfg: RunConfig, out: Path) -> Path:
    src = _require(out / FOURIER_TRAJECTORY, "simulate")
    data = build_dataset(Trajectory.from_csv(src))
    path = out / DATASET
    data.to_csv(path)
    _write_meta(path, cfg, "dataset", {"trajectory": src}, {"rows": len(data)})
    print(f"dataset {len(data)} rows -> {path}")
    return path


def _split(cfg: RunConfig, out: Path) -> tuple[Dataset, Path]:
    src = _require(out / DATASET, "dataset")
    return split_shuffle(Dataset.from_csv(src), cfg.net.split_fraction, cfg.seeds.split), src


def cmd_train(cfg: RunConfig, out: Path) -> Path:
    data, src = _split(cfg, out)
    ns = cfg.net
    net, report = fit(ns.neurons, ns.hidden_act, ns.output_act, data, cfg.train_config())
    path = out / MODEL
    net.meta["config_hash"] = cfg.hash()
    net.save(path)
    _write_meta(path, cfg, "train", {"dataset": src})

    rep_path = out / "train_report.json"
    rep = report.to_dict()
    hist = out / "history.csv"
    with open(hist, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("epoch", "train_mse", "test_mse"))
        for i, (a, b) in enumerate(zip(rep.pop("train_mse"), rep.pop("test_mse")), start=1):
            w.writerow((i, repr(a), repr(b)))
    rep_path.write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    _write_meta(rep_path, cfg, "train", {"dataset": src})
    _write_meta(hist, cfg, "train", {"dataset": src})

    from .neural import predict

    X_te, y_te = data.test()
    pred_path = out / "predictions.csv"
    with open(pred_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("u_true", "u_pred"))
        for a, b in zip(y_te, predict(net, X_te)):
            w.writerow((repr(float(a)), repr(float(b))))
    _write_meta(pred_path, cfg, "train", {"dataset": src, "model": path})
    print(f"test R2 {report.final_test_r2:.5f}, test MSE {report.final_test_mse:.3e} "
          f"({report.final_test_mse_unit:.3e} on the unit control scale), "
          f"{report.epochs_run} epochs -> {path}")
    return path


GRID_COLUMNS = ("hidden_act", "output_act", "neurons", "r2", "mse", "best_repeat", "seed", "selected")
GRID_RUN_COLUMNS = ("hidden_act", "output_act", "neurons", "repeat", "seed", "r2", "mse", "selected", "error")


def cmd_grid(cfg: RunConfig, out: Path) -> Path:
    data, src = _split(cfg, out)
    cells = grid_run(cfg.grid, data, cfg.train_config(), jobs=cfg.grid_jobs)
    top = {c.key for c in top_cells(cells, 9)}
    models = out / "grid_models"
    models.mkdir(exist_ok=True)
    path = out / "grid.csv"
    runs_path = out / "grid_runs.csv"
    with open(path, "w", newline="") as fh, open(runs_path, "w", newline="") as fr:
        w = csv.writer(fh, lineterminator="\n")
        wr = csv.writer(fr, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        wr.writerow(GRID_RUN_COLUMNS)
        for c in cells:
            b = c.best
            w.writerow((c.hidden_act, c.output_act, c.neurons,
                        repr(b.r2) if b else "nan", repr(b.mse) if b else "nan",
                        b.repeat if b else "", b.seed if b else "", int(c.key in top)))
            for r in c.runs:
                wr.writerow((r.hidden_act, r.output_act, r.neurons, r.repeat, r.seed,
                             repr(r.r2), repr(r.mse), int(r is b), r.error or ""))
            if c.key in top:
                b.net.save(models / f"{c.hidden_act}_{c.output_act}_{c.neurons}.json")
    _write_meta(path, cfg, "grid", {"dataset": src}, {"top_cells": sorted(map(list, top))})
    _write_meta(runs_path, cfg, "grid", {"dataset": src})
    print(f"grid {len(cells)} configurations -> {path}")
    return path


def cmd_sweep(cfg: RunConfig, out: Path, controller: str = "model") -> Path:
    if controller == "fourier":
        raise ConfigError("sweep compares the open-loop law with a network; pass --controller model[:PATH]")
    nn, cid, model_path = _resolve_controller(controller, cfg, out)
    sp = cfg.sweep
    res = sweep(cfg.fourier.build(), nn, cfg.capsule, cfg.sim, sp.deltas, sp.trials, cfg.seeds.sweep, sp.jobs)
    path = out / "sweep.csv"
    res.to_csv(path)
    _write_meta(path, cfg, "sweep", {"model": model_path}, {
        "ol_nominal": res.ol_nominal, "nn_nominal": res.nn_nominal, "trials": sp.trials,
        "paired_seeds": True, "skipped_deltas": res.skipped, "trial_errors": res.errors,
        "failures": {repr(r.delta): [r.ol_failures, r.nn_failures] for r in res.rows},
    })
    print(f"sweep {len(res.rows)} rows -> {path}")
    if res.skipped:
        print(f"skipped deltas (< 90% successful trials): {res.skipped}", file=sys.stderr)
    return path


def cmd_plot(cfg: RunConfig, out: Path, spec: PlotSpec) -> Path:
    path = render(spec)
    print(f"plot -> {path}")
    return path


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration (default: nominal)")
    common.add_argument("--seed", type=int, metavar="N", help="set the split, training and sweep seeds to N")
    common.add_argument("--out", metavar="DIR", help="output directory (default: [output] dir or ./out)")

    parser = _Parser(prog="capsule", description="Pendulum capsule simulation and controller distillation.")
    parser.add_argument("--version", action="version", version=f"capsule {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="simulate one run and print the distance")
    p.add_argument("--controller", default="fourier", help="fourier | model | model:PATH")
    sub.add_parser("dataset", parents=[common], help="build the (state, control) dataset")
    sub.add_parser("train", parents=[common], help="train the configured network")
    sub.add_parser("grid", parents=[common], help="train the activation/size grid")
    p = sub.add_parser("sweep", parents=[common], help="friction robustness sweep")
    p.add_argument("--controller", default="model", help="model | model:PATH")
    p = sub.add_parser("plot", parents=[common], help="render CSV columns to SVG")
    p.add_argument("--csv", required=True, metavar="PATH")
    p.add_argument("--x", required=True, metavar="COLUMN")
    p.add_argument("--y", required=True, action="append", metavar="COLUMN", help="repeatable")
    p.add_argument("--label", action="append", default=[], help="legend label per --y")
    p.add_argument("--kind", choices=PLOT_KINDS, default="line")
    p.add_argument("--title", default="")
    p.add_argument("--name", help="output file name (default: <csv stem>_<y>.svg)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = Path(args.out or cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            cmd_simulate(cfg, out, args.controller)
        elif args.command == "dataset":
            cmd_dataset(cfg, out)
        elif args.command == "train":
            cmd_train(cfg, out)
        elif args.command == "grid":
            cmd_grid(cfg, out)
        elif args.command == "sweep":
            cmd_sweep(cfg, out, args.controller)
        elif args.command == "plot":
            name = args.name or f"{Path(args.csv).stem}_{'_'.join(args.y)}.svg"
            spec = PlotSpec(args.csv, args.x, tuple(args.y), str(out / name), tuple(args.label),
                            args.kind, args.title)
            cmd_plot(cfg, out, spec)
    except (CapsuleError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"capsule {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
