"""Batch experiment runner.

A single JSON config drives dataset construction, method training, and one
of four experiments (curve, ood:<tag>, corrupt, surfaces) across a list of
seeds. Results land in the output directory as results.csv (flat records),
results.json (config echo plus per-seed and aggregate records), and, for the
surfaces experiment, one grid CSV per method and seed.

Exit codes: 0 success, 1 config error, 2 data error, 3 training failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .data import Dataset, ToyConfig, apply_scaler, fit_scaler, generate_toy, grid_2d, load_csv, split
from .errors import ConfigError, DataError, ParameterError, ShapeError, TrainingError, UndefinedMetricError
from .evaluation import (DEFAULT_FRACTIONS, DEFAULT_SEEDS, METHODS, MethodSettings,
                         Records, corruption_experiment, curve_experiment,
                         ood_experiment, seed_sweep, toy_surfaces, train_method)
from .mlp import TrainConfig
from .rng import SeededRng
from .vae import VaeConfig

EXPERIMENTS = ("curve", "ood", "corrupt", "surfaces")
CSV_HEADER = "experiment,method,seed,context,metric,value"

# Keys a config file may contain; anything else is rejected by name.
KNOWN_KEYS = frozenset({
    "dataset", "experiment", "methods", "seeds", "class_weighting", "platt",
    "out_dir", "label_column", "standardize", "hidden", "dropout_rate", "lr",
    "batch_size", "max_epochs", "patience", "ensemble_size", "mc_passes",
    "logistic_c", "vae_latent", "vae_epochs", "vae_batch_size", "vae_lr",
    "vae_samples", "toy_n_train", "split_fractions", "fractions", "factors",
    "n_corrupt_features", "grid_bounds", "grid_resolution",
})

_UNSET = object()


@dataclass
class ExperimentConfig:
    """Validated configuration with every default resolved."""

    dataset: str
    experiment: str
    ood_tag: str | None
    methods: tuple[str, ...]
    seeds: tuple[int, ...]
    out_dir: str
    platt: bool
    label_column: str
    settings: MethodSettings
    toy_n_train: int
    split_fractions: tuple[float, float, float]
    fractions: tuple[float, ...]
    factors: tuple[float, ...]
    n_corrupt_features: int
    grid_bounds: tuple[tuple[float, float], tuple[float, float]]
    grid_resolution: int
    echo: dict = field(default_factory=dict)

    @property
    def is_toy(self) -> bool:
        return self.dataset.startswith("toy-")

    @property
    def csv_path(self) -> str:
        return self.dataset[len("csv:"):]


def _require(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"missing required key {key!r}")
    return raw[key]


def _get(raw: dict, key: str, default):
    return raw.get(key, default)


def _as_bool(value, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"key {key!r} must be true or false, got {value!r}")
    return value


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key {key!r} must be a number, got {value!r}")
    return float(value)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"key {key!r} must be an integer, got {value!r}")
    return value


def parse_config(raw: dict, seed_override=None, out_override=None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")

    dataset = _require(raw, "dataset")
    if dataset not in ("toy-balanced", "toy-unbalanced") and not (
            isinstance(dataset, str) and dataset.startswith("csv:")):
        raise ConfigError(
            f"key 'dataset' must be toy-balanced, toy-unbalanced or csv:<path>, "
            f"got {dataset!r}")
    is_toy = dataset.startswith("toy-")

    experiment = _require(raw, "experiment")
    ood_tag = None
    if isinstance(experiment, str) and experiment.startswith("ood:"):
        ood_tag = experiment[len("ood:"):]
        if not ood_tag:
            raise ConfigError("key 'experiment': ood needs a group tag, like ood:elective")
        kind = "ood"
    else:
        kind = experiment
    if kind not in EXPERIMENTS or kind == "ood" and ood_tag is None:
        raise ConfigError(
            f"key 'experiment' must be curve, ood:<tag>, corrupt or surfaces, "
            f"got {experiment!r}")

    methods = tuple(_get(raw, "methods", list(METHODS)))
    if not methods:
        raise ConfigError("key 'methods' must name at least one method")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r} in key 'methods'")

    if seed_override is not None:
        seeds = tuple(seed_override)
    else:
        seeds = tuple(_as_int(s, "seeds") for s in _get(raw, "seeds", list(DEFAULT_SEEDS)))
    if not seeds:
        raise ConfigError("key 'seeds' must name at least one seed")

    standardize = raw.get("standardize", _UNSET)
    if standardize is _UNSET:
        standardize = not is_toy
    else:
        standardize = _as_bool(standardize, "standardize")

    hidden = _get(raw, "hidden", [5] if is_toy else [100, 100])
    if not isinstance(hidden, list) or not hidden:
        raise ConfigError(f"key 'hidden' must be a non-empty list, got {hidden!r}")
    batch_size = _as_int(_get(raw, "batch_size", 8 if is_toy else 256), "batch_size")
    max_epochs = _as_int(_get(raw, "max_epochs", 20 if is_toy else 100), "max_epochs")
    patience = raw.get("patience", _UNSET)
    if patience is _UNSET:
        patience = None if is_toy else 2
    elif patience is not None:
        patience = _as_int(patience, "patience")
    logistic_c = raw.get("logistic_c", _UNSET)
    if logistic_c is _UNSET:
        logistic_c = None if is_toy else 1e-2
    if logistic_c is not None:
        logistic_c = _as_number(logistic_c, "logistic_c")
    vae_latent = _as_int(_get(raw, "vae_latent", 2 if is_toy else 500), "vae_latent")

    try:
        mlp_cfg = TrainConfig(
            hidden=tuple(_as_int(h, "hidden") for h in hidden),
            dropout_rate=_as_number(_get(raw, "dropout_rate", 0.5), "dropout_rate"),
            lr=_as_number(_get(raw, "lr", 1e-3), "lr"),
            batch_size=batch_size, max_epochs=max_epochs, patience=patience)
        vae_cfg = VaeConfig(
            latent_dim=vae_latent,
            batch_size=_as_int(_get(raw, "vae_batch_size", 256), "vae_batch_size"),
            epochs=_as_int(_get(raw, "vae_epochs", 30), "vae_epochs"),
            lr=_as_number(_get(raw, "vae_lr", 1e-3), "vae_lr"),
            samples=_as_int(_get(raw, "vae_samples", 10), "vae_samples"))
        settings = MethodSettings(
            mlp=mlp_cfg, vae=vae_cfg,
            ensemble_size=_as_int(_get(raw, "ensemble_size", 5), "ensemble_size"),
            mc_passes=_as_int(_get(raw, "mc_passes", 100), "mc_passes"),
            logistic_c=float("inf") if logistic_c is None else logistic_c,
            vae_samples=_as_int(_get(raw, "vae_samples", 10), "vae_samples"),
            class_weighting=_as_bool(_get(raw, "class_weighting", False), "class_weighting"),
            standardize=standardize)
    except ParameterError as e:
        raise ConfigError(str(e)) from e

    fracs = _get(raw, "split_fractions", [0.6, 0.2, 0.2])
    if not isinstance(fracs, list) or len(fracs) != 3:
        raise ConfigError(f"key 'split_fractions' must be three numbers, got {fracs!r}")
    bounds = _get(raw, "grid_bounds", [[-8.0, 8.0], [-8.0, 8.0]])
    try:
        grid_bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    except (TypeError, ValueError):
        raise ConfigError(f"key 'grid_bounds' must be [[min,max],[min,max]], got {bounds!r}")
    if len(grid_bounds) != 2:
        raise ConfigError("key 'grid_bounds' must cover exactly two axes")

    return ExperimentConfig(
        dataset=dataset, experiment=experiment, ood_tag=ood_tag, methods=methods,
        seeds=seeds,
        out_dir=str(out_override if out_override is not None
                    else _get(raw, "out_dir", "results")),
        platt=_as_bool(_get(raw, "platt", False), "platt"),
        label_column=str(_get(raw, "label_column", "label")),
        settings=settings,
        toy_n_train=_as_int(_get(raw, "toy_n_train", 200), "toy_n_train"),
        split_fractions=tuple(_as_number(f, "split_fractions") for f in fracs),
        fractions=tuple(_as_number(f, "fractions")
                        for f in _get(raw, "fractions", list(DEFAULT_FRACTIONS))),
        factors=tuple(_as_number(f, "factors") for f in _get(raw, "factors", [10, 1000])),
        n_corrupt_features=_as_int(_get(raw, "n_corrupt_features", 30), "n_corrupt_features"),
        grid_bounds=grid_bounds,
        grid_resolution=_as_int(_get(raw, "grid_resolution", 50), "grid_resolution"),
        echo=raw)


def _toy_config(cfg: ExperimentConfig) -> ToyConfig:
    mode = cfg.dataset[len("toy-"):]
    return ToyConfig(mode=mode, n_train=cfg.toy_n_train)


def _seed_data(cfg: ExperimentConfig, full: Dataset | None,
               rng: SeededRng) -> tuple[Dataset, Dataset, Dataset]:
    """Per-seed train/val/test. Toy data is generated fresh (val and test are
    same-size draws from the training distribution); CSV data is re-split."""
    if cfg.is_toy:
        toy = _toy_config(cfg)
        return (generate_toy(toy, rng.split("train")),
                generate_toy(toy, rng.split("val")),
                generate_toy(toy, rng.split("test")))
    return split(full, cfg.split_fractions, rng.split("split"))


def _surface_records(cfg: ExperimentConfig, train: Dataset, val: Dataset,
                     rng: SeededRng, tables: dict) -> Records:
    """Evaluate grid surfaces for each method; stash tables for later writing."""
    if train.d != 2:
        raise DataError(f"surfaces need a 2-D dataset, got {train.d} features")
    grid = grid_2d(cfg.grid_bounds, cfg.grid_resolution)
    if cfg.settings.standardize:
        scaler = fit_scaler(train)
        train, val = apply_scaler(scaler, train), apply_scaler(scaler, val)
        grid_in = (grid - scaler.mean) / scaler.std
    else:
        grid_in = grid
    records: Records = {}
    for name in cfg.methods:
        fitted = train_method(name, train, val, cfg.settings, rng.split(name))
        surfaces = toy_surfaces(fitted, grid_in)
        if name == "vae":
            classifier = train_method("single-nn", train, val, cfg.settings,
                                      rng.split("vae-classifier"))
            surfaces = {**toy_surfaces(classifier, grid_in), **surfaces}
        columns = ["x1", "x2"] + [c for c in ("probability", "entropy", "novelty")
                                  if c in surfaces]
        table = np.column_stack([grid[:, 0], grid[:, 1]]
                                + [surfaces[c] for c in columns[2:]])
        tables[name] = (columns, table)
        records[(name, "grid", "n_points")] = float(grid.shape[0])
        for c in columns[2:]:
            records[(name, "grid", f"{c}_mean")] = float(np.mean(surfaces[c]))
    return records


def _execute(cfg: ExperimentConfig):
    """Run the configured experiment across seeds.

    Returns (sweep, surface_tables) where surface_tables maps
    (method, seed) -> (columns, array) and is empty except for surfaces runs.
    """
    full = None
    if not cfg.is_toy:
        full = load_csv(cfg.csv_path, cfg.label_column)
    surface_tables: dict = {}

    def experiment(rng: SeededRng) -> Records:
        if cfg.experiment == "corrupt":
            train, val, test = _seed_data(cfg, full, rng)
            if cfg.settings.standardize:
                scaler = fit_scaler(train)
                train, val, test = (apply_scaler(scaler, d) for d in (train, val, test))
            fitted = [train_method(m, train, val, cfg.settings, rng.split(m))
                      for m in cfg.methods]
            return corruption_experiment(fitted, test, cfg.factors,
                                         cfg.n_corrupt_features, rng.split("corrupt"))
        if cfg.experiment == "curve":
            train, val, test = _seed_data(cfg, full, rng)
            return curve_experiment(train, val, test, cfg.methods, cfg.settings,
                                    rng.split("curve"), cfg.fractions, cfg.platt)
        if cfg.ood_tag is not None:
            records: Records = {}
            for m in cfg.methods:
                res = ood_experiment(full, cfg.ood_tag, m, cfg.settings,
                                     rng.split(f"ood.{m}"))
                ctx = f"group={cfg.ood_tag}"
                records[(m, ctx, "detection_auc")] = res.detection_auc
                records[(m, ctx, "subgroup_auc")] = res.subgroup_auc
            return records
        # surfaces
        train, val, _ = _seed_data(cfg, full, rng)
        tables: dict = {}
        recs = _surface_records(cfg, train, val, rng.split("surfaces"), tables)
        for name, t in tables.items():
            surface_tables[(name, rng.seed)] = t
        return recs

    if cfg.ood_tag is not None and cfg.is_toy:
        raise DataError("ood experiments need a csv dataset with group tags")
    return seed_sweep(experiment, cfg.seeds), surface_tables


def format_value(value) -> str:
    """Stable text form: repr for floats (shortest round-trip), 'absent' for None."""
    if value is None:
        return "absent"
    return repr(float(value))


def _write_outputs(cfg: ExperimentConfig, sweep, surface_tables, quiet: bool) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = [CSV_HEADER]
    for seed, records in zip(sweep.seeds, sweep.per_seed):
        for (method, context, metric), value in records.items():
            lines.append(f"{cfg.experiment},{method},{seed},{context},{metric},"
                         f"{format_value(value)}")
    for label, agg in (("mean", sweep.mean), ("std", sweep.std)):
        for (method, context, metric), value in agg.items():
            lines.append(f"{cfg.experiment},{method},{label},{context},{metric},"
                         f"{format_value(value)}")
    (out / "results.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    def record_list(records: Records) -> list:
        return [{"method": m, "context": c, "metric": k, "value": v}
                for (m, c, k), v in records.items()]

    doc = {
        "toolkit_version": __version__,
        "config": cfg.echo,
        "experiment": cfg.experiment,
        "seeds": list(sweep.seeds),
        "per_seed": [{"seed": s, "records": record_list(r)}
                     for s, r in zip(sweep.seeds, sweep.per_seed)],
        "aggregate": {"mean": record_list(sweep.mean),
                      "std": record_list(sweep.std)},
    }
    (out / "results.json").write_text(json.dumps(doc, indent=2) + "\n",
                                      encoding="utf-8")

    for (name, seed), (columns, table) in surface_tables.items():
        rows = [",".join(columns)]
        rows += [",".join(repr(float(v)) for v in row) for row in table]
        (out / f"surfaces_{name}_seed{seed}.csv").write_text(
            "\n".join(rows) + "\n", encoding="utf-8")

    if not quiet:
        n_files = 2 + len(surface_tables)
        print(f"wrote {n_files} file(s) to {out}")


def run(config_path, seed_override=None, out_override=None, quiet: bool = False) -> int:
    """Execute one config file; returns the process exit code."""
    try:
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        cfg = parse_config(raw, seed_override, out_override)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1

    try:
        sweep, surface_tables = _execute(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except TrainingError as e:
        print(f"training error: {e}", file=sys.stderr)
        return 3
    except (DataError, ShapeError, ParameterError, UndefinedMetricError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2

    _write_outputs(cfg, sweep, surface_tables, quiet)
    return 0


def _parse_seed_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"--seed-override must be integers, got {text!r}") from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tabuq",
                                     description="Run an uncertainty experiment from a JSON config.")
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--seed-override",
                        help="comma-separated seeds replacing the config's list")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)
    seeds = None
    if args.seed_override is not None:
        try:
            seeds = _parse_seed_list(args.seed_override)
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return 1
    return run(args.config, seed_override=seeds, out_override=args.out,
               quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
