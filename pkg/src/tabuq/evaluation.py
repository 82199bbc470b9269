"""Experiment protocols: confidence-performance curves, OOD detection,
corrupted-feature detection, seed sweeps, and toy surface evaluation.

Record dictionaries map (method, context, metric) keys to floats, with None
for metrics that are undefined in a given context (for example AUC over a
single-class prefix). The cli module flattens these into CSV rows.

All stochastic scoring goes through closures that re-derive their rng child
stream on every call, so scoring the same inputs twice gives bitwise equal
results; this is what makes the factor-1 corruption baseline exactly 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .data import (CorruptionSpec, Dataset, apply_scaler, corrupt_feature,
                   exclude_group, fit_scaler, split)
from .ensemble import ensemble_predict, train_deep_ensemble
from .errors import ConfigError, DataError, ParameterError, ShapeError, UndefinedMetricError
from .logistic import train_bootstrapped_lr
from .metrics import auc_roc, binary_entropy, ece, platt_apply, platt_fit
from .mlp import TrainConfig, mc_dropout_predict, predict_mlp, train_mlp
from .rng import SeededRng
from .vae import VaeConfig, train_vae, vae_novelty_score

METHODS = ("single-nn", "nn-ensemble", "mc-dropout", "bootstrap-lr", "vae")
ORIGINS = ("test", "ood", "perturbed")
DEFAULT_FRACTIONS = (0.50, 0.55, 0.60, 0.65, 0.70, 0.75,
                     0.80, 0.85, 0.90, 0.95, 1.00)
DEFAULT_SEEDS = (0, 1, 2, 3, 4)

RecordKey = tuple[str, str, str]
Records = dict[RecordKey, "float | None"]


@dataclass(frozen=True)
class ScoredPredictions:
    """Per-row probability, uncertainty, label, and origin for one method."""

    probability: np.ndarray
    uncertainty: np.ndarray
    label: np.ndarray
    method: str
    origin: np.ndarray

    def __post_init__(self):
        prob = np.asarray(self.probability, dtype=np.float64).ravel()
        unc = np.asarray(self.uncertainty, dtype=np.float64).ravel()
        lab = np.asarray(self.label, dtype=np.int64).ravel()
        orig = np.asarray(self.origin).ravel()
        if not (prob.size == unc.size == lab.size == orig.size):
            raise ShapeError(
                f"mismatched lengths: {prob.size} probabilities, {unc.size} "
                f"uncertainties, {lab.size} labels, {orig.size} origins")
        if prob.size and (prob.min() < 0.0 or prob.max() > 1.0):
            raise ParameterError("probabilities must lie in [0, 1]")
        if self.method not in METHODS:
            raise ParameterError(f"unknown method tag {self.method!r}")
        bad = set(orig.tolist()) - set(ORIGINS)
        if bad:
            raise ParameterError(f"unknown origin tags {sorted(bad)}")
        object.__setattr__(self, "probability", prob)
        object.__setattr__(self, "uncertainty", unc)
        object.__setattr__(self, "label", lab)
        object.__setattr__(self, "origin", orig)

    @property
    def n(self) -> int:
        return self.probability.size


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    auc: float | None
    ece: float
    positive_fraction: float


@dataclass(frozen=True)
class DetectionResult:
    group: str
    method: str
    detection_auc: float
    subgroup_auc: float | None


@dataclass(frozen=True)
class SeedSweep:
    seeds: tuple[int, ...]
    per_seed: tuple[Records, ...]
    mean: Records
    std: Records


@dataclass(frozen=True)
class MethodSettings:
    """Hyperparameters for every method, with the published defaults.

    class_weighting here is the single switch used by all classifiers; it
    overrides the flag inside the mlp TrainConfig. standardize controls
    whether experiments fit a scaler on their training split.
    """

    mlp: TrainConfig = TrainConfig()
    vae: VaeConfig = VaeConfig()
    ensemble_size: int = 5
    mc_passes: int = 100
    logistic_c: float = 1e-2
    vae_samples: int = 10
    class_weighting: bool = False
    standardize: bool = True

    def mlp_config(self) -> TrainConfig:
        return replace(self.mlp, class_weighting=self.class_weighting)

    @classmethod
    def toy(cls, class_weighting: bool = False) -> "MethodSettings":
        return cls(mlp=TrainConfig.toy(), vae=VaeConfig.toy(),
                   logistic_c=float("inf"), class_weighting=class_weighting,
                   standardize=False)


@dataclass
class FittedMethod:
    """A trained method: a probability predictor (None for the VAE, which has
    no classifier) and an uncertainty scorer, higher = more uncertain."""

    name: str
    predict: Callable[[np.ndarray], np.ndarray] | None
    uncertainty: Callable[[np.ndarray], np.ndarray]
    model: object


def train_method(name: str, train: Dataset, val: Dataset,
                 settings: MethodSettings, rng: SeededRng) -> FittedMethod:
    """Train one named method.

    Scoring closures call rng.split("score") afresh on each invocation, so a
    stochastic scorer applied twice to identical inputs returns identical
    outputs (the stream is derived from the label path, not consumed state).
    """
    cfg = settings.mlp_config()
    if name == "single-nn":
        model = train_mlp(train, val, cfg, rng.split("model"))
        predict = lambda X: predict_mlp(model, X)
    elif name == "nn-ensemble":
        model = train_deep_ensemble(train, val, cfg, settings.ensemble_size,
                                    rng.split("model"))
        predict = lambda X: ensemble_predict(model, X)
    elif name == "mc-dropout":
        model = train_mlp(train, val, cfg, rng.split("model"))
        predict = lambda X: mc_dropout_predict(model, X, settings.mc_passes,
                                               rng.split("score"))
    elif name == "bootstrap-lr":
        model = train_bootstrapped_lr(train, settings.ensemble_size,
                                      settings.logistic_c, rng.split("model"),
                                      settings.class_weighting)
        predict = lambda X: ensemble_predict(model, X)
    elif name == "vae":
        model = train_vae(train, settings.vae, rng.split("model"))
        uncertainty = lambda X: vae_novelty_score(model, X, settings.vae_samples,
                                                  rng.split("score"))
        return FittedMethod(name=name, predict=None, uncertainty=uncertainty,
                            model=model)
    else:
        raise ConfigError(f"unknown method {name!r}")
    uncertainty = lambda X: binary_entropy(predict(X))
    return FittedMethod(name=name, predict=predict, uncertainty=uncertainty,
                        model=model)


def confidence_performance(sp: ScoredPredictions,
                           fractions=DEFAULT_FRACTIONS) -> list[CurvePoint]:
    """Metrics over expanding most-confident prefixes.

    Rows are sorted by ascending uncertainty with a stable tie-break on the
    original index; each point covers the first ceil(f*N) rows. AUC over a
    single-class prefix is reported as None.
    """
    if sp.n == 0:
        raise DataError("cannot compute a curve over an empty prediction set")
    if len(set(sp.label.tolist())) < 2:
        raise UndefinedMetricError("confidence-performance needs both classes present")
    order = np.argsort(sp.uncertainty, kind="mergesort")
    points = []
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ParameterError(f"fractions must lie in (0, 1], got {f}")
        k = max(1, math.ceil(f * sp.n - 1e-9))
        idx = order[:k]
        probs, labels = sp.probability[idx], sp.label[idx]
        try:
            auc = auc_roc(probs, labels)
        except UndefinedMetricError:
            auc = None
        points.append(CurvePoint(fraction=f, auc=auc, ece=ece(probs, labels),
                                 positive_fraction=float(labels.mean())))
    return points


def _scaled(settings: MethodSettings, train: Dataset,
            *others: Dataset) -> tuple[Dataset, ...]:
    if not settings.standardize:
        return (train, *others)
    scaler = fit_scaler(train)
    return tuple(apply_scaler(scaler, d) for d in (train, *others))


def curve_experiment(train: Dataset, val: Dataset, test: Dataset,
                     methods, settings: MethodSettings, rng: SeededRng,
                     fractions=DEFAULT_FRACTIONS, use_platt: bool = False) -> Records:
    """Confidence-performance curves for each method on the test split.

    The VAE has no classifier, so its rows use a dedicated single NN for
    probabilities while the VAE novelty score drives the exclusion order.
    With use_platt, probabilities are recalibrated by Platt scaling fitted
    once on the validation split (per method), and the fitted slope and
    intercept are emitted as records.
    """
    train, val, test = _scaled(settings, train, val, test)
    records: Records = {}
    for name in methods:
        fitted = train_method(name, train, val, settings, rng.split(name))
        if name == "vae":
            classifier = train_method("single-nn", train, val, settings,
                                      rng.split("vae-classifier"))
            probs = classifier.predict(test.features)
            val_probs = classifier.predict(val.features)
        else:
            probs = fitted.predict(test.features)
            val_probs = fitted.predict(val.features)
        uncertainty = fitted.uncertainty(test.features)
        if use_platt:
            params = platt_fit(val_probs, val.labels)
            probs = platt_apply(params, probs)
            records[(name, "platt", "a")] = params.a
            records[(name, "platt", "b")] = params.b
        sp = ScoredPredictions(probability=probs, uncertainty=uncertainty,
                               label=test.labels, method=name,
                               origin=np.full(test.n, "test"))
        for point in confidence_performance(sp, fractions):
            ctx = f"f={point.fraction:.2f}"
            records[(name, ctx, "auc")] = point.auc
            records[(name, ctx, "ece")] = point.ece
            records[(name, ctx, "positive_fraction")] = point.positive_fraction
    return records


def ood_experiment(data: Dataset, tag: str, method: str,
                   settings: MethodSettings, rng: SeededRng) -> DetectionResult:
    """Group-holdout OOD detection for one method.

    The tagged rows are excluded before splitting, the method trains on the
    remaining data, and test and OOD rows are ranked together by uncertainty;
    detection AUC labels the OOD rows 1. Subgroup AUC is the classifier's
    AUC on the OOD rows alone, absent for the VAE and for single-class groups.
    """
    in_domain, ood = exclude_group(data, tag)
    train, val, test = split(in_domain, (0.6, 0.2, 0.2), rng.split("split"))
    train, val, test, ood = _scaled(settings, train, val, test, ood)
    fitted = train_method(method, train, val, settings, rng.split(method))
    joint = np.vstack([test.features, ood.features])
    scores = fitted.uncertainty(joint)
    is_ood = np.concatenate([np.zeros(test.n, dtype=np.int64),
                             np.ones(ood.n, dtype=np.int64)])
    detection = auc_roc(scores, is_ood)
    subgroup = None
    if fitted.predict is not None:
        try:
            subgroup = auc_roc(fitted.predict(ood.features), ood.labels)
        except UndefinedMetricError:
            subgroup = None
    return DetectionResult(group=tag, method=method, detection_auc=detection,
                           subgroup_auc=subgroup)


def corruption_experiment(methods, test: Dataset, factors=(10, 1000),
                          n_features: int = 30,
                          rng: SeededRng | None = None) -> Records:
    """Single-feature corruption detection for already-trained methods.

    Samples min(n_features, D) feature columns without replacement, corrupts
    each at every factor, and scores detection of perturbed vs clean test
    rows per method. Emits one record per (method, factor, feature) plus the
    per-factor mean and (sample) standard deviation over features.
    """
    if rng is None:
        raise ParameterError("corruption_experiment needs an rng")
    count = min(n_features, test.d)
    chosen = rng.split("features").permutation(test.d)[:count]
    records: Records = {}
    for fitted in methods:
        clean = fitted.uncertainty(test.features)
        is_pert = np.concatenate([np.zeros(test.n, dtype=np.int64),
                                  np.ones(test.n, dtype=np.int64)])
        for factor in factors:
            aucs = []
            for j in chosen:
                spec = CorruptionSpec(feature_index=int(j), factor=factor,
                                      n_features=n_features)
                perturbed = corrupt_feature(test, spec)
                scores = np.concatenate([clean, fitted.uncertainty(perturbed.features)])
                auc = auc_roc(scores, is_pert)
                ctx = f"factor={factor:g}.feature={test.feature_names[j]}"
                records[(fitted.name, ctx, "detection_auc")] = auc
                aucs.append(auc)
            ctx = f"factor={factor:g}"
            records[(fitted.name, ctx, "detection_auc_mean")] = float(np.mean(aucs))
            records[(fitted.name, ctx, "detection_auc_std")] = (
                float(np.std(aucs, ddof=1)) if len(aucs) >= 2 else None)
    return records


def seed_sweep(experiment: Callable[[SeededRng], Records],
               seeds=DEFAULT_SEEDS) -> SeedSweep:
    """Run an experiment closure once per seed and aggregate per record key.

    Mean and std cover the seeds where a value is present; std needs at
    least two present values and is otherwise None. Errors propagate with
    the failing seed prepended to the message.
    """
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ParameterError("need at least one seed")
    per_seed = []
    for seed in seeds:
        try:
            per_seed.append(experiment(SeededRng(seed)))
        except Exception as e:
            try:
                raise type(e)(f"seed {seed}: {e}") from e
            except TypeError:
                raise RuntimeError(f"seed {seed}: {e}") from e
    keys: list[RecordKey] = []
    seen = set()
    for rec in per_seed:
        for key in rec:
            if key not in seen:
                seen.add(key)
                keys.append(key)
    mean: Records = {}
    std: Records = {}
    for key in keys:
        values = [rec[key] for rec in per_seed if rec.get(key) is not None]
        mean[key] = float(np.mean(values)) if values else None
        std[key] = float(np.std(values, ddof=1)) if len(values) >= 2 else None
    return SeedSweep(seeds=seeds, per_seed=tuple(per_seed), mean=mean, std=std)


def toy_surfaces(fitted: FittedMethod, grid: np.ndarray) -> dict[str, np.ndarray]:
    """Per-grid-point surfaces: probability and entropy for classifiers,
    novelty for the VAE."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[1] != 2:
        raise ShapeError(f"expected an (N, 2) grid, got {grid.shape}")
    if fitted.predict is None:
        return {"novelty": fitted.uncertainty(grid)}
    probs = fitted.predict(grid)
    return {"probability": probs, "entropy": binary_entropy(probs)}
