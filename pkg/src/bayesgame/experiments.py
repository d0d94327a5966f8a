"""Benchmark protocol: data loading, splits, adversarial evaluation, sweeps.

The harness trains each requested strategy on a train split, then measures
RMSE on test points that the data generator has transformed using its
closed-form response under weights drawn from the prior.  Hyperparameter
grids are scored by mean RMSE across repetitions and the winning
configuration's rows are reported.  Everything derives from a single seed.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import bayes_fp, nash_strategy, ridge_fit
from .game import (
    FinitePrior,
    GameSpec,
    GammaPrior,
    GaussianPrior,
    LogNormalPrior,
    Prior,
    sample_prior,
)
from .quadratic import AdamConfig, bayes_adam
from .solvers import SolverConfig

SPAMBASE_COLUMNS = 58  # 57 features plus the trailing 0/1 label
METHODS = ("bayes-adam", "bayes-fp", "nash", "ridge")


@dataclass
class Dataset:
    """Feature table with 0/1 labels, optionally carrying scaler constants."""

    features: np.ndarray
    labels: np.ndarray
    feature_means: np.ndarray | None = None
    feature_stds: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must have one entry per feature row")
        if not np.all(np.isin(self.labels, (0.0, 1.0))):
            raise ValueError("labels must be 0 or 1")

    def __len__(self) -> int:
        return self.features.shape[0]

    def take(self, indices: np.ndarray) -> "Dataset":
        return Dataset(
            self.features[indices],
            self.labels[indices],
            self.feature_means,
            self.feature_stds,
        )


def load_spambase(path, standardize: bool = True) -> Dataset:
    """Parse a spambase-format CSV: 58 numeric columns, no header.

    Features are standardized per column using full-dataset statistics
    (recorded on the returned dataset) unless ``standardize`` is False.
    Malformed lines raise with their line number.
    """
    rows = []
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != SPAMBASE_COLUMNS:
                raise ValueError(
                    f"{path}:{lineno}: expected {SPAMBASE_COLUMNS} comma-separated "
                    f"values, found {len(parts)}"
                )
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"{path}:{lineno}: non-finite value")
            if values[-1] not in (0.0, 1.0):
                raise ValueError(f"{path}:{lineno}: label must be 0 or 1")
            rows.append(values[:-1])
            labels.append(values[-1])
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    features = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if not standardize:
        return Dataset(features, labels)
    means = features.mean(axis=0)
    stds = features.std(axis=0)
    stds = np.where(stds == 0, 1.0, stds)  # constant columns pass through
    return Dataset((features - means) / stds, labels, means, stds)


def write_dataset_csv(features: np.ndarray, labels: np.ndarray, path) -> None:
    """Write a spambase-format CSV; floats use repr for exact round-trips."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    with open(path, "w") as fh:
        for row, label in zip(features, labels):
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write(f",{int(label)}\n")


def split(data: Dataset, train_n: int, test_n: int, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint uniform train/test subsets, deterministic given the seed."""
    if train_n < 1 or test_n < 1:
        raise ValueError("train_n and test_n must be >= 1")
    if train_n + test_n > len(data):
        raise ValueError(
            f"train_n + test_n = {train_n + test_n} exceeds dataset size {len(data)}"
        )
    perm = np.random.default_rng(seed).permutation(len(data))
    return data.take(perm[:train_n]), data.take(perm[train_n : train_n + test_n])


def rmse(predictions: np.ndarray, targets: np.ndarray) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise ValueError("predictions and targets must have matching shapes")
    return float(np.sqrt(np.mean((predictions - targets) ** 2)))


@dataclass(frozen=True)
class ZRule:
    """How the generator's target predictions derive from the labels."""

    kind: str = "flip"  # "flip" | "zero" | "custom"
    vector: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("flip", "zero", "custom"):
            raise ValueError(f"unknown z rule {self.kind!r}")
        if self.kind == "custom" and self.vector is None:
            raise ValueError("custom z rule needs a vector")

    def resolve(self, labels: np.ndarray) -> np.ndarray:
        if self.kind == "flip":
            return 1.0 - labels
        if self.kind == "zero":
            return np.zeros_like(labels)
        vector = np.asarray(self.vector, dtype=float)
        if vector.shape != labels.shape:
            raise ValueError("custom z vector length must match the split size")
        return vector


def evaluate(
    w: np.ndarray,
    test: Dataset,
    z_rule: ZRule,
    prior: Prior,
    test_draws: int,
    seed: int,
    adversary_w: np.ndarray | None = None,
) -> float:
    """Mean RMSE over prior draws after the generator transforms the test set.

    The transformation anticipates ``adversary_w`` (defaults to the evaluated
    model itself); predictions always use ``w``.
    """
    w = np.asarray(w, dtype=float)
    w_adv = w if adversary_w is None else np.asarray(adversary_w, dtype=float)
    z = z_rule.resolve(test.labels)
    draws = sample_prior(prior, len(test), test_draws, seed)
    # transformed rows are x_i - coef_i * w_adv, so predictions shift by
    # coef_i * (w_adv . w); no per-draw matrix materialization needed
    margins_adv = test.features @ w_adv
    coef = draws * (margins_adv - z)[None, :] / (1.0 + (w_adv @ w_adv) * draws)
    preds = (test.features @ w)[None, :] - coef * (w_adv @ w)
    per_draw = np.sqrt(np.mean((preds - test.labels[None, :]) ** 2, axis=1))
    return float(per_draw.mean())


# --------------------------------------------------------------------------
# Benchmark sweep
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkConfig:
    train_n: int
    test_n: int
    repetitions: int
    test_draws: int
    prior_grid: tuple
    methods: tuple = METHODS
    c_l_value: float = 0.1
    z_rule: ZRule = field(default_factory=ZRule)
    seed: int = 0
    reg_l: float = 1.0
    adam_lr_grid: tuple = (0.001, 0.01, 0.1)
    adam_batch_grid: tuple = (32, 64, 128)
    ridge_alpha_grid: tuple = (0.01, 0.1, 1.0)
    adam_epochs: int = 20
    adam_samples: int = 1000
    fp_samples: int = 1000
    fp_iterations: int = 20
    nash_iterations: int = 20
    two_equilibria: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.test_draws < 1:
            raise ValueError("test_draws must be >= 1")
        if not self.prior_grid:
            raise ValueError("prior_grid must not be empty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


@dataclass
class ResultRow:
    method: str
    prior_family: str
    prior_params: str
    repetition: int
    rmse: float
    config_label: str = ""
    error: str = ""


@dataclass
class BenchmarkResult:
    rows: list
    aggregates: list  # dicts: method, prior_family, prior_params, mean/std rmse, chosen config

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "prior_family", "prior_params", "repetition", "rmse"])
            for row in self.rows:
                value = "" if math.isnan(row.rmse) else repr(row.rmse)
                writer.writerow(
                    [row.method, row.prior_family, row.prior_params, row.repetition, value]
                )

    def to_json(self) -> dict:
        return {
            "aggregates": self.aggregates,
            "errors": [
                {
                    "method": r.method,
                    "prior_params": r.prior_params,
                    "repetition": r.repetition,
                    "error": r.error,
                }
                for r in self.rows
                if r.error
            ],
        }


def prior_label(prior: Prior) -> tuple[str, str]:
    if isinstance(prior, FinitePrior):
        return "finite", f"K={prior.num_atoms}"
    if isinstance(prior, GaussianPrior):
        return "gaussian", f"mean={prior.mean:g},std={prior.std:g}"
    if isinstance(prior, GammaPrior):
        return "gamma", f"shape={prior.shape:g},scale={prior.scale:g}"
    if isinstance(prior, LogNormalPrior):
        return "lognormal", f"mu={prior.mu:g},sigma={prior.sigma:g}"
    raise TypeError(f"unknown prior type {type(prior)!r}")


def derive_seed(base: int, *tags) -> int:
    """Stable sub-seed from the base seed and a tag tuple (sha256 of the repr)."""
    digest = hashlib.sha256(repr((base,) + tags).encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


def _train_spec(train: Dataset, config: BenchmarkConfig) -> GameSpec:
    n = len(train)
    return GameSpec(
        X=train.features,
        y=train.labels,
        z=config.z_rule.resolve(train.labels),
        c_l=np.full(n, config.c_l_value),
        reg_l=config.reg_l,
    )


def _method_grid(method: str, config: BenchmarkConfig) -> list[tuple[str, dict]]:
    if method == "ridge":
        return [(f"alpha={a:g}", {"alpha": a}) for a in config.ridge_alpha_grid]
    if method == "bayes-adam":
        return [
            (f"lr={lr:g},batch={b}", {"lr": lr, "batch": b})
            for lr in config.adam_lr_grid
            for b in config.adam_batch_grid
        ]
    return [("default", {})]


def _train_method(method, params, spec, prior, config: BenchmarkConfig, train_seed: int):
    if method == "ridge":
        return ridge_fit(spec.X, spec.y, params["alpha"])
    if method == "nash":
        solver = SolverConfig(max_iters=config.nash_iterations, gamma=1.0)
        return nash_strategy(spec, prior, solver)
    if method == "bayes-fp":
        samples = sample_prior(prior, spec.n, config.fp_samples, train_seed)
        return bayes_fp(spec, samples, iterations=config.fp_iterations)
    if method == "bayes-adam":
        adam = AdamConfig(
            learning_rate=params["lr"],
            batch_size=min(params["batch"], config.adam_samples),
            epochs=config.adam_epochs,
            total_samples=config.adam_samples,
            seed=train_seed,
        )
        w, _ = bayes_adam(spec, prior, adam)
        return w
    raise ValueError(f"unknown method {method!r}")


def _run_cell(args) -> list[ResultRow]:
    """Train and evaluate every (method, grid config) for one (prior, repetition)."""
    data, config, prior_idx, rep = args
    prior = config.prior_grid[prior_idx]
    family, params_label = prior_label(prior)
    train, test = split(
        data, config.train_n, config.test_n, derive_seed(config.seed, "split", rep)
    )
    spec = _train_spec(train, config)
    eval_seed = derive_seed(config.seed, "eval", prior_idx, rep)

    adversary_w = None
    if config.two_equilibria:
        # the generator anticipates the equilibrium model of the test-side
        # game, computed once per cell with default hyperparameters
        test_spec = _train_spec(test, config)
        adam = AdamConfig(
            batch_size=min(32, config.adam_samples),
            total_samples=config.adam_samples,
            epochs=config.adam_epochs,
            seed=derive_seed(config.seed, "testside", prior_idx, rep),
        )
        adversary_w, _ = bayes_adam(test_spec, prior, adam)

    rows = []
    for method in config.methods:
        for label, params in _method_grid(method, config):
            train_seed = derive_seed(config.seed, "train", prior_idx, rep, method, label)
            try:
                w = _train_method(method, params, spec, prior, config, train_seed)
                score = evaluate(
                    w,
                    test,
                    config.z_rule,
                    prior,
                    config.test_draws,
                    eval_seed,
                    adversary_w=adversary_w,
                )
                rows.append(ResultRow(method, family, params_label, rep, score, label))
            except Exception as exc:  # noqa: BLE001 - cell failures must not kill the run
                rows.append(
                    ResultRow(method, family, params_label, rep, float("nan"), label, str(exc))
                )
    return rows


def run_benchmark(config: BenchmarkConfig, data: Dataset, workers: int = 1) -> BenchmarkResult:
    """Full sweep over priors, repetitions, methods and hyperparameter grids.

    Cells are independent and may run in a process pool; results are gathered
    in a deterministic order.  Per (method, prior), the grid configuration
    with the best mean RMSE across repetitions is selected for the report.
    """
    if config.train_n + config.test_n > len(data):
        raise ValueError(
            f"train_n + test_n = {config.train_n + config.test_n} exceeds "
            f"dataset size {len(data)}"
        )
    cells = [
        (data, config, prior_idx, rep)
        for prior_idx in range(len(config.prior_grid))
        for rep in range(config.repetitions)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cell_rows = list(pool.map(_run_cell, cells))
    else:
        cell_rows = [_run_cell(cell) for cell in cells]

    all_rows = [row for rows in cell_rows for row in rows]
    selected_rows: list[ResultRow] = []
    aggregates = []
    for prior_idx in range(len(config.prior_grid)):
        family, params_label = prior_label(config.prior_grid[prior_idx])
        for method in config.methods:
            candidates = [
                r
                for r in all_rows
                if r.method == method and r.prior_params == params_label
                and r.prior_family == family
            ]
            by_config: dict[str, list[ResultRow]] = {}
            for row in candidates:
                by_config.setdefault(row.config_label, []).append(row)

            def _mean_or_inf(rows):
                values = [r.rmse for r in rows]
                if any(math.isnan(v) for v in values):
                    return float("inf")
                return float(np.mean(values))

            best_label = min(sorted(by_config), key=lambda lbl: _mean_or_inf(by_config[lbl]))
            chosen = sorted(by_config[best_label], key=lambda r: r.repetition)
            selected_rows.extend(chosen)
            values = [r.rmse for r in chosen if not math.isnan(r.rmse)]
            aggregates.append(
                {
                    "method": method,
                    "prior_family": family,
                    "prior_params": params_label,
                    "config": best_label,
                    "mean_rmse": float(np.mean(values)) if values else None,
                    "std_rmse": float(np.std(values)) if values else None,
                    "failures": sum(1 for r in chosen if r.error),
                }
            )
    return BenchmarkResult(rows=selected_rows, aggregates=aggregates)


def desk_config(priors, seed: int = 0, **overrides) -> BenchmarkConfig:
    """Desk-scale preset: 200/200 split, 3 repetitions, 100 test draws."""
    base = dict(train_n=200, test_n=200, repetitions=3, test_draws=100,
                prior_grid=tuple(priors), seed=seed)
    base.update(overrides)
    return BenchmarkConfig(**base)


def paper_config(priors, seed: int = 0, **overrides) -> BenchmarkConfig:
    """Full protocol preset: 500/500 split, 10 repetitions, 500 test draws."""
    base = dict(train_n=500, test_n=500, repetitions=10, test_draws=500,
                prior_grid=tuple(priors), seed=seed)
    base.update(overrides)
    return BenchmarkConfig(**base)
