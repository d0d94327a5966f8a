"""Command-line entry point: solve games, probe assumptions, run benchmarks.

Exit codes: 0 success, 1 configuration error, 2 runtime/solver failure.
Every output directory gets a metadata.json sidecar with the config hash,
seed and package version for replay.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    BenchmarkConfig,
    ZRule,
    load_spambase,
    run_benchmark,
)
from .game import FinitePrior, discretize_prior
from .serialize import (
    ConfigError,
    game_from_jsonable,
    prior_from_jsonable,
    profile_to_jsonable,
    solver_config_from_jsonable,
)
from .solvers import (
    ConfigurationError,
    SolverError,
    assumption_probe,
    equilibrium_residual,
    extragradient_reference,
    pg_rbc,
    prg_ie,
)

ALGORITHMS = ("prg-ie", "pg-rbc", "extragradient")
DEFAULT_DISCRETIZE_K = 16


def _load_json(path) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top-level document must be an object")
    return doc, hashlib.sha256(text.encode()).hexdigest()


def _write_metadata(out_dir: Path, config_hash: str, seed: int) -> None:
    meta = {"config_sha256": config_hash, "seed": seed, "version": __version__}
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")


def _finite_prior(doc: dict, spec_n: int, seed: int) -> FinitePrior:
    prior = prior_from_jsonable(doc.get("prior"), "prior")
    k = doc.get("discretize_k", DEFAULT_DISCRETIZE_K)
    if not isinstance(k, int) or k < 1:
        raise ConfigError("discretize_k: expected a positive integer")
    if isinstance(prior, FinitePrior):
        if prior.atoms.shape[1] != spec_n:
            raise ConfigError(
                f"prior.atoms: dimension {prior.atoms.shape[1]} does not match game n={spec_n}"
            )
        return prior
    return discretize_prior(prior, spec_n, k, seed)


def cmd_solve(args) -> int:
    doc, config_hash = _load_json(args.config)
    spec = game_from_jsonable(doc.get("game"), "game")
    solver = solver_config_from_jsonable(doc.get("solver", {"max_iters": 10_000, "gamma": 0.01}))
    if args.seed is not None:
        solver = replace(solver, seed=args.seed)
    algo = args.algo or doc.get("algorithm")
    if algo not in ALGORITHMS:
        raise ConfigError(f"algorithm: expected one of {ALGORITHMS}, got {algo!r}")
    prior = _finite_prior(doc, spec.n, solver.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if algo == "extragradient":
        tol = solver.tol if solver.tol > 0 else 1e-8
        profile = extragradient_reference(spec, prior, tol=tol, max_iters=solver.max_iters)
        residual = equilibrium_residual(profile, prior, spec)
        with open(out_dir / "trace.csv", "w") as fh:
            fh.write("t,residual,error_to_reference,wall_time_s\n")
            fh.write(f"0,{residual!r},,0.000000\n")
    else:
        run = prg_ie if algo == "prg-ie" else pg_rbc
        trace = run(spec, prior, solver)
        profile = trace.final_profile
        residual = trace.iterations[-1].residual
        trace.to_csv(out_dir / "trace.csv")

    (out_dir / "profile.json").write_text(
        json.dumps(profile_to_jsonable(profile), indent=2) + "\n"
    )
    _write_metadata(out_dir, config_hash, solver.seed)
    print(f"final residual: {residual:.6e}")
    return 0


def cmd_probe(args) -> int:
    doc, config_hash = _load_json(args.config)
    spec = game_from_jsonable(doc.get("game"), "game")
    probe = doc.get("probe", {})
    trials = probe.get("trials", 64)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 2:
        raise ConfigError("probe.trials: expected an integer >= 2")
    seed = args.seed if args.seed is not None else probe.get("seed", 0)
    prior = _finite_prior(doc, spec.n, seed)
    diag = assumption_probe(spec, prior, trials=trials, seed=seed)

    payload = asdict(diag)
    warnings = []
    if diag.lambda_hat <= 0:
        warnings.append("lambda_hat <= 0: instance looks non-monotone")
    gamma = doc.get("solver", {}).get("gamma")
    if isinstance(gamma, (int, float)) and not isinstance(gamma, bool):
        limit = min(1.0, 1.0 / (100.0 * diag.L_hat)) if diag.L_hat > 0 else 1.0
        if gamma >= limit:
            warnings.append(
                f"gamma={gamma} violates the prg-ie step bound min(1, 1/(100 L)) ~ {limit:.4g}"
            )
        if diag.lambda_hat > 0 and gamma <= 1.0 / (2.0 * diag.lambda_hat):
            warnings.append(
                f"gamma={gamma} violates the pg-rbc bound gamma > 1/(2 lambda) "
                f"~ {1.0 / (2.0 * diag.lambda_hat):.4g}"
            )
    payload["warnings"] = warnings
    payload["config_sha256"] = config_hash
    payload["version"] = __version__
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)
    return 0


def _benchmark_config(doc: dict, args) -> BenchmarkConfig:
    sizes = {
        "desk": dict(train_n=200, test_n=200, repetitions=3, test_draws=100),
        "paper": dict(train_n=500, test_n=500, repetitions=10, test_draws=500),
    }
    params: dict = {}
    if args.scale:
        params.update(sizes[args.scale])
    for key in ("train_n", "test_n", "repetitions", "test_draws"):
        if key in doc and not args.scale:
            params[key] = doc[key]
        params.setdefault(key, sizes["desk"][key])

    priors_doc = doc.get("priors")
    if not isinstance(priors_doc, list) or not priors_doc:
        raise ConfigError("priors: expected a nonempty list of prior objects")
    priors = tuple(
        prior_from_jsonable(p, f"priors[{i}]") for i, p in enumerate(priors_doc)
    )

    z_doc = doc.get("z_rule", {"kind": "flip"})
    kind = z_doc.get("kind", "flip") if isinstance(z_doc, dict) else None
    if kind not in ("flip", "zero", "custom"):
        raise ConfigError(f"z_rule.kind: expected flip|zero|custom, got {kind!r}")
    vector = np.asarray(z_doc["vector"], dtype=float) if kind == "custom" else None
    params["z_rule"] = ZRule(kind, vector)

    for key in (
        "methods",
        "c_l_value",
        "reg_l",
        "adam_lr_grid",
        "adam_batch_grid",
        "ridge_alpha_grid",
        "adam_epochs",
        "adam_samples",
        "fp_samples",
        "fp_iterations",
        "nash_iterations",
        "two_equilibria",
    ):
        if key in doc:
            value = doc[key]
            params[key] = tuple(value) if isinstance(value, list) else value
    params["seed"] = args.seed if args.seed is not None else doc.get("seed", 0)
    try:
        return BenchmarkConfig(prior_grid=priors, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"benchmark config: {exc}") from None


def cmd_benchmark(args) -> int:
    doc, config_hash = _load_json(args.config)
    config = _benchmark_config(doc, args)

    dataset_path = doc.get("dataset")
    if dataset_path is None:
        data_dir = os.environ.get("BAYESGAME_DATA")
        if not data_dir:
            raise ConfigError(
                "dataset: no path in config and BAYESGAME_DATA is not set"
            )
        dataset_path = os.path.join(data_dir, "spambase.data")
    try:
        data = load_spambase(dataset_path)
    except OSError as exc:
        raise ConfigError(f"dataset: cannot read {dataset_path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"dataset: {exc}") from None

    result = run_benchmark(config, data, workers=args.workers)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.to_csv(out_dir / "results.csv")
    (out_dir / "aggregate.json").write_text(json.dumps(result.to_json(), indent=2) + "\n")
    _write_metadata(out_dir, config_hash, config.seed)
    for agg in result.aggregates:
        mean = "nan" if agg["mean_rmse"] is None else f"{agg['mean_rmse']:.4f}"
        print(
            f"{agg['method']:<11} {agg['prior_family']:<10} {agg['prior_params']:<24} "
            f"rmse={mean} ({agg['config']})"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayesgame", description="Bayesian regression game solver suite"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute an equilibrium profile")
    p_solve.add_argument("--config", required=True, help="JSON file with game/prior/solver")
    p_solve.add_argument("--out", required=True, help="output directory")
    p_solve.add_argument("--algo", choices=ALGORITHMS, help="override the config's algorithm")
    p_solve.add_argument("--seed", type=int, help="override the solver seed")
    p_solve.set_defaults(func=cmd_solve)

    p_probe = sub.add_parser("probe", help="estimate monotonicity/Lipschitz constants")
    p_probe.add_argument("--config", required=True)
    p_probe.add_argument("--out", help="optional JSON output file")
    p_probe.add_argument("--seed", type=int, help="override the probe seed")
    p_probe.set_defaults(func=cmd_probe)

    p_bench = sub.add_parser("benchmark", help="run the evaluation protocol")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--scale", choices=("desk", "paper"), help="size preset")
    p_bench.add_argument("--seed", type=int, help="override the benchmark seed")
    p_bench.add_argument("--workers", type=int, default=1, help="benchmark worker pool size")
    p_bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
