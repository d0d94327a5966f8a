"""JSON codecs for game instances, priors, profiles and solver configs.

The document schema is described in the README.  Matrices are nested lists
in row-major order.  Decoding errors raise ``ConfigError`` whose message
starts with the JSON path of the offending field.
"""

from __future__ import annotations

import numpy as np

from .game import (
    ActionSet,
    FinitePrior,
    GameSpec,
    GammaPrior,
    GaussianPrior,
    LogNormalPrior,
    LossKind,
    Prior,
    StrategyProfile,
)
from .solvers import SolverConfig


class ConfigError(ValueError):
    """Malformed configuration document."""


def _require(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in obj:
        raise ConfigError(f"{path}.{key}: missing required field")
    return obj[key]


def _number(obj: dict, key: str, path: str, default=None) -> float:
    if default is not None and key not in obj:
        return default
    value = _require(obj, key, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    return float(value)


def _array(obj: dict, key: str, path: str, ndim: int) -> np.ndarray:
    value = _require(obj, key, path)
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.{key}: not a numeric array ({exc})") from None
    if arr.ndim != ndim:
        raise ConfigError(f"{path}.{key}: expected a {ndim}-dimensional array, got {arr.ndim}")
    return arr


def action_set_to_jsonable(action_set: ActionSet) -> dict:
    if action_set.bounded:
        return {"kind": "l2_ball", "radius": action_set.radius}
    return {"kind": "unconstrained"}


def action_set_from_jsonable(obj, path: str) -> ActionSet:
    kind = _require(obj, "kind", path)
    if kind == "unconstrained":
        return ActionSet.unconstrained()
    if kind == "l2_ball":
        return ActionSet.l2_ball(_number(obj, "radius", path))
    raise ConfigError(f"{path}.kind: unknown action set kind {kind!r}")


def game_to_jsonable(spec: GameSpec) -> dict:
    return {
        "X": spec.X.tolist(),
        "y": spec.y.tolist(),
        "z": spec.z.tolist(),
        "c_l": spec.c_l.tolist(),
        "learner_loss": spec.learner_loss.value,
        "adversary_loss": spec.adversary_loss.value,
        "learner_set": action_set_to_jsonable(spec.learner_set),
        "adversary_set": action_set_to_jsonable(spec.adversary_set),
        "reg_l": spec.reg_l,
        "reg_d": spec.reg_d,
    }


def game_from_jsonable(obj, path: str = "game") -> GameSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    losses = {}
    for key in ("learner_loss", "adversary_loss"):
        raw = obj.get(key, "quadratic")
        try:
            losses[key] = LossKind(raw)
        except ValueError:
            raise ConfigError(f"{path}.{key}: unknown loss kind {raw!r}") from None
    try:
        return GameSpec(
            X=_array(obj, "X", path, 2),
            y=_array(obj, "y", path, 1),
            z=_array(obj, "z", path, 1),
            c_l=_array(obj, "c_l", path, 1),
            learner_loss=losses["learner_loss"],
            adversary_loss=losses["adversary_loss"],
            learner_set=action_set_from_jsonable(
                obj.get("learner_set", {"kind": "unconstrained"}), f"{path}.learner_set"
            ),
            adversary_set=action_set_from_jsonable(
                obj.get("adversary_set", {"kind": "unconstrained"}), f"{path}.adversary_set"
            ),
            reg_l=_number(obj, "reg_l", path, default=1.0),
            reg_d=_number(obj, "reg_d", path, default=1.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def prior_to_jsonable(prior: Prior) -> dict:
    if isinstance(prior, FinitePrior):
        return {"family": "finite", "atoms": prior.atoms.tolist(), "probs": prior.probs.tolist()}
    if isinstance(prior, GaussianPrior):
        return {"family": "gaussian", "mean": prior.mean, "std": prior.std}
    if isinstance(prior, GammaPrior):
        return {"family": "gamma", "shape": prior.shape, "scale": prior.scale}
    if isinstance(prior, LogNormalPrior):
        return {"family": "lognormal", "mu": prior.mu, "sigma": prior.sigma}
    raise TypeError(f"unknown prior type {type(prior)!r}")


def prior_from_jsonable(obj, path: str = "prior") -> Prior:
    family = _require(obj, "family", path)
    try:
        if family == "finite":
            return FinitePrior(
                atoms=_array(obj, "atoms", path, 2), probs=_array(obj, "probs", path, 1)
            )
        if family == "gaussian":
            return GaussianPrior(mean=_number(obj, "mean", path), std=_number(obj, "std", path))
        if family == "gamma":
            return GammaPrior(shape=_number(obj, "shape", path), scale=_number(obj, "scale", path))
        if family == "lognormal":
            return LogNormalPrior(mu=_number(obj, "mu", path), sigma=_number(obj, "sigma", path))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.family: unknown prior family {family!r}")


def profile_to_jsonable(profile: StrategyProfile) -> dict:
    return {"w": profile.w.tolist(), "sigma": profile.sigma.tolist()}


def profile_from_jsonable(obj, path: str = "profile") -> StrategyProfile:
    return StrategyProfile(w=_array(obj, "w", path, 1), sigma=_array(obj, "sigma", path, 3))


def solver_config_from_jsonable(obj, path: str = "solver") -> SolverConfig:
    max_iters = _require(obj, "max_iters", path)
    if not isinstance(max_iters, int) or isinstance(max_iters, bool):
        raise ConfigError(f"{path}.max_iters: expected an integer")
    kwargs = {}
    for key in ("lipschitz", "strong_monotonicity"):
        if obj.get(key) is not None:
            kwargs[key] = _number(obj, key, path)
    try:
        return SolverConfig(
            max_iters=max_iters,
            gamma=_number(obj, "gamma", path),
            seed=int(_number(obj, "seed", path, default=0.0)),
            tol=_number(obj, "tol", path, default=0.0),
            trace_every=int(_number(obj, "trace_every", path, default=100.0)),
            **kwargs,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
