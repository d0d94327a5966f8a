"""Game instances for adversarial regression: costs, gradients, projections, priors.

A game couples a learner (regression weights ``w``) with a data generator
that perturbs the training matrix ``X`` into ``Xbar``.  The generator's
per-instance weights ``c_d`` are uncertain to the learner and modelled by a
prior.  Everything here is a pure function of its inputs; randomness enters
only through explicit seeds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class LossKind(str, enum.Enum):
    """Pointwise loss f(w, x, t) applied per instance.

    QUADRATIC: (x.w - t)^2.  LOGISTIC: log(1 + exp(-t * x.w)), targets in {-1, +1}.
    """

    QUADRATIC = "quadratic"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class ActionSet:
    """A feasible set: all of R^d, or a centered L2/Frobenius ball."""

    kind: str  # "unconstrained" | "l2_ball"
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("unconstrained", "l2_ball"):
            raise ValueError(f"unknown action set kind {self.kind!r}")
        if self.kind == "l2_ball":
            if self.radius is None or self.radius <= 0:
                raise ValueError("l2_ball radius must be positive")
        elif self.radius is not None:
            raise ValueError("unconstrained set takes no radius")

    @property
    def bounded(self) -> bool:
        return self.kind == "l2_ball"

    @staticmethod
    def unconstrained() -> "ActionSet":
        return ActionSet("unconstrained")

    @staticmethod
    def l2_ball(radius: float) -> "ActionSet":
        return ActionSet("l2_ball", float(radius))


def project(point: np.ndarray, action_set: ActionSet) -> np.ndarray:
    """Euclidean projection onto the set (Frobenius norm for matrices)."""
    point = np.asarray(point, dtype=float)
    if not action_set.bounded:
        return point
    norm = np.linalg.norm(point)
    if norm <= action_set.radius:
        return point
    return point * (action_set.radius / norm)


def _sigmoid(t: np.ndarray) -> np.ndarray:
    # numerically stable logistic function
    out = np.empty_like(t, dtype=float)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _log1pexp(t: np.ndarray) -> np.ndarray:
    # log(1 + exp(t)) without overflow
    return np.where(t > 30.0, t, np.log1p(np.exp(np.minimum(t, 30.0))))


def _check_signs(values: np.ndarray, name: str) -> None:
    if not np.all(np.isin(values, (-1.0, 1.0))):
        raise ValueError(f"{name} must take values in {{-1, +1}} for logistic loss")


@dataclass(frozen=True)
class GameSpec:
    """One empirical game instance.

    ``X`` is the n-by-m training matrix, ``y`` the learner's targets, ``z``
    the generator's targeted predictions, ``c_l`` the learner's nonnegative
    instance weights.  ``reg_l`` scales the learner's ridge penalty
    ``|w|^2``; the generator's perturbation penalty ``|X - Xbar|_F^2``
    carries a fixed unit coefficient (``reg_d``), so generators are rescaled
    through ``c_d`` rather than through the penalty.
    """

    X: np.ndarray
    y: np.ndarray
    z: np.ndarray
    c_l: np.ndarray
    learner_loss: LossKind = LossKind.QUADRATIC
    adversary_loss: LossKind = LossKind.QUADRATIC
    learner_set: ActionSet = field(default_factory=ActionSet.unconstrained)
    adversary_set: ActionSet = field(default_factory=ActionSet.unconstrained)
    reg_l: float = 1.0
    reg_d: float = 1.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("X must be a matrix with n, m >= 1")
        n = X.shape[0]
        for name in ("y", "z", "c_l"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (n,):
                raise ValueError(f"{name} must have length n={n}, got shape {v.shape}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "X", X)
        if np.any(self.c_l < 0):
            raise ValueError("c_l must be nonnegative elementwise")
        if self.reg_l < 0:
            raise ValueError("reg_l must be nonnegative")
        if self.reg_d != 1.0:
            raise ValueError("reg_d is fixed to 1; rescale c_d instead")
        if self.learner_loss is LossKind.LOGISTIC:
            _check_signs(self.y, "y")
        if self.adversary_loss is LossKind.LOGISTIC:
            _check_signs(self.z, "z")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def _check_xbar(Xbar: np.ndarray, spec: GameSpec) -> np.ndarray:
    Xbar = np.asarray(Xbar, dtype=float)
    if Xbar.shape != spec.X.shape:
        raise ValueError(
            f"Xbar has shape {Xbar.shape}, expected {spec.X.shape} (game matrix)"
        )
    return Xbar


def _check_w(w: np.ndarray, spec: GameSpec) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.m,):
        raise ValueError(f"w has shape {w.shape}, expected ({spec.m},)")
    return w


def _check_cd(c_d: np.ndarray, spec: GameSpec) -> np.ndarray:
    c_d = np.asarray(c_d, dtype=float)
    if c_d.shape != (spec.n,):
        raise ValueError(f"c_d has shape {c_d.shape}, expected ({spec.n},)")
    if np.any(c_d < 0):
        raise ValueError("c_d must be nonnegative elementwise")
    return c_d


def learner_cost(w: np.ndarray, Xbar: np.ndarray, spec: GameSpec) -> float:
    """Weighted empirical loss of the learner plus ridge penalty."""
    w = _check_w(w, spec)
    Xbar = _check_xbar(Xbar, spec)
    margins = Xbar @ w
    if spec.learner_loss is LossKind.QUADRATIC:
        per_instance = (margins - spec.y) ** 2
    else:
        per_instance = _log1pexp(-spec.y * margins)
    return float(spec.c_l @ per_instance + spec.reg_l * (w @ w))


def adversary_cost(
    w: np.ndarray, Xbar: np.ndarray, c_d: np.ndarray, spec: GameSpec
) -> float:
    """Generator's targeting loss plus the Frobenius perturbation penalty."""
    w = _check_w(w, spec)
    Xbar = _check_xbar(Xbar, spec)
    c_d = _check_cd(c_d, spec)
    margins = Xbar @ w
    if spec.adversary_loss is LossKind.QUADRATIC:
        per_instance = (margins - spec.z) ** 2
    else:
        per_instance = _log1pexp(-spec.z * margins)
    diff = Xbar - spec.X
    return float(c_d @ per_instance + np.sum(diff * diff))


def grad_learner_w(w: np.ndarray, Xbar: np.ndarray, spec: GameSpec) -> np.ndarray:
    """Analytic gradient of ``learner_cost`` in ``w``."""
    w = _check_w(w, spec)
    Xbar = _check_xbar(Xbar, spec)
    if spec.learner_loss is LossKind.QUADRATIC:
        r = Xbar @ w - spec.y
        return 2.0 * (Xbar.T @ (spec.c_l * r)) + 2.0 * spec.reg_l * w
    s = _sigmoid(-spec.y * (Xbar @ w))
    return Xbar.T @ (spec.c_l * (-spec.y) * s) + 2.0 * spec.reg_l * w


def grad_adversary_X(
    w: np.ndarray, Xbar: np.ndarray, c_d: np.ndarray, spec: GameSpec
) -> np.ndarray:
    """Analytic gradient of ``adversary_cost`` in ``Xbar`` (n-by-m)."""
    w = _check_w(w, spec)
    Xbar = _check_xbar(Xbar, spec)
    c_d = _check_cd(c_d, spec)
    if spec.adversary_loss is LossKind.QUADRATIC:
        r = Xbar @ w - spec.z
        coef = 2.0 * c_d * r
    else:
        s = _sigmoid(-spec.z * (Xbar @ w))
        coef = c_d * (-spec.z) * s
    return np.outer(coef, w) + 2.0 * (Xbar - spec.X)


# --------------------------------------------------------------------------
# Priors over the generator's instance weights c_d
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FinitePrior:
    """Discrete prior: K atom vectors (rows of ``atoms``) with probabilities."""

    atoms: np.ndarray  # (K, n)
    probs: np.ndarray  # (K,)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.shape[0] != atoms.shape[0]:
            raise ValueError("probs must have one entry per atom")
        if np.any(probs <= 0):
            raise ValueError("atom probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {probs.sum()!r}, not 1")
        if np.any(atoms < 0):
            raise ValueError("atoms must be nonnegative elementwise")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @property
    def num_atoms(self) -> int:
        return self.atoms.shape[0]

    def draw(self, rng: np.random.Generator, n: int, num_samples: int) -> np.ndarray:
        if self.atoms.shape[1] != n:
            raise ValueError(f"prior atoms have dimension {self.atoms.shape[1]}, expected {n}")
        idx = rng.choice(self.num_atoms, size=num_samples, p=self.probs)
        return self.atoms[idx].copy()

    def mean(self, n: int) -> np.ndarray:
        return self.probs @ self.atoms


@dataclass(frozen=True)
class GaussianPrior:
    """i.i.d. per-coordinate normal; draws are clamped at 0 downstream."""

    mean: float
    std: float

    def __post_init__(self):
        if self.std <= 0:
            raise ValueError("std must be positive")

    def draw(self, rng: np.random.Generator, n: int, num_samples: int) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=(num_samples, n))

    def mean_vector(self, n: int) -> np.ndarray:
        return np.full(n, self.mean)


@dataclass(frozen=True)
class GammaPrior:
    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("gamma shape and scale must be positive")

    def draw(self, rng: np.random.Generator, n: int, num_samples: int) -> np.ndarray:
        return rng.gamma(self.shape, self.scale, size=(num_samples, n))

    def mean_vector(self, n: int) -> np.ndarray:
        return np.full(n, self.shape * self.scale)


@dataclass(frozen=True)
class LogNormalPrior:
    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("lognormal sigma must be positive")

    def draw(self, rng: np.random.Generator, n: int, num_samples: int) -> np.ndarray:
        return rng.lognormal(self.mu, self.sigma, size=(num_samples, n))

    def mean_vector(self, n: int) -> np.ndarray:
        return np.full(n, math.exp(self.mu + 0.5 * self.sigma**2))


Prior = FinitePrior | GaussianPrior | GammaPrior | LogNormalPrior


def prior_mean(prior: Prior, n: int) -> np.ndarray:
    """Coordinatewise mean of the prior, clamped to be nonnegative."""
    if isinstance(prior, FinitePrior):
        mean = prior.mean(n)
    else:
        mean = prior.mean_vector(n)
    return np.maximum(mean, 0.0)


def sample_prior(prior: Prior, n: int, num_samples: int, seed: int) -> np.ndarray:
    """Draw ``num_samples`` weight vectors, clamped at 0, deterministically.

    Returns an array of shape (num_samples, n); row s is one draw of c_d.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    rng = np.random.default_rng(seed)
    draws = prior.draw(rng, n, num_samples)
    return np.maximum(draws, 0.0)


def discretize_prior(prior: Prior, n: int, K: int, seed: int) -> FinitePrior:
    """Monte-Carlo instantiation of a prior as K equally weighted atoms.

    A finite prior whose atom count already equals K passes through unchanged.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if isinstance(prior, FinitePrior) and prior.num_atoms == K:
        return prior
    atoms = sample_prior(prior, n, K, seed)
    return FinitePrior(atoms=atoms, probs=np.full(K, 1.0 / K))


@dataclass
class StrategyProfile:
    """Learner weights plus the generator's per-atom perturbed matrices.

    ``sigma`` stacks the K transformed matrices as an array of shape (K, n, m);
    ``sigma[k]`` is the generator's response to atom k of the finite prior.
    """

    w: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.w.ndim != 1 or self.sigma.ndim != 3:
            raise ValueError("profile needs w of shape (m,) and sigma of shape (K, n, m)")

    @property
    def num_atoms(self) -> int:
        return self.sigma.shape[0]

    def copy(self) -> "StrategyProfile":
        return StrategyProfile(self.w.copy(), self.sigma.copy())

    def is_feasible(self, spec: GameSpec, tol: float = 1e-9) -> bool:
        if np.linalg.norm(self.w - project(self.w, spec.learner_set)) > tol:
            return False
        return all(
            np.linalg.norm(s - project(s, spec.adversary_set)) <= tol
            for s in self.sigma
        )


def origin_profile(spec: GameSpec, K: int) -> StrategyProfile:
    """Projection of the all-zero profile onto the action sets (the zero profile)."""
    w = project(np.zeros(spec.m), spec.learner_set)
    sigma = np.stack(
        [project(np.zeros((spec.n, spec.m)), spec.adversary_set) for _ in range(K)]
    )
    return StrategyProfile(w=w, sigma=sigma)
