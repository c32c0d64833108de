"""Benchmark objective functions with known global minimizers.

All evaluators are vectorized over the leading axis: they accept an
(N, d) array and return an (N,) array. ``evaluate`` on a single vector
goes through the same code path, so looped and batched evaluation agree
bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ObjectiveSpec",
    "GrowthReport",
    "get_objective",
    "evaluate",
    "batch_evaluate",
    "verify_growth_assumptions",
    "OBJECTIVE_NAMES",
    "STYBLINSKI_TANG_MINIMIZER",
    "STYBLINSKI_TANG_MIN_PER_DIM",
]

# Per-coordinate minimizer of 0.5*(s^4 - 16 s^2 + 5 s), i.e. the root of
# 4 s^3 - 32 s + 5 near -2.9, frozen from a 40-digit root-find.
STYBLINSKI_TANG_MINIMIZER = -2.903534027771177
STYBLINSKI_TANG_MIN_PER_DIM = -39.16616570377141


@dataclass(frozen=True)
class ObjectiveSpec:
    """A named benchmark with its known global minimum.

    ``eval`` maps an (N, d) array to an (N,) array of objective values.
    """

    name: str
    dim: int
    minimizer: np.ndarray
    min_value: float
    eval: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if self.minimizer.shape != (self.dim,):
            raise ValueError("minimizer length must equal dim")


def _ackley(x: np.ndarray) -> np.ndarray:
    a, b, c = 20.0, 0.2, 2.0 * np.pi
    sq = np.mean(x * x, axis=-1)
    cos = np.mean(np.cos(c * x), axis=-1)
    return -a * np.exp(-b * np.sqrt(sq)) - np.exp(cos) + a + np.e


def _rastrigin(x: np.ndarray) -> np.ndarray:
    A = 10.0
    d = x.shape[-1]
    return A * d + np.sum(x * x - A * np.cos(2.0 * np.pi * x), axis=-1)


def _styblinski_tang(x: np.ndarray) -> np.ndarray:
    return 0.5 * np.sum(x**4 - 16.0 * x * x + 5.0 * x, axis=-1)


def _quadratic(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


_FACTORIES = {
    "ackley": (_ackley, lambda d: np.zeros(d), lambda d: 0.0),
    "rastrigin": (_rastrigin, lambda d: np.zeros(d), lambda d: 0.0),
    "styblinski-tang": (
        _styblinski_tang,
        lambda d: np.full(d, STYBLINSKI_TANG_MINIMIZER),
        lambda d: d * STYBLINSKI_TANG_MIN_PER_DIM,
    ),
    "quadratic": (_quadratic, lambda d: np.zeros(d), lambda d: 0.0),
}

OBJECTIVE_NAMES = tuple(_FACTORIES)


def get_objective(name: str, dim: int) -> ObjectiveSpec:
    """Build a benchmark by config name ("ackley", "rastrigin", ...)."""
    try:
        fn, x_star, f_star = _FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown objective {name!r}; choose from {sorted(_FACTORIES)}"
        ) from None
    return ObjectiveSpec(
        name=name, dim=dim, minimizer=x_star(dim), min_value=f_star(dim), eval=fn
    )


def evaluate(obj: ObjectiveSpec, x: np.ndarray) -> float:
    """Evaluate the objective at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (obj.dim,):
        raise ValueError(f"expected vector of length {obj.dim}, got shape {x.shape}")
    return float(obj.eval(x[None, :])[0])


def batch_evaluate(obj: ObjectiveSpec, positions: np.ndarray) -> np.ndarray:
    """Evaluate the objective on every row of an (N, d) array."""
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != obj.dim:
        raise ValueError(
            f"expected (N, {obj.dim}) positions, got shape {positions.shape}"
        )
    return obj.eval(positions)


@dataclass
class GrowthReport:
    """Sampling-based evidence for the regularity conditions.

    A false flag means a witness violation was found among the samples; a
    true flag only evidences satisfaction (the constants are existential).
    """

    lipschitz_ok: bool
    lipschitz_const: float
    upper_ok: bool
    c_u: float
    lower_ok: bool
    c_l: float
    r_l: float
    inverse_ok: bool
    c_p: float
    p: float
    r_p: float
    e_inf: float
    sample_count: int


def verify_growth_assumptions(
    obj: ObjectiveSpec,
    box: np.ndarray,
    n_samples: int,
    rng_seed: int,
) -> GrowthReport:
    """Probe the growth and inverse-continuity conditions by sampling.

    ``box`` is a (d, 2) array of [low, high] bounds. Estimates the best-fit
    constants on ``n_samples`` uniform draws: a local Lipschitz constant on
    sample pairs, the quadratic upper/lower growth constants (lower growth
    tested outside radius ``r_l`` = half the box radius), and the
    p-conditioning constants around the known minimizer.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    box = np.asarray(box, dtype=np.float64)
    if box.ndim == 1:
        box = np.tile(box, (obj.dim, 1))
    if box.shape != (obj.dim, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("box must be a nonempty (d, 2) hyperrectangle")

    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(box[:, 0], box[:, 1], size=(n_samples, obj.dim))
    fx = batch_evaluate(obj, x) - obj.min_value
    norms = np.linalg.norm(x, axis=1)

    # Lipschitz: |E(x)-E(y)| <= L (1+|x|+|y|) |x-y| on random sample pairs.
    perm = rng.permutation(n_samples)
    y, fy = x[perm], fx[perm]
    dist = np.linalg.norm(x - y, axis=1)
    keep = dist > 1e-12
    ratios = np.abs(fx[keep] - fy[keep]) / (
        (1.0 + norms[keep] + norms[perm][keep]) * dist[keep]
    )
    lipschitz_const = float(ratios.max()) if ratios.size else 0.0
    lipschitz_ok = np.isfinite(lipschitz_const) and lipschitz_const > 0.0

    # Upper growth: E(x) - E(x*) <= c_u (1 + |x|^2).
    c_u = float(np.max(fx / (1.0 + norms**2)))
    upper_ok = np.isfinite(c_u) and c_u > 0.0

    # Lower growth outside r_l: E(x) - E(x*) >= c_l |x|^2.
    r_l = 0.5 * float(np.max(np.linalg.norm(box, axis=1)))
    far = norms > r_l
    if np.any(far):
        c_l = float(np.min(fx[far] / norms[far] ** 2))
    else:
        c_l = 0.0
    lower_ok = c_l > 0.0

    # Inverse continuity: c_p |x - x*|^p <= E(x) - E(x*) within radius r_p,
    # and E - E(x*) > e_inf beyond. The exponent p is fit by least squares
    # on log(E - E*) vs log|x - x*| near the minimizer.
    r = np.linalg.norm(x - obj.minimizer, axis=1)
    r_p = 0.5 * float(np.max(np.linalg.norm(box - obj.minimizer[:, None], axis=0)))
    near = (r > 1e-12) & (r <= r_p)
    positive = near & (fx > 0.0)
    if np.count_nonzero(positive) >= 2 and np.all(fx[near] > 0.0):
        lr, lf = np.log(r[positive]), np.log(fx[positive])
        p = float(np.polyfit(lr, lf, 1)[0])
        c_p = float(np.min(fx[positive] / r[positive] ** p)) if p > 0 else 0.0
    else:
        p, c_p = 0.0, 0.0
    beyond = r > r_p
    if np.any(beyond):
        e_inf = float(np.min(fx[beyond]))
    else:
        e_inf = c_p * r_p**p
    inverse_ok = p > 0.0 and c_p > 0.0 and e_inf > 0.0

    return GrowthReport(
        lipschitz_ok=bool(lipschitz_ok),
        lipschitz_const=lipschitz_const,
        upper_ok=bool(upper_ok),
        c_u=c_u,
        lower_ok=bool(lower_ok),
        c_l=c_l,
        r_l=r_l,
        inverse_ok=bool(inverse_ok),
        c_p=c_p,
        p=p,
        r_p=r_p,
        e_inf=e_inf,
        sample_count=n_samples,
    )
