"""Parent-selection kernels as explicit distributions over an ensemble.

Every kernel turns the current objective values into a pair of marginal
probability vectors (one per parent slot). Sampling goes through a
cumulative-sum table with binary search, so draws are a deterministic
function of the RNG stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RouletteWheel",
    "Boltzmann",
    "Rank",
    "CBOAsymmetric",
    "SelectionKernel",
    "ParentWeights",
    "kernel_from_config",
    "boltzmann_weights",
    "selection_weights",
    "sample_indices",
    "sample_parent_pairs",
    "weighted_mean",
]


@dataclass(frozen=True)
class RouletteWheel:
    """Fitness-proportional selection with a named decreasing fitness map.

    ``fitness="exp"`` uses g(v) = exp(-alpha v) (identical to Boltzmann);
    ``fitness="inverse"`` uses g(v) = 1 / (1 + (v - min v)).
    """

    fitness: str = "inverse"
    alpha: float = 1.0

    def __post_init__(self):
        if self.fitness not in ("exp", "inverse"):
            raise ValueError(f"unknown fitness map {self.fitness!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class Boltzmann:
    """Gibbs selection at inverse temperature alpha."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class Rank:
    """Rank selection; weight of i proportional to #{j : v_i <= v_j}."""


@dataclass(frozen=True)
class CBOAsymmetric:
    """First parent uniform (or the particle itself), second parent Gibbs."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


SelectionKernel = RouletteWheel | Boltzmann | Rank | CBOAsymmetric

_KERNEL_NAMES = {
    "roulette": RouletteWheel,
    "boltzmann": Boltzmann,
    "rank": Rank,
    "cbo": CBOAsymmetric,
}


def kernel_from_config(name: str, alpha: float | None = None) -> SelectionKernel:
    """Build a kernel from its config name ("boltzmann", "rank", ...)."""
    if name not in _KERNEL_NAMES:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(_KERNEL_NAMES)}")
    if name == "rank":
        return Rank()
    if name == "roulette":
        return RouletteWheel() if alpha is None else RouletteWheel(alpha=alpha)
    if alpha is None:
        raise ValueError(f"kernel {name!r} requires alpha")
    return _KERNEL_NAMES[name](alpha=alpha)


def kernel_name(kernel: SelectionKernel) -> str:
    for name, cls in _KERNEL_NAMES.items():
        if isinstance(kernel, cls):
            return name
    raise TypeError(f"not a selection kernel: {kernel!r}")


@dataclass(frozen=True)
class ParentWeights:
    """Marginal distributions of the two parent slots over the ensemble."""

    first: np.ndarray
    second: np.ndarray


def _check_values(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("values must be a nonempty 1-D array")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    return values


def boltzmann_weights(values: np.ndarray, alpha: float) -> np.ndarray:
    """Gibbs weights exp(-alpha v_i) / sum, shifted by min(values).

    The shift is exact: Gibbs weights are invariant under translations of
    the objective, and after shifting the minimum maps to e^0 = 1, so the
    normalizer can never underflow to zero.
    """
    values = _check_values(values)
    w = np.exp(-alpha * (values - values.min()))
    return w / w.sum()


def rank_weights(values: np.ndarray) -> np.ndarray:
    """Tie-consistent rank weights: w_i proportional to #{j : v_i <= v_j}."""
    values = _check_values(values)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    # count of j with v_i <= v_j = N - (number of strictly smaller values)
    n_smaller = np.searchsorted(sorted_vals, values, side="left")
    counts = values.size - n_smaller
    return counts / counts.sum()


def selection_weights(kernel: SelectionKernel, values: np.ndarray) -> ParentWeights:
    """Marginal parent distributions induced by a kernel on given values."""
    values = _check_values(values)
    if isinstance(kernel, Boltzmann):
        w = boltzmann_weights(values, kernel.alpha)
        return ParentWeights(first=w, second=w)
    if isinstance(kernel, Rank):
        w = rank_weights(values)
        return ParentWeights(first=w, second=w)
    if isinstance(kernel, RouletteWheel):
        if kernel.fitness == "exp":
            w = boltzmann_weights(values, kernel.alpha)
        else:
            g = 1.0 / (1.0 + (values - values.min()))
            w = g / g.sum()
        return ParentWeights(first=w, second=w)
    if isinstance(kernel, CBOAsymmetric):
        uniform = np.full(values.size, 1.0 / values.size)
        return ParentWeights(
            first=uniform, second=boltzmann_weights(values, kernel.alpha)
        )
    raise TypeError(f"not a selection kernel: {kernel!r}")


def sample_indices(weights: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. indices from a probability vector.

    Inverse-CDF sampling: cumulative-sum table plus binary search, so the
    result is a pure function of the uniforms consumed from ``rng``.
    """
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    u = rng.random(count)
    return np.searchsorted(cdf, u, side="right")


def sample_parent_pairs(
    weights: ParentWeights, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` independent parent index pairs, shape (count, 2).

    The two slots are drawn independently (a particle may mate with
    itself). First-slot uniforms are consumed before second-slot uniforms.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    first = sample_indices(weights.first, count, rng)
    second = sample_indices(weights.second, count, rng)
    return np.stack([first, second], axis=1)


def weighted_mean(positions: np.ndarray, values: np.ndarray, alpha: float) -> np.ndarray:
    """Gibbs-weighted mean of the rows of ``positions``.

    Uses the same shift-stable weights as Boltzmann selection, so the
    result is invariant under translations of the objective values and
    finite for any alpha.
    """
    positions = np.asarray(positions, dtype=np.float64)
    w = boltzmann_weights(values, alpha)
    return w @ positions
