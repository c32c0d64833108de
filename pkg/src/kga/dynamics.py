"""One-generation transition operators for the particle systems.

``ga_step`` implements the selection/crossover/mutation Markov chain with
the quasi-invariant scaling (Bernoulli rate tau/eps, drift eps*gamma,
noise sqrt(eps)*sigma). ``cbo_step`` is the consensus dynamics toward the
Gibbs-weighted mean, and ``kbo_step`` the binary-collision comparator.

RNG contract: each generation consumes the run's generator in a fixed
order - replacement flags T for all particles, then first-parent
uniforms, then second-parent uniforms, then the Gaussian mutation block -
so trajectories are bitwise reproducible from (params, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .objectives import ObjectiveSpec, batch_evaluate
from .selection import (
    CBOAsymmetric,
    SelectionKernel,
    sample_indices,
    selection_weights,
    weighted_mean,
)

__all__ = [
    "Ensemble",
    "DynamicsParams",
    "MutationState",
    "SigmaSchedule",
    "Constant",
    "Geometric",
    "Diffusion",
    "IsotropicConstant",
    "Isotropic",
    "ParentDifference",
    "schedule_sigma",
    "crossover_mutate",
    "ga_step",
    "cbo_step",
    "kbo_step",
    "init_uniform",
]


@dataclass
class Ensemble:
    """Particle positions (N x d) plus the generation counter."""

    positions: np.ndarray
    generation: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2 or self.positions.shape[0] < 1:
            raise ValueError("positions must be a nonempty (N, d) array")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class Constant:
    """Mutation strength fixed at sigma0."""


@dataclass(frozen=True)
class Geometric:
    """Cooling: sigma_k = sigma0 * factor**k."""

    factor: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ValueError("cooling factor must lie in (0, 1)")


SigmaSchedule = Constant | Geometric


@dataclass(frozen=True)
class IsotropicConstant:
    """Non-degenerate diffusion with a fixed vector D."""

    d_vec: tuple[float, ...] = (1.0,)


@dataclass(frozen=True)
class Isotropic:
    """CBO norm-isotropic diffusion, D = |m_alpha - x| * (1, ..., 1)."""


@dataclass(frozen=True)
class ParentDifference:
    """Anisotropic diffusion, D = x_star - x (or m_alpha - x for CBO)."""


Diffusion = IsotropicConstant | Isotropic | ParentDifference


@dataclass(frozen=True)
class DynamicsParams:
    """Full configuration of one GA/CBO run."""

    tau: float
    gamma: tuple[float, ...]
    epsilon: float = 1.0
    lam: float = 1.0
    alpha: float = 1.0
    sigma0: float = 0.0
    sigma_schedule: SigmaSchedule = Constant()
    diffusion: Diffusion = IsotropicConstant()
    n: int = 100
    k_max: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if not self.tau <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [tau, 1]")
        if any(not 0.0 <= g <= 1.0 for g in self.gamma):
            raise ValueError("gamma must lie in [0, 1] componentwise")
        if self.lam < 0.0:
            raise ValueError("lambda must be nonnegative")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.sigma0 < 0.0:
            raise ValueError("sigma0 must be nonnegative")


@dataclass(frozen=True)
class MutationState:
    """Current mutation strength sigma_k at generation k."""

    sigma_k: float
    k: int = 0


def schedule_sigma(schedule: SigmaSchedule, sigma0: float, k: int) -> float:
    """Mutation strength at generation k under the given schedule."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if isinstance(schedule, Constant):
        return sigma0
    if isinstance(schedule, Geometric):
        return sigma0 * schedule.factor**k
    raise TypeError(f"not a sigma schedule: {schedule!r}")


def mutation_state(params: DynamicsParams, k: int) -> MutationState:
    return MutationState(sigma_k=schedule_sigma(params.sigma_schedule, params.sigma0, k), k=k)


def crossover_mutate(
    x: np.ndarray,
    x_star: np.ndarray,
    gamma: np.ndarray,
    sigma: float,
    diffusion_vec: np.ndarray,
    xi: np.ndarray,
) -> np.ndarray:
    """Offspring (1-gamma) x + gamma x_star + sigma * D (*) xi, componentwise.

    Broadcasts over leading axes, so it applies to one pair or a batch.
    """
    return (1.0 - gamma) * x + gamma * x_star + sigma * (diffusion_vec * xi)


def _diffusion_vec(diffusion: Diffusion, x: np.ndarray, x_star: np.ndarray) -> np.ndarray:
    if isinstance(diffusion, IsotropicConstant):
        return np.broadcast_to(np.asarray(diffusion.d_vec, dtype=np.float64), x.shape)
    if isinstance(diffusion, Isotropic):
        return np.broadcast_to(
            np.linalg.norm(x_star - x, axis=-1, keepdims=True), x.shape
        )
    if isinstance(diffusion, ParentDifference):
        return x_star - x
    raise TypeError(f"not a diffusion mode: {diffusion!r}")


def ga_step(
    ens: Ensemble,
    params: DynamicsParams,
    kernel: SelectionKernel,
    obj: ObjectiveSpec,
    mut: MutationState,
    rng: np.random.Generator,
) -> Ensemble:
    """One generation of the scaled GA Markov chain.

    Each particle is replaced with probability tau/eps; replacements are
    offspring of parents sampled from the kernel over the *current*
    generation's values, with drift eps*gamma and noise sqrt(eps)*sigma_k.
    For the CBO-asymmetric kernel the first parent is the particle itself,
    so no first-parent uniforms are consumed.
    """
    if ens.dim != obj.dim or len(params.gamma) != ens.dim:
        raise ValueError("ensemble, params, and objective dimensions must agree")
    n = ens.n
    values = batch_evaluate(obj, ens.positions)
    weights = selection_weights(kernel, values)

    replace_mask = rng.random(n) < params.tau / params.epsilon
    idx = np.flatnonzero(replace_mask)
    new_positions = ens.positions.copy()
    if idx.size:
        if isinstance(kernel, CBOAsymmetric):
            first = idx
        else:
            first = sample_indices(weights.first, idx.size, rng)
        second = sample_indices(weights.second, idx.size, rng)
        xi = rng.standard_normal((idx.size, ens.dim))
        x, x_star = ens.positions[first], ens.positions[second]
        gamma_eff = params.epsilon * np.asarray(params.gamma, dtype=np.float64)
        sigma_eff = math.sqrt(params.epsilon) * mut.sigma_k
        d_vec = _diffusion_vec(params.diffusion, x, x_star)
        new_positions[idx] = crossover_mutate(x, x_star, gamma_eff, sigma_eff, d_vec, xi)
    return Ensemble(new_positions, ens.generation + 1)


def cbo_step(
    ens: Ensemble,
    params: DynamicsParams,
    obj: ObjectiveSpec,
    mut: MutationState,
    rng: np.random.Generator,
) -> Ensemble:
    """One consensus step toward the Gibbs-weighted mean.

    X' = X + tau*lam*(m_alpha - X) + sqrt(tau)*sigma_k*D (*) xi, with D the
    constant vector, |m_alpha - X| (norm-isotropic), or m_alpha - X
    (anisotropic) depending on the configured diffusion.
    """
    if ens.dim != obj.dim:
        raise ValueError("ensemble and objective dimensions must agree")
    values = batch_evaluate(obj, ens.positions)
    m_alpha = weighted_mean(ens.positions, values, params.alpha)
    xi = rng.standard_normal(ens.positions.shape)
    d_vec = _diffusion_vec(params.diffusion, ens.positions, m_alpha[None, :])
    drift = params.tau * params.lam * (m_alpha - ens.positions)
    noise = math.sqrt(params.tau) * mut.sigma_k * d_vec * xi
    return Ensemble(ens.positions + drift + noise, ens.generation + 1)


def kbo_step(
    ens: Ensemble,
    lam: float,
    sigma: float,
    alpha: float,
    obj: ObjectiveSpec,
    rng: np.random.Generator,
) -> Ensemble:
    """One round of Nanbu-style binary collisions.

    Particles are paired by a uniform random permutation; each pair (x, x*)
    moves by the convex blend with objective-dependent weight
    gamma(x, x*) = exp(-alpha E(x*)) / (exp(-alpha E(x)) + exp(-alpha E(x*))),
    computed shift-stably, plus isotropic Gaussian noise. With odd N one
    uniformly chosen particle sits the round out.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    n = ens.n
    perm = rng.permutation(n)
    if n % 2 == 1:
        perm = np.delete(perm, rng.integers(n))
    a, b = perm[0::2], perm[1::2]
    values = batch_evaluate(obj, ens.positions)
    # gamma(x, x*) = sigmoid(alpha (E(x) - E(x*))): overflow-free form of
    # the Gibbs ratio between the pair's objective values.
    diff = alpha * (values[a] - values[b])
    g_ab = np.empty_like(diff)
    pos = diff >= 0
    g_ab[pos] = 1.0 / (1.0 + np.exp(-diff[pos]))
    e = np.exp(diff[~pos])
    g_ab[~pos] = e / (1.0 + e)
    g_ab = g_ab[:, None]
    g_ba = 1.0 - g_ab
    xa, xb = ens.positions[a], ens.positions[b]
    xi_a = rng.standard_normal(xa.shape)
    xi_b = rng.standard_normal(xb.shape)
    new_positions = ens.positions.copy()
    new_positions[a] = (1.0 - lam * g_ab) * xa + lam * g_ab * xb + sigma * xi_a
    new_positions[b] = (1.0 - lam * g_ba) * xb + lam * g_ba * xa + sigma * xi_b
    return Ensemble(new_positions, ens.generation + 1)


def init_uniform(
    box: np.ndarray, n: int, dim: int, rng: np.random.Generator
) -> Ensemble:
    """Initial ensemble with rows drawn uniformly from a hyperrectangle."""
    box = np.asarray(box, dtype=np.float64)
    if box.ndim == 1:
        box = np.tile(box, (dim, 1))
    if box.shape != (dim, 2):
        raise ValueError("init box must be (d, 2) or a single [low, high] pair")
    return Ensemble(rng.uniform(box[:, 0], box[:, 1], size=(n, dim)), generation=0)
