"""Config-driven experiment harnesses with seeded repetitions.

Each ``run_*`` function simulates the configured particle systems and
returns an :class:`ExperimentResult` holding tidy rows grouped by output
table, plus metadata sufficient to reproduce every row. Repetition seeds
are derived from the master seed with a splitmix-style hash, so cells are
independent and can be executed in any order or concurrently.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .dynamics import (
    Constant,
    DynamicsParams,
    Ensemble,
    Geometric,
    IsotropicConstant,
    ParentDifference,
    cbo_step,
    ga_step,
    init_uniform,
    mutation_state,
)
from .measures import box_stats, ensemble_stats, histogram, wasserstein1_1d
from .objectives import ObjectiveSpec, batch_evaluate, get_objective
from .selection import Boltzmann, CBOAsymmetric, Rank, SelectionKernel, kernel_name

__all__ = [
    "ExperimentSpec",
    "ExperimentResult",
    "derive_seed",
    "run_experiment",
    "run_propagation_of_chaos",
    "run_steady_state",
    "run_scaling_comparison",
    "run_convergence_check",
    "PRESET_NAMES",
    "preset",
]

KINDS = (
    "propagation_of_chaos",
    "steady_state",
    "scaling_comparison",
    "convergence_check",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved configuration of one experiment."""

    kind: str
    objectives: tuple[str, ...]
    dim: int
    base_params: DynamicsParams
    kernels: tuple[SelectionKernel, ...]
    population_list: tuple[int, ...] = (100,)
    epsilon_list: tuple[float, ...] = (1.0,)
    methods: tuple[str, ...] = ("ga",)
    repetitions: int = 1
    reference_n: int = 100_000
    snapshot_stride: int = 10
    init_box: tuple[float, float] = (-2.0, 2.0)
    master_seed: int = 0
    cbo_sigma: float = 3.0
    hist_bins: int = 100
    init_mean: float | None = None
    accuracy: float = 1e-2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.kind == "propagation_of_chaos" and self.reference_n <= max(
            self.population_list
        ):
            raise ValueError("reference_n must exceed every swept population size")
        if not self.objectives:
            raise ValueError("at least one objective is required")
        if not self.kernels and self.kind != "scaling_comparison":
            raise ValueError("at least one kernel is required")


@dataclass
class ExperimentResult:
    """Tidy rows grouped by output table, plus the resolved config."""

    kind: str
    tables: dict[str, list[dict]]
    metadata: dict

    def check_finite(self) -> None:
        """Fail loudly if any numeric cell is non-finite."""
        for name, rows in self.tables.items():
            for row in rows:
                for key, value in row.items():
                    if isinstance(value, float) and not np.isfinite(value):
                        raise ValueError(
                            f"non-finite value in table {name!r}: {key}={value} ({row})"
                        )


def derive_seed(master_seed: int, repetition: int, role: str) -> int:
    """Independent stream seed from (master seed, repetition, role).

    Splitmix64 finalizer over the master seed, repetition index, and a
    sha256 digest of the role string; stable across processes.
    """
    role_hash = int.from_bytes(
        hashlib.sha256(role.encode("utf-8")).digest()[:8], "little"
    )
    z = (master_seed * 0x9E3779B97F4A7C15 + repetition + role_hash) & 0xFFFFFFFFFFFFFFFF
    z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _simulate_ga(
    obj: ObjectiveSpec,
    params: DynamicsParams,
    kernel: SelectionKernel,
    seed: int,
    init_box,
    init_mean: float | None = None,
    on_generation: Callable[[Ensemble], None] | None = None,
) -> Ensemble:
    """Run the GA chain for k_max generations from a uniform init."""
    rng = np.random.default_rng(seed)
    ens = init_uniform(init_box, params.n, obj.dim, rng)
    if init_mean is not None:
        ens = Ensemble(
            ens.positions + (init_mean - ens.positions.mean(axis=0)), generation=0
        )
    if on_generation is not None:
        on_generation(ens)
    for _ in range(params.k_max):
        mut = mutation_state(params, ens.generation)
        ens = ga_step(ens, params, kernel, obj, mut, rng)
        if on_generation is not None:
            on_generation(ens)
    return ens


def _simulate_cbo(
    obj: ObjectiveSpec,
    params: DynamicsParams,
    seed: int,
    init_box,
    on_generation: Callable[[Ensemble], None] | None = None,
) -> Ensemble:
    """Run the CBO dynamics for k_max generations from a uniform init."""
    rng = np.random.default_rng(seed)
    ens = init_uniform(init_box, params.n, obj.dim, rng)
    if on_generation is not None:
        on_generation(ens)
    for _ in range(params.k_max):
        mut = mutation_state(params, ens.generation)
        ens = cbo_step(ens, params, obj, mut, rng)
        if on_generation is not None:
            on_generation(ens)
    return ens


def _snapshot_steps(k_max: int, stride: int) -> list[int]:
    steps = list(range(0, k_max + 1, stride))
    if steps[-1] != k_max:
        steps.append(k_max)
    return steps


def _run_cells(cells: Iterable[Callable[[], list[dict]]], threads: int) -> list[dict]:
    """Execute independent cells, optionally in a thread pool.

    Each cell owns its RNG, so results are order-independent; callers sort
    the merged rows before emission.
    """
    cells = list(cells)
    if threads <= 1:
        results = [cell() for cell in cells]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: c(), cells))
    return [row for rows in results for row in rows]


def run_propagation_of_chaos(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """W1 distance between finite-N runs and a large-N reference.

    One reference run per kernel with ``reference_n`` particles, then
    ``repetitions`` independent runs per population size; records
    W1(f^N_k, ref_k) at every snapshot and per-(kernel, N, k) summary rows
    with the mean and [0.1, 0.9] quantiles across repetitions.
    """
    if spec.dim != 1:
        raise ValueError("propagation-of-chaos diagnostics require d = 1")
    obj = get_objective(spec.objectives[0], 1)
    steps = set(_snapshot_steps(spec.base_params.k_max, spec.snapshot_stride))

    def snapshots_of(params, kernel, seed):
        snaps = {}

        def record(ens):
            if ens.generation in steps:
                snaps[ens.generation] = ens.positions.ravel().copy()

        _simulate_ga(obj, params, kernel, seed, spec.init_box, on_generation=record)
        return snaps

    references = {}
    for kernel in spec.kernels:
        kname = kernel_name(kernel)
        ref_params = replace(spec.base_params, n=spec.reference_n)
        references[kname] = snapshots_of(
            ref_params, kernel, derive_seed(spec.master_seed, 0, f"poc-ref:{kname}")
        )

    def make_cell(kernel, n, rep):
        kname = kernel_name(kernel)
        params = replace(spec.base_params, n=n)
        seed = derive_seed(spec.master_seed, rep, f"poc:{kname}:N{n}")

        def cell():
            snaps = snapshots_of(params, kernel, seed)
            ref = references[kname]
            return [
                {
                    "kind": spec.kind,
                    "kernel": kname,
                    "N": n,
                    "rep": rep,
                    "k": k,
                    "w1": wasserstein1_1d(snaps[k], ref[k]),
                }
                for k in sorted(snaps)
            ]

        return cell

    rows = _run_cells(
        (
            make_cell(kernel, n, rep)
            for kernel in spec.kernels
            for n in spec.population_list
            for rep in range(spec.repetitions)
        ),
        threads,
    )
    rows.sort(key=lambda r: (r["kernel"], r["N"], r["rep"], r["k"]))

    summary = []
    for kernel in spec.kernels:
        kname = kernel_name(kernel)
        for n in spec.population_list:
            for k in sorted(steps):
                w1s = np.array(
                    [
                        r["w1"]
                        for r in rows
                        if r["kernel"] == kname and r["N"] == n and r["k"] == k
                    ]
                )
                q10, q90 = np.quantile(w1s, [0.1, 0.9])
                summary.append(
                    {
                        "kernel": kname,
                        "N": n,
                        "k": k,
                        "mean_w1": float(w1s.mean()),
                        "q10": float(q10),
                        "q90": float(q90),
                    }
                )

    result = ExperimentResult(
        kind=spec.kind,
        tables={"w1": rows, "w1_summary": summary},
        metadata=_metadata(spec),
    )
    result.check_finite()
    return result


def run_steady_state(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Final-generation particle distribution for each kernel.

    Emits a normalized histogram of final positions per kernel (d = 1),
    and stores final ensemble statistics and the sigma_k trace in the
    metadata.
    """
    obj = get_objective(spec.objectives[0], spec.dim)
    n = spec.population_list[0]
    params = replace(spec.base_params, n=n)
    lo, hi = spec.init_box

    def make_cell(kernel):
        kname = kernel_name(kernel)
        alpha = getattr(kernel, "alpha", "")
        seed = derive_seed(spec.master_seed, 0, f"steady:{kname}:a{alpha}")

        def cell():
            ens = _simulate_ga(obj, params, kernel, seed, spec.init_box)
            values = batch_evaluate(obj, ens.positions)
            stats = ensemble_stats(ens.positions, values, obj)
            hist = histogram(ens.positions.ravel(), spec.hist_bins, (lo, hi))
            rows = [
                {
                    "kernel": kname,
                    "alpha": alpha,
                    "bin_left": float(hist.edges[i]),
                    "bin_right": float(hist.edges[i + 1]),
                    "density": float(hist.density[i]),
                }
                for i in range(spec.hist_bins)
            ]
            extra = {
                "kernel": kname,
                "alpha": alpha,
                "final_mean": stats.mean.tolist(),
                "final_variance": stats.variance.tolist(),
                "best_value": stats.best_value,
                "best_error_l2": stats.best_error_l2,
                "mean_error_l2": stats.mean_error_l2,
                "overflow": hist.overflow,
            }
            return [{"__extra__": extra, "__rows__": rows}]

        return cell

    packed = _run_cells((make_cell(kernel) for kernel in spec.kernels), threads)
    rows = [row for p in packed for row in p["__rows__"]]
    extras = [p["__extra__"] for p in packed]
    rows.sort(key=lambda r: (r["kernel"], str(r["alpha"]), r["bin_left"]))
    extras.sort(key=lambda e: (e["kernel"], str(e["alpha"])))

    sigma_trace = [
        mutation_state(params, k).sigma_k for k in range(params.k_max + 1)
    ]
    metadata = _metadata(spec)
    metadata["final_stats"] = extras
    metadata["sigma_trace"] = sigma_trace

    result = ExperimentResult(
        kind=spec.kind, tables={"steady": rows}, metadata=metadata
    )
    result.check_finite()
    return result


def _diffusion_tag(params: DynamicsParams) -> str:
    return (
        "anisotropic" if isinstance(params.diffusion, ParentDifference) else "nondegenerate"
    )


def run_scaling_comparison(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Best-particle error of scaled GA (per epsilon) against CBO.

    For every (method, objective, N, repetition) cell, runs to k_max and
    records the final best-particle l2 error and accuracy gap; also emits
    box-plot summary rows per cell group and metric.
    """
    methods: list[tuple[str, float | None]] = []
    for name in spec.methods:
        if name == "ga":
            methods += [(f"ga-eps{eps:g}", eps) for eps in spec.epsilon_list]
        elif name == "cbo":
            methods.append(("cbo", None))
        else:
            raise ValueError(f"unknown method {name!r}")
    diffusion = _diffusion_tag(spec.base_params)

    def make_cell(method, eps, obj_name, n, rep):
        obj = get_objective(obj_name, spec.dim)
        seed = derive_seed(spec.master_seed, rep, f"scal:{method}:{obj_name}:N{n}")

        def cell():
            if eps is None:
                params = replace(spec.base_params, n=n, sigma0=spec.cbo_sigma)
                ens = _simulate_cbo(obj, params, seed, spec.init_box)
            else:
                params = replace(spec.base_params, n=n, epsilon=eps)
                kernel = spec.kernels[0]
                ens = _simulate_ga(obj, params, kernel, seed, spec.init_box)
            values = batch_evaluate(obj, ens.positions)
            stats = ensemble_stats(ens.positions, values, obj)
            return [
                {
                    "method": method,
                    "objective": obj_name,
                    "diffusion": diffusion,
                    "N": n,
                    "rep": rep,
                    "error_l2": stats.best_error_l2,
                    "accuracy_gap": stats.best_value - obj.min_value,
                }
            ]

        return cell

    rows = _run_cells(
        (
            make_cell(method, eps, obj_name, n, rep)
            for method, eps in methods
            for obj_name in spec.objectives
            for n in spec.population_list
            for rep in range(spec.repetitions)
        ),
        threads,
    )
    rows.sort(key=lambda r: (r["method"], r["objective"], r["N"], r["rep"]))

    box_rows = []
    for method, _ in methods:
        for obj_name in spec.objectives:
            for n in spec.population_list:
                cell_rows = [
                    r
                    for r in rows
                    if r["method"] == method
                    and r["objective"] == obj_name
                    and r["N"] == n
                ]
                for metric in ("error_l2", "accuracy_gap"):
                    bs = box_stats(np.array([r[metric] for r in cell_rows]))
                    box_rows.append(
                        {
                            "method": method,
                            "objective": obj_name,
                            "diffusion": diffusion,
                            "N": n,
                            "metric": metric,
                            "median": bs.median,
                            "q1": bs.q1,
                            "q3": bs.q3,
                            "wlow": bs.whisker_low,
                            "whigh": bs.whisker_high,
                            "n_outliers": int(bs.outliers.size),
                        }
                    )

    result = ExperimentResult(
        kind=spec.kind,
        tables={"scaling": rows, "scaling_box": box_rows},
        metadata=_metadata(spec),
    )
    result.check_finite()
    return result


def run_convergence_check(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Mean-error decay against the theoretical exponential envelopes.

    Records |m[f_k] - x*| per generation alongside err0 * exp(-k tau) and
    err0 * exp(-k tau / 2); the first generation where the accuracy target
    is met goes into the metadata.
    """
    del threads  # single run
    obj = get_objective(spec.objectives[0], spec.dim)
    kernel = spec.kernels[0]
    if not isinstance(kernel, Boltzmann):
        raise ValueError("convergence check requires a Boltzmann kernel")
    if not isinstance(spec.base_params.diffusion, IsotropicConstant):
        raise ValueError("convergence check requires isotropic constant diffusion")
    params = replace(spec.base_params, n=spec.population_list[0])
    seed = derive_seed(spec.master_seed, 0, "convergence")

    errors = []

    def record(ens):
        errors.append(float(np.linalg.norm(ens.positions.mean(axis=0) - obj.minimizer)))

    _simulate_ga(
        obj, params, kernel, seed, spec.init_box,
        init_mean=spec.init_mean, on_generation=record,
    )
    err0 = errors[0]
    tau = params.tau
    rows = [
        {
            "k": k,
            "mean_error": err,
            "envelope_tau": err0 * float(np.exp(-k * tau)),
            "envelope_half_tau": err0 * float(np.exp(-k * tau / 2.0)),
        }
        for k, err in enumerate(errors)
    ]
    hit = next((k for k, err in enumerate(errors) if err <= spec.accuracy), None)
    metadata = _metadata(spec)
    metadata["accuracy_target"] = spec.accuracy
    metadata["first_k_at_accuracy"] = hit

    result = ExperimentResult(
        kind=spec.kind, tables={"convergence": rows}, metadata=metadata
    )
    result.check_finite()
    return result


_RUNNERS = {
    "propagation_of_chaos": run_propagation_of_chaos,
    "steady_state": run_steady_state,
    "scaling_comparison": run_scaling_comparison,
    "convergence_check": run_convergence_check,
}


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Dispatch to the runner for the spec's experiment kind."""
    return _RUNNERS[spec.kind](spec, threads=threads)


def _metadata(spec: ExperimentSpec) -> dict:
    from .cli import spec_to_config  # deferred: cli imports this module

    return {"config": spec_to_config(spec), "master_seed": spec.master_seed}


# ---------------------------------------------------------------------------
# Named presets reproducing the published figure configurations.

PRESET_NAMES = ("fig1a", "fig1b", "fig2", "fig3a", "fig3b", "fig4a", "fig4b", "thm")


def preset(name: str, paper_scale: bool = False) -> ExperimentSpec:
    """Build a named preset; ``paper_scale`` restores the full fig2 size."""
    if name in ("fig1a", "fig1b"):
        return ExperimentSpec(
            kind="propagation_of_chaos",
            objectives=("ackley",),
            dim=1,
            base_params=DynamicsParams(
                tau=0.1,
                gamma=(0.2,),
                sigma0=0.1,
                sigma_schedule=Geometric(0.95) if name == "fig1b" else Constant(),
                k_max=200,
            ),
            kernels=(Boltzmann(alpha=1e4), Rank()),
            population_list=(100, 1000, 10000),
            repetitions=100,
            reference_n=100_000,
            snapshot_stride=10,
        )
    if name == "fig2":
        return ExperimentSpec(
            kind="steady_state",
            objectives=("ackley",),
            dim=1,
            base_params=DynamicsParams(
                tau=0.1, gamma=(0.2,), sigma0=0.1, k_max=1000
            ),
            kernels=(Boltzmann(alpha=10.0), Boltzmann(alpha=1e4), Rank()),
            population_list=(1_000_000 if paper_scale else 100_000,),
        )
    if name in ("fig3a", "fig3b", "fig4a", "fig4b"):
        anisotropic = name.endswith("b")
        dim = 10
        return ExperimentSpec(
            kind="scaling_comparison",
            objectives=("styblinski-tang", "ackley", "rastrigin"),
            dim=dim,
            base_params=DynamicsParams(
                tau=0.1,
                gamma=(1.0,) * dim,
                lam=1.0,
                alpha=1e4,
                sigma0=1.0,
                sigma_schedule=Constant() if anisotropic else Geometric(0.95),
                diffusion=ParentDifference()
                if anisotropic
                else IsotropicConstant((1.0,) * dim),
                k_max=300,
            ),
            kernels=(CBOAsymmetric(alpha=1e4),),
            population_list=(100, 1000, 10000),
            epsilon_list=(1.0, 0.3, 0.1),
            methods=("ga", "cbo"),
            repetitions=100,
            cbo_sigma=3.0,
        )
    if name == "thm":
        return ExperimentSpec(
            kind="convergence_check",
            objectives=("quadratic",),
            dim=1,
            base_params=DynamicsParams(
                tau=0.1,
                gamma=(0.5,),
                alpha=1e4,
                sigma0=0.1,
                sigma_schedule=Geometric(0.95),
                diffusion=IsotropicConstant((1.0,)),
                k_max=110,
            ),
            kernels=(Boltzmann(alpha=1e4),),
            population_list=(100_000,),
            init_mean=1.0,
            accuracy=1e-2,
        )
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")

