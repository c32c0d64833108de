"""Kinetic genetic-algorithm particle simulator.

Selection kernels as sampling distributions, GA/CBO/KBO transition
operators with the quasi-invariant epsilon-scaling, Wasserstein and
ensemble diagnostics, and reproducible experiment harnesses.
"""

__version__ = "0.1.0"

from .dynamics import (
    Constant,
    Diffusion,
    DynamicsParams,
    Ensemble,
    Geometric,
    Isotropic,
    IsotropicConstant,
    MutationState,
    ParentDifference,
    SigmaSchedule,
    cbo_step,
    crossover_mutate,
    ga_step,
    init_uniform,
    kbo_step,
    schedule_sigma,
)
from .experiments import (
    PRESET_NAMES,
    ExperimentResult,
    ExperimentSpec,
    derive_seed,
    preset,
    run_convergence_check,
    run_experiment,
    run_propagation_of_chaos,
    run_scaling_comparison,
    run_steady_state,
)
from .measures import (
    BoxStats,
    EnsembleStats,
    HistogramTable,
    box_stats,
    ensemble_stats,
    histogram,
    wasserstein1_1d,
)
from .objectives import (
    GrowthReport,
    ObjectiveSpec,
    batch_evaluate,
    evaluate,
    get_objective,
    verify_growth_assumptions,
)
from .selection import (
    Boltzmann,
    CBOAsymmetric,
    ParentWeights,
    Rank,
    RouletteWheel,
    SelectionKernel,
    boltzmann_weights,
    kernel_from_config,
    sample_parent_pairs,
    selection_weights,
    weighted_mean,
)
