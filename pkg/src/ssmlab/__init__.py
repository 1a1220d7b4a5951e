"""Numerical laboratory for temporal continuity of state-space sequence models.

Subpackages cover: diagonal state-space systems and their ZOH/bilinear
discretizations against a high-accuracy continuous reference
(``ssm_core``), bounded random test signals (``signals``), benchmark
dynamical-system datasets (``dynsys``), a background-corrected
lag-similarity metric over token embeddings (``continuity_metric``), a
grid-refinement error/bound harness (``refinement_harness``), staged
training on temporally subsampled sequences (``stagewise``), and a seeded
CSV-producing command line (``cli``).
"""

from .continuity_metric import (
    DegenerateSimilarityError,
    EmbeddingSpec,
    MetricConfig,
    SequenceSample,
    embed,
    embed_trajectory,
    estimate_background,
    kernel_cosine,
    make_embedding_spec,
    mu_aggregate,
    mu_lag,
)
from .dynsys import (
    DivergenceError,
    DynSysSpec,
    generate,
    make_params,
    ou_ensemble,
    sample_dataset,
)
from .refinement_harness import (
    BoundInputs,
    ConvergenceRecord,
    StudyResult,
    bound_general,
    bound_s4,
    bound_s6,
    fit_order,
    rel_max_error,
    run_convergence_study,
    write_convergence_csv,
)
from .signals import (
    ChebyshevSignal,
    HeldSignal,
    hold,
    lipschitz_bound,
    max_modulus,
    sample_signal,
)
from .ssm_core import (
    ContinuousSSM,
    DiscreteSSM,
    Trajectory,
    discretize,
    eval_maps,
    make_s4,
    make_s6,
    run_discrete,
    sample_at,
    simulate_continuous,
)
from .stagewise import (
    RidgeTrainer,
    StageSchedule,
    delta_schedule,
    run_stagewise,
    subsample_index,
    subsample_pool,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # ssm_core
    "ContinuousSSM",
    "DiscreteSSM",
    "Trajectory",
    "discretize",
    "eval_maps",
    "make_s4",
    "make_s6",
    "run_discrete",
    "sample_at",
    "simulate_continuous",
    # signals
    "ChebyshevSignal",
    "HeldSignal",
    "hold",
    "lipschitz_bound",
    "max_modulus",
    "sample_signal",
    # dynsys
    "DivergenceError",
    "DynSysSpec",
    "generate",
    "make_params",
    "ou_ensemble",
    "sample_dataset",
    # continuity_metric
    "DegenerateSimilarityError",
    "EmbeddingSpec",
    "MetricConfig",
    "SequenceSample",
    "embed",
    "embed_trajectory",
    "estimate_background",
    "kernel_cosine",
    "make_embedding_spec",
    "mu_aggregate",
    "mu_lag",
    # refinement_harness
    "BoundInputs",
    "ConvergenceRecord",
    "StudyResult",
    "bound_general",
    "bound_s4",
    "bound_s6",
    "fit_order",
    "rel_max_error",
    "run_convergence_study",
    "write_convergence_csv",
    # stagewise
    "RidgeTrainer",
    "StageSchedule",
    "delta_schedule",
    "run_stagewise",
    "subsample_index",
    "subsample_pool",
]
