"""Ridge regression that is robust to missing features.

A linear imputation map is trained jointly with the regressor through
a convex relaxation of the imputed-data kernel; baselines, corruption
simulators, capacity bounds, and a reproducible benchmark harness
round out the package.
"""

from .dataset import (
    CorruptedSample,
    CsvFormatError,
    Dataset,
    DatasetStats,
    load_csv,
    normalize,
    split,
    stats,
)
from .corruption import (
    CorruptionDebug,
    CorruptionKind,
    CorruptionSpec,
    calibrate_beta,
    corrupt_column_block,
    corrupt_dependent,
    corrupt_independent,
)
from .imputation import (
    BaselineImputer,
    BaselineKind,
    ImputationModel,
    apply_baseline,
    apply_baseline_matrix,
    fit_independent,
    fit_mean,
    fit_zero,
    impute_dataset,
    impute_linear,
)
from .kernel import (
    KernelMatrix,
    LiftedTensor,
    Provenance,
    build_km,
    build_kmn,
    dump_kernel,
    kernel_gradient_contraction,
    lift,
    load_kernel,
    min_eig_low_rank,
    min_eigpair,
)
from .solver import (
    Diagnostics,
    Hyperparams,
    IrrSolution,
    PrimalPoint,
    SolverConfig,
    load_solution,
    predict,
    predict_batch,
    primal_objective,
    ridge_alpha,
    rmse,
    save_solution,
    solve_irr,
)
from .theory import (
    BoundInputs,
    empirical_rademacher,
    generalization_gap,
    rademacher_bound,
)
from .bench import (
    ExperimentReport,
    ExperimentSpec,
    MethodResult,
    run_experiment,
    run_onevsall,
    sweep_fraction,
)

__version__ = "0.1.0"
