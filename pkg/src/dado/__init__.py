"""Pool-based deep active design optimization laboratory.

A small MLP surrogate is retrained each iteration on candidates picked by
low-cost multi-objective query strategies from a simulated, pre-annotated
candidate pool; runs are scored with ranking-centric learning-curve metrics.
"""

from .datapool import (
    CandidatePool,
    DesignCandidate,
    FeatureNormalizer,
    TargetNormalizer,
    bootstrap_draw,
    consume,
    fit_normalizers,
    infer_pool_schema,
    initial_sample,
    load_pool,
    params_matrix,
    pool_from_arrays,
    save_pool,
)
from .loop import (
    ExperimentResult,
    ScenarioConfig,
    SweepSummary,
    derive_rng,
    derive_seed,
    run_experiment,
    run_sweep,
)
from .metrics import (
    METRIC_FIELDS,
    IterationRecord,
    LearningCurve,
    auc,
    intersections,
    mean_rank,
    mse,
    normalize_mr,
    optimal_mean_rank,
    reference_order,
    srocc,
)
from .oracle import ExpertOracle, SyntheticPoolSpec, annotate, gen_synthetic_pool
from .strategies import (
    SelectionResult,
    StrategyKind,
    component_max,
    score_l2r,
    score_l2s,
    select,
    selection_order,
)
from .surrogate import (
    EarlyStopping,
    MlpConfig,
    SurrogateModel,
    TrainConfig,
    TrainLog,
    forward,
    grad_check,
    init_model,
    predict_batch,
    train,
)

__version__ = "0.1.0"
