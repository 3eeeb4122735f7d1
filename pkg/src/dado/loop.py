"""The iterative self-optimization loop and multi-run sweeps.

One experiment repeats: retrain the surrogate from scratch on everything
annotated so far, bootstrap a draw from the remaining pool, predict, let the
query strategy pick the acquisition batch, annotate it, score the iteration,
and fold the batch into the training set. The truths of the full draw are
looked up for metrics only and never reach the surrogate.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .datapool import (
    CandidatePool,
    bootstrap_draw,
    consume,
    fit_normalizers,
    initial_sample,
    params_matrix,
)
from .errors import ConfigError, PoolExhausted
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
from .oracle import ExpertOracle, annotate
from .strategies import StrategyKind, select
from .surrogate import MlpConfig, TrainConfig, init_model, predict_batch, train


def derive_seed(master_seed: int, label: str, iteration: int = 0) -> int:
    """Stable 64-bit sub-seed for one named random stream of one iteration."""
    digest = hashlib.sha256(f"{master_seed}:{label}:{iteration}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(master_seed: int, label: str, iteration: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, label, iteration))


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment's knobs: sampling sizes, budget, strategy, seed, surrogate.

    `target_space` picks the space the strategies and rank metrics score in:
    "normalized" uses the z-scored targets; "raw" uses original units, which
    keeps the norm ball anchored at the true zero point and suits objectives
    that are positive quantities minimized toward zero.
    """

    name: str
    initial_size: int
    draw_size: int
    aq_size: int
    budget: int
    strategy: StrategyKind
    seed: int
    mlp: MlpConfig = MlpConfig()
    train: TrainConfig = TrainConfig()
    target_space: str = "normalized"

    def __post_init__(self):
        if min(self.initial_size, self.draw_size, self.aq_size) < 1:
            raise ConfigError("initial_size, draw_size, and aq_size must be positive")
        if self.aq_size > self.draw_size:
            raise ConfigError("aq_size cannot exceed draw_size")
        if self.budget <= self.initial_size:
            raise ConfigError("budget must exceed initial_size")
        if (self.budget - self.initial_size) % self.aq_size != 0:
            raise ConfigError("budget - initial_size must be a multiple of aq_size")
        if self.target_space not in ("normalized", "raw"):
            raise ConfigError("target_space must be 'normalized' or 'raw'")

    @property
    def n_iter(self) -> int:
        return (self.budget - self.initial_size) // self.aq_size


@dataclass
class ExperimentResult:
    """One run's learning curve plus its AUC/final summary and audit trail."""

    scenario: ScenarioConfig
    curve: LearningCurve
    summary: dict[str, dict[str, float]]
    initial_ids: list[int]
    acquired_ids: list[list[int]]


def _summarize(curve: LearningCurve) -> dict[str, dict[str, float]]:
    out = {}
    for metric in METRIC_FIELDS:
        series = curve.series(metric)
        # A one-iteration curve has no area; its value stands in, matching the
        # normalized convention that a constant curve scores its own value.
        out[metric] = {
            "auc": auc(series) if len(series) > 1 else series[-1],
            "final": series[-1],
        }
    return out


def run_experiment(
    pool: CandidatePool,
    oracle: ExpertOracle,
    cfg: ScenarioConfig,
    predict_override=None,
) -> ExperimentResult:
    """Run the full loop on one pool; mutates the pool's consumption state.

    All stochastic streams (initial sample, weight init, training shuffles and
    dropout, draws, random selection) derive from the scenario seed via labeled
    sub-seeds, so a run is reproducible bit for bit.

    `predict_override(draw, fnorm, tnorm) -> (n, num_obj) normalized predictions`
    replaces training and prediction entirely; it exists so tests can wire a
    perfect or broken predictor into an otherwise unchanged loop.
    """
    n_iter = cfg.n_iter
    needed = cfg.initial_size + (n_iter - 1) * cfg.aq_size + cfg.draw_size
    if needed > pool.available:
        raise PoolExhausted(
            f"scenario {cfg.name!r} needs {needed} available candidates at its last "
            f"draw, pool has {pool.available}"
        )
    mlp_cfg = cfg.mlp.resolved(pool.d, pool.num_obj)

    train_cands = initial_sample(pool, cfg.initial_size, derive_rng(cfg.seed, "initial-sample"))
    train_targets = annotate(oracle, train_cands)
    initial_ids = [c.id for c in train_cands]
    acquired_ids: list[list[int]] = []
    records: list[IterationRecord] = []
    mr_first = 0.0

    for i in range(n_iter):
        fnorm, tnorm = fit_normalizers(pool, train_targets)
        if predict_override is None:
            model = init_model(mlp_cfg, derive_seed(cfg.seed, "model-init", i))
            model, _ = train(
                model,
                fnorm.transform(params_matrix(train_cands)),
                tnorm.transform(train_targets),
                cfg.train,
                derive_rng(cfg.seed, "train", i),
            )

        draw = bootstrap_draw(pool, cfg.draw_size, derive_rng(cfg.seed, "draw", i))
        if predict_override is None:
            preds = predict_batch(model, draw, fnorm, tnorm, space="normalized")
        else:
            preds = np.asarray(predict_override(draw, fnorm, tnorm), dtype=float)

        truths_raw = annotate(oracle, draw)  # metric bookkeeping only
        truths = tnorm.transform(truths_raw)
        # Strategies and rank metrics score predictions and truths in the same
        # space; the MSE metrics always stay in the normalized space.
        if cfg.target_space == "raw":
            score_preds, score_truths = tnorm.inverse(preds), truths_raw
        else:
            score_preds, score_truths = preds, truths

        sel = select(cfg.strategy, score_preds, cfg.aq_size, derive_rng(cfg.seed, "select", i))
        sel_idx = sel.selected_indices

        true_order = reference_order(score_truths, cfg.strategy)
        pred_order = reference_order(score_preds, cfg.strategy)

        raw_mr = mean_rank(sel_idx, true_order, cfg.aq_size)
        if i == 0:
            mr_first = raw_mr
        records.append(
            IterationRecord(
                iteration=i,
                train_set_size=len(train_cands),
                intersections=intersections(
                    sel_idx, true_order[: cfg.aq_size], cfg.aq_size
                ),
                mr_raw=raw_mr,
                mr_norm=normalize_mr(raw_mr, optimal_mean_rank(cfg.aq_size), mr_first),
                srocc=srocc(pred_order[: cfg.aq_size], true_order, cfg.aq_size),
                best_mse=mse(preds[sel_idx], truths[sel_idx]),
                rnd_mse=mse(preds, truths),
            )
        )

        acquired = [draw[k] for k in sel_idx]
        consume(pool, [c.id for c in acquired])
        train_cands.extend(acquired)
        train_targets = np.vstack([train_targets, truths_raw[sel_idx]])
        acquired_ids.append([c.id for c in acquired])

    curve = LearningCurve(records)
    return ExperimentResult(cfg, curve, _summarize(curve), initial_ids, acquired_ids)


@dataclass
class RunRecord:
    """One sweep cell: either a finished result or the error that stopped it."""

    scenario: str
    aq_size: int
    strategy: str
    seed: int
    result: ExperimentResult | None = None
    error: str | None = None


@dataclass
class AggregateRow:
    scenario: str
    aq_size: int
    strategy: str
    metric: str
    auc_mean: float
    auc_stderr: float
    final_mean: float
    final_stderr: float


@dataclass
class SweepSummary:
    runs: list[RunRecord]
    table: list[AggregateRow] = field(default_factory=list)


def _execute_run(payload):
    pool, cfg = payload
    pool = pool.copy()
    oracle = ExpertOracle.pool_backed(pool.num_obj)
    try:
        return run_experiment(pool, oracle, cfg), None
    except Exception as exc:  # noqa: BLE001 - a sweep isolates per-run failures
        return None, f"{type(exc).__name__}: {exc}"


def stderr_of(values) -> float:
    """Standard error of the mean across seeds; 0 by convention for one value."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(v.std(ddof=1) / np.sqrt(v.size))


def _sweep_workers(max_workers) -> int:
    if max_workers is not None:
        return max(1, int(max_workers))
    raw = os.environ.get("DADO_THREADS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"DADO_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def run_sweep(
    pool: CandidatePool,
    scenarios,
    strategies,
    seeds,
    max_workers=None,
) -> SweepSummary:
    """Run the scenario x strategy x seed grid, each on a fresh pool copy.

    Failures are recorded per run and excluded from aggregation instead of
    aborting the sweep. Aggregates are the mean and standard error across
    seeds, per scenario, strategy, and metric, for both AUC and final value.
    """
    scenarios = list(scenarios)
    strategies = list(strategies)
    seeds = list(seeds)
    if not scenarios or not strategies or not seeds:
        raise ConfigError("sweep needs at least one scenario, strategy, and seed")
    names = [sc.name for sc in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique within a sweep")

    jobs = [
        replace(sc, strategy=st, seed=sd)
        for sc in scenarios
        for st in strategies
        for sd in seeds
    ]
    payloads = [(pool, cfg) for cfg in jobs]
    workers = _sweep_workers(max_workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as executor:
            outcomes = list(executor.map(_execute_run, payloads))
    else:
        outcomes = [_execute_run(p) for p in payloads]

    runs = [
        RunRecord(cfg.name, cfg.aq_size, cfg.strategy.value, cfg.seed, result, error)
        for cfg, (result, error) in zip(jobs, outcomes)
    ]

    table: list[AggregateRow] = []
    for sc in scenarios:
        for st in strategies:
            group = [
                r
                for r in runs
                if r.scenario == sc.name and r.strategy == st.value and r.result is not None
            ]
            if not group:
                continue
            for metric in METRIC_FIELDS:
                aucs = [r.result.summary[metric]["auc"] for r in group]
                finals = [r.result.summary[metric]["final"] for r in group]
                table.append(
                    AggregateRow(
                        scenario=sc.name,
                        aq_size=sc.aq_size,
                        strategy=st.value,
                        metric=metric,
                        auc_mean=float(np.mean(aucs)),
                        auc_stderr=stderr_of(aucs),
                        final_mean=float(np.mean(finals)),
                        final_stderr=stderr_of(finals),
                    )
                )
    return SweepSummary(runs, table)
