"""Query strategies: norm-based scoring and batch subset selection.

Both objectives are minimized, and scores operate on target-normalized
predictions so the two axes are comparable. L2-Select keeps the candidates
with the smallest Euclidean norm of the predicted objective vector.
L2-Reject drops the candidates closest to the componentwise maximum of the
draw's predictions and keeps the remainder, which favors the edges of the
predicted cloud.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AcquisitionTooLarge, ConfigError, DimensionMismatch, EmptyDraw


class StrategyKind(Enum):
    L2_SELECT = "l2-select"
    L2_REJECT = "l2-reject"
    RANDOM = "random"

    @classmethod
    def from_name(cls, name: str) -> "StrategyKind":
        for kind in cls:
            if kind.value == name:
                return kind
        names = ", ".join(k.value for k in cls)
        raise ConfigError(f"unknown strategy {name!r}; expected one of: {names}")


@dataclass
class SelectionResult:
    """Outcome of one acquisition: draw positions picked, plus the scores used.

    `scores` is one value per draw candidate (empty for the random strategy);
    `y_max` is the componentwise maximum the reject strategy measured from.
    """

    selected_indices: list[int]
    scores: np.ndarray
    y_max: np.ndarray | None = None


def score_l2s(y) -> float:
    """Euclidean norm of one (scaled) objective vector."""
    y = np.asarray(y, dtype=float)
    return float(np.sqrt(np.sum(y * y)))


def component_max(ys) -> np.ndarray:
    """Componentwise maximum over a set of objective vectors."""
    ys = np.asarray(ys, dtype=float)
    if ys.size == 0:
        raise EmptyDraw("component_max needs at least one vector")
    return ys.max(axis=0)


def score_l2r(y, y_max) -> float:
    """Distance of one objective vector to the draw's componentwise maximum."""
    y = np.asarray(y, dtype=float)
    y_max = np.asarray(y_max, dtype=float)
    if y.shape != y_max.shape:
        raise DimensionMismatch(f"shape {y.shape} does not match y_max shape {y_max.shape}")
    d = y - y_max
    return float(np.sqrt(np.sum(d * d)))


def _as_matrix(predictions) -> np.ndarray:
    ys = np.asarray(predictions, dtype=float)
    if ys.ndim != 2:
        ys = np.atleast_2d(ys)
    return ys


def _order_and_scores(kind: StrategyKind, ys: np.ndarray):
    """Best-first ranking of draw positions under the strategy's score.

    L2-Select (also used as the random baseline's reference) ranks ascending
    by norm, ties broken by ascending position. L2-Reject rejects ascending by
    distance-to-maximum, so the best-first ranking is that order reversed;
    taking the first aq positions then yields exactly the non-rejected set for
    every aq, ties included.
    """
    if kind is StrategyKind.L2_REJECT:
        scores = np.linalg.norm(ys - component_max(ys), axis=1)
        order = np.argsort(scores, kind="stable")[::-1]
    else:
        scores = np.linalg.norm(ys, axis=1)
        order = np.argsort(scores, kind="stable")
    return order, scores


def selection_order(kind: StrategyKind, ys) -> np.ndarray:
    """Draw positions ranked best-first under the strategy's scoring rule."""
    order, _ = _order_and_scores(kind, _as_matrix(ys))
    return order


def select(kind: StrategyKind, predictions, aq_size: int, rng=None) -> SelectionResult:
    """Choose aq_size draw positions according to the query strategy.

    The random strategy samples uniformly without replacement and carries no
    scores; the norm strategies return their per-candidate scores and are
    fully deterministic (ties broken by draw position).
    """
    ys = _as_matrix(predictions)
    n = ys.shape[0]
    if aq_size > n:
        raise AcquisitionTooLarge(f"aq_size {aq_size} exceeds draw of {n} candidates")
    if kind is StrategyKind.RANDOM:
        if rng is None:
            raise ValueError("random selection needs an rng")
        picked = rng.choice(n, size=aq_size, replace=False)
        return SelectionResult([int(i) for i in picked], np.empty(0))
    order, scores = _order_and_scores(kind, ys)
    selected = [int(i) for i in order[:aq_size]]
    y_max = component_max(ys) if kind is StrategyKind.L2_REJECT else None
    return SelectionResult(selected, scores, y_max)
