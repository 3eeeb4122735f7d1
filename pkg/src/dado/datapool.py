"""Annotated candidate pool: loading, seeded sampling, consumption tracking, scaling.

The pool plays two roles at once: it is the reservoir of not-yet-annotated
design candidates that draws are bootstrapped from, and (because every row
carries its objectives) it backs the simulated annotator. Candidates that
enter the training set are marked *consumed* and never drawn again.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AlreadyConsumed,
    DegenerateInput,
    MissingAnnotation,
    MissingFile,
    NonFiniteValue,
    PoolExhausted,
    SchemaMismatch,
    UnknownId,
)

TARGET_STD_FLOOR = 1e-12


@dataclass
class DesignCandidate:
    """One parameterized design: stable id, parameter vector, optional stored objectives.

    ``true_objectives`` is only ever read by the oracle; the surrogate and
    selection path never see it.
    """

    id: int
    params: np.ndarray
    true_objectives: np.ndarray | None = None


def params_matrix(candidates) -> np.ndarray:
    """Stack candidate parameter vectors into an (n, d) array."""
    if not candidates:
        return np.empty((0, 0))
    return np.array([c.params for c in candidates], dtype=float)


@dataclass
class FeatureNormalizer:
    """Per-dimension min-max map to [0, 1], fixed to the pool's bounds.

    Dimensions with zero width map to 0.5.
    """

    lo: np.ndarray
    hi: np.ndarray

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        scaled = (x - self.lo) / safe
        return np.where(span > 0, scaled, 0.5)


@dataclass
class TargetNormalizer:
    """Per-objective z-score with a floored population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.mean) / self.std

    def inverse(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.std + self.mean


@dataclass
class CandidatePool:
    """Ordered candidate store with consumption bookkeeping.

    ``feature_bounds`` has shape (d, 2): column 0 holds per-dimension minima,
    column 1 maxima, both computed over the whole pool.
    """

    candidates: list[DesignCandidate]
    num_obj: int
    feature_bounds: np.ndarray
    consumed: set[int] = field(default_factory=set)

    def __post_init__(self):
        self._by_id = {c.id: c for c in self.candidates}
        if len(self._by_id) != len(self.candidates):
            raise SchemaMismatch("duplicate candidate ids in pool")

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def d(self) -> int:
        return int(self.feature_bounds.shape[0])

    @property
    def available(self) -> int:
        return len(self.candidates) - len(self.consumed)

    def available_ids(self) -> list[int]:
        return [c.id for c in self.candidates if c.id not in self.consumed]

    def by_id(self, cid: int) -> DesignCandidate:
        try:
            return self._by_id[cid]
        except KeyError:
            raise UnknownId(f"candidate id {cid} not in pool") from None

    def copy(self) -> "CandidatePool":
        """Fresh pool sharing candidate objects but with its own consumption state."""
        return CandidatePool(
            list(self.candidates), self.num_obj, self.feature_bounds, set(self.consumed)
        )


def pool_from_arrays(params: np.ndarray, objectives: np.ndarray) -> CandidatePool:
    """Build a pool from (n, d) parameters and (n, num_obj) objectives, ids 0..n-1."""
    params = np.asarray(params, dtype=float)
    objectives = np.asarray(objectives, dtype=float)
    if params.ndim != 2 or objectives.ndim != 2 or params.shape[0] != objectives.shape[0]:
        raise SchemaMismatch("params and objectives must be 2-D with matching row counts")
    if params.shape[0] == 0:
        raise SchemaMismatch("pool needs at least one candidate")
    if not np.isfinite(params).all() or not np.isfinite(objectives).all():
        raise NonFiniteValue("non-finite value in pool arrays")
    candidates = [
        DesignCandidate(i, params[i], objectives[i]) for i in range(params.shape[0])
    ]
    bounds = np.column_stack([params.min(axis=0), params.max(axis=0)])
    return CandidatePool(candidates, objectives.shape[1], bounds)


def load_pool(path, d: int, num_obj: int) -> CandidatePool:
    """Read a pool CSV with a header row, d parameter columns, then num_obj objectives.

    Row order defines candidate ids 0..n-1. Raises MissingFile, SchemaMismatch
    on a wrong column count, or NonFiniteValue naming the offending data row.
    """
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"pool file not found: {p}")
    expected = d + num_obj
    rows: list[list[float]] = []
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaMismatch(f"{p}: empty file, expected a header row")
        if len(header) != expected:
            raise SchemaMismatch(
                f"{p}: expected {expected} columns ({d} params + {num_obj} objectives), "
                f"found {len(header)}"
            )
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != expected:
                raise SchemaMismatch(f"{p}: row {i} has {len(row)} columns, expected {expected}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise SchemaMismatch(f"{p}: row {i} contains a non-numeric cell") from None
    if not rows:
        raise SchemaMismatch(f"{p}: no data rows")
    data = np.asarray(rows, dtype=float)
    finite = np.isfinite(data).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValue(f"{p}: non-finite value in row {bad}")
    return pool_from_arrays(data[:, :d], data[:, d:])


def save_pool(pool: CandidatePool, path) -> None:
    """Write the standard pool CSV: header p0..p{d-1},j0..j{num_obj-1}, one row per id.

    Floats are written with shortest round-trip formatting, so identical pools
    serialize to identical bytes.
    """
    header = [f"p{i}" for i in range(pool.d)] + [f"j{i}" for i in range(pool.num_obj)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for c in pool.candidates:
            if c.true_objectives is None:
                raise MissingAnnotation(f"candidate {c.id} has no stored objectives")
            writer.writerow(
                [repr(float(v)) for v in c.params]
                + [repr(float(v)) for v in c.true_objectives]
            )


def infer_pool_schema(path) -> tuple[int, int]:
    """Derive (d, num_obj) from a pool CSV header following the p*/j* convention."""
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"pool file not found: {p}")
    with open(p, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise SchemaMismatch(f"{p}: empty file, expected a header row")
    d = sum(1 for name in header if name.startswith("p"))
    num_obj = sum(1 for name in header if name.startswith("j"))
    names_ok = all(name.startswith("p") for name in header[:d]) and all(
        name.startswith("j") for name in header[d:]
    )
    if d < 1 or num_obj < 1 or d + num_obj != len(header) or not names_ok:
        raise SchemaMismatch(f"{p}: header does not follow the p*,...,j* convention")
    return d, num_obj


def _sample_available(pool: CandidatePool, size: int, rng, what: str) -> list[DesignCandidate]:
    avail = pool.available_ids()
    if size > len(avail):
        raise PoolExhausted(f"{what} of {size} exceeds {len(avail)} available candidates")
    picked = rng.choice(np.asarray(avail, dtype=np.int64), size=size, replace=False)
    return [pool.by_id(int(i)) for i in picked]


def initial_sample(pool: CandidatePool, initial_size: int, rng) -> list[DesignCandidate]:
    """Draw the seed training set uniformly without replacement; marks it consumed."""
    picked = _sample_available(pool, initial_size, rng, "initial sample")
    consume(pool, [c.id for c in picked])
    return picked


def bootstrap_draw(pool: CandidatePool, draw_size: int, rng) -> list[DesignCandidate]:
    """Draw candidates uniformly without replacement from the non-consumed remainder.

    Does not consume: only acquisition removes candidates from the pool, so
    candidates drawn but not selected can reappear in later draws.
    """
    return _sample_available(pool, draw_size, rng, "bootstrap draw")


def consume(pool: CandidatePool, ids) -> None:
    """Mark ids consumed. Validates everything before mutating anything."""
    requested = [int(i) for i in ids]
    seen: set[int] = set()
    for i in requested:
        if i not in pool._by_id:
            raise UnknownId(f"candidate id {i} not in pool")
        if i in pool.consumed or i in seen:
            raise AlreadyConsumed(f"candidate id {i} already consumed")
        seen.add(i)
    pool.consumed.update(seen)


def fit_normalizers(pool: CandidatePool, train_targets) -> tuple[FeatureNormalizer, TargetNormalizer]:
    """Fit both normalizers for one iteration.

    Features use the pool-wide bounds (so every pooled candidate lands in
    [0, 1]); targets use mean/population-std of the *current* training targets
    with the std floored, so a constant objective column z-scores to 0.
    """
    t = np.asarray(train_targets, dtype=float)
    if t.ndim != 2 or t.shape[0] == 0:
        raise DegenerateInput("normalizers need a non-empty (n, num_obj) target array")
    fnorm = FeatureNormalizer(pool.feature_bounds[:, 0].copy(), pool.feature_bounds[:, 1].copy())
    tnorm = TargetNormalizer(t.mean(axis=0), np.maximum(t.std(axis=0), TARGET_STD_FLOOR))
    return fnorm, tnorm
