"""Pool loading, sampling, consumption, and normalizer behavior."""

import numpy as np
import pytest

from dado.datapool import (
    CandidatePool,
    DesignCandidate,
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
from dado.errors import (
    AlreadyConsumed,
    DegenerateInput,
    MissingFile,
    NonFiniteValue,
    PoolExhausted,
    SchemaMismatch,
    UnknownId,
)
from dado.oracle import SyntheticPoolSpec, gen_synthetic_pool


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def small_pool(n=10, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return pool_from_arrays(rng.random((n, d)), rng.random((n, 2)))


class TestLoadPool:
    def test_minimal_well_formed_file(self, tmp_path):
        path = write_csv(
            tmp_path / "pool.csv",
            ["p0,p1,j0,j1", "0.1,0.2,1.0,2.0", "0.3,0.4,3.0,4.0", "0.5,0.6,5.0,6.0"],
        )
        pool = load_pool(path, d=2, num_obj=2)
        assert len(pool) == 3
        assert pool.available == 3
        assert [c.id for c in pool.candidates] == [0, 1, 2]
        np.testing.assert_array_equal(pool.candidates[1].params, [0.3, 0.4])
        np.testing.assert_array_equal(pool.candidates[1].true_objectives, [3.0, 4.0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_pool(tmp_path / "nope.csv", d=2, num_obj=2)

    def test_wrong_column_count(self, tmp_path):
        path = write_csv(tmp_path / "pool.csv", ["p0,p1,j0", "0.1,0.2,1.0"])
        with pytest.raises(SchemaMismatch):
            load_pool(path, d=2, num_obj=2)

    def test_nan_cell_names_the_row(self, tmp_path):
        path = write_csv(
            tmp_path / "pool.csv",
            ["p0,p1,j0,j1", "0.1,0.2,1.0,2.0", "0.3,NaN,3.0,4.0"],
        )
        with pytest.raises(NonFiniteValue, match="row 1"):
            load_pool(path, d=2, num_obj=2)

    def test_non_numeric_cell(self, tmp_path):
        path = write_csv(tmp_path / "pool.csv", ["p0,j0", "0.1,oops"])
        with pytest.raises(SchemaMismatch):
            load_pool(path, d=1, num_obj=1)

    def test_no_data_rows(self, tmp_path):
        path = write_csv(tmp_path / "pool.csv", ["p0,j0"])
        with pytest.raises(SchemaMismatch):
            load_pool(path, d=1, num_obj=1)

    def test_ubend_shaped_file(self, tmp_path):
        # 28 parameter columns followed by 2 objective columns.
        pool = gen_synthetic_pool(SyntheticPoolSpec.analytic(20, 28, seed=5))
        path = tmp_path / "ubend_like.csv"
        save_pool(pool, path)
        loaded = load_pool(path, d=28, num_obj=2)
        assert loaded.d == 28
        assert loaded.num_obj == 2
        assert len(loaded) == 20

    def test_roundtrip_is_exact(self, tmp_path):
        pool = small_pool(n=7)
        path = tmp_path / "pool.csv"
        save_pool(pool, path)
        loaded = load_pool(path, d=pool.d, num_obj=pool.num_obj)
        for orig, back in zip(pool.candidates, loaded.candidates):
            np.testing.assert_array_equal(orig.params, back.params)
            np.testing.assert_array_equal(orig.true_objectives, back.true_objectives)

    def test_infer_schema(self, tmp_path):
        path = write_csv(tmp_path / "pool.csv", ["p0,p1,p2,j0,j1", "1,2,3,4,5"])
        assert infer_pool_schema(path) == (3, 2)

    def test_infer_schema_rejects_odd_headers(self, tmp_path):
        path = write_csv(tmp_path / "pool.csv", ["a,b,c", "1,2,3"])
        with pytest.raises(SchemaMismatch):
            infer_pool_schema(path)

    def test_duplicate_ids_rejected(self):
        cands = [DesignCandidate(0, np.zeros(2)), DesignCandidate(0, np.ones(2))]
        with pytest.raises(SchemaMismatch):
            CandidatePool(cands, 2, np.array([[0.0, 1.0], [0.0, 1.0]]))


class TestSampling:
    def test_initial_sample_exhaustive(self):
        pool = small_pool(n=5)
        picked = initial_sample(pool, 5, np.random.default_rng(0))
        assert sorted(c.id for c in picked) == [0, 1, 2, 3, 4]
        assert pool.available == 0

    def test_initial_sample_consumes(self):
        pool = small_pool(n=10)
        picked = initial_sample(pool, 4, np.random.default_rng(0))
        assert pool.available == 6
        assert {c.id for c in picked} <= pool.consumed

    def test_initial_sample_deterministic(self):
        base = pool_from_arrays(
            np.random.default_rng(1).random((1000, 4)),
            np.random.default_rng(2).random((1000, 2)),
        )
        ids = []
        for _ in range(2):
            pool = base.copy()
            picked = initial_sample(pool, 100, np.random.default_rng(42))
            ids.append({c.id for c in picked})
        assert ids[0] == ids[1]
        assert len(ids[0]) == 100

    def test_initial_sample_exhausted(self):
        pool = small_pool(n=3)
        with pytest.raises(PoolExhausted):
            initial_sample(pool, 4, np.random.default_rng(0))

    def test_bootstrap_draw_all_available(self):
        pool = small_pool(n=5)
        consume(pool, [0, 3])
        drawn = bootstrap_draw(pool, 3, np.random.default_rng(0))
        assert sorted(c.id for c in drawn) == [1, 2, 4]

    def test_bootstrap_does_not_consume(self):
        pool = small_pool(n=10)
        bootstrap_draw(pool, 6, np.random.default_rng(0))
        assert pool.available == 10

    def test_bootstrap_deterministic_and_seed_sensitive(self):
        pool = small_pool(n=1000, seed=3)
        a = {c.id for c in bootstrap_draw(pool, 100, np.random.default_rng(7))}
        b = {c.id for c in bootstrap_draw(pool, 100, np.random.default_rng(7))}
        c = {c.id for c in bootstrap_draw(pool, 100, np.random.default_rng(8))}
        assert a == b
        assert a != c

    def test_bootstrap_never_returns_consumed(self):
        pool = small_pool(n=40)
        consume(pool, list(range(20)))
        rng = np.random.default_rng(11)
        for _ in range(25):
            drawn = {c.id for c in bootstrap_draw(pool, 10, rng)}
            assert drawn.isdisjoint(pool.consumed)

    def test_bootstrap_exhausted(self):
        pool = small_pool(n=5)
        consume(pool, [0, 1, 2])
        with pytest.raises(PoolExhausted):
            bootstrap_draw(pool, 3, np.random.default_rng(0))

    def test_table_sized_draws(self):
        # The two experiment scenarios draw 400 and 2000 candidates per iteration.
        pool = pool_from_arrays(
            np.random.default_rng(0).random((2500, 2)),
            np.random.default_rng(1).random((2500, 2)),
        )
        assert len(bootstrap_draw(pool, 400, np.random.default_rng(0))) == 400
        assert len(bootstrap_draw(pool, 2000, np.random.default_rng(0))) == 2000

    def test_full_sequence_reproducible(self):
        base = small_pool(n=200, seed=9)
        sequences = []
        for _ in range(2):
            pool = base.copy()
            rng = np.random.default_rng(123)
            seq = [c.id for c in initial_sample(pool, 30, rng)]
            for _ in range(3):
                seq.extend(c.id for c in bootstrap_draw(pool, 50, rng))
            sequences.append(seq)
        assert sequences[0] == sequences[1]


class TestConsume:
    def test_consume_reduces_available(self):
        pool = small_pool(n=60)
        consume(pool, list(range(25)))
        assert pool.available == 35
        assert len(pool.consumed) + pool.available == len(pool)

    def test_consume_empty_is_noop(self):
        pool = small_pool()
        consume(pool, [])
        assert pool.available == len(pool)

    def test_consume_twice_raises(self):
        pool = small_pool()
        consume(pool, [1])
        with pytest.raises(AlreadyConsumed):
            consume(pool, [1])

    def test_consume_duplicate_in_one_call(self):
        pool = small_pool()
        with pytest.raises(AlreadyConsumed):
            consume(pool, [2, 2])

    def test_consume_unknown_id(self):
        pool = small_pool(n=5)
        with pytest.raises(UnknownId):
            consume(pool, [99])

    def test_consume_validates_before_mutating(self):
        pool = small_pool(n=5)
        with pytest.raises(UnknownId):
            consume(pool, [1, 99])
        assert pool.available == 5


class TestNormalizers:
    def test_target_stats_example(self):
        pool = small_pool()
        _, tnorm = fit_normalizers(pool, np.array([[0.0, 0.0], [2.0, 2.0]]))
        np.testing.assert_array_equal(tnorm.mean, [1.0, 1.0])
        np.testing.assert_array_equal(tnorm.std, [1.0, 1.0])

    def test_constant_objective_column_maps_to_zero(self):
        pool = small_pool()
        targets = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
        _, tnorm = fit_normalizers(pool, targets)
        z = tnorm.transform(targets)
        np.testing.assert_array_equal(z[:, 0], [0.0, 0.0, 0.0])

    def test_refit_matches_direct_summation(self):
        # Oracle: recompute mean and population std with explicit loops.
        pool = small_pool()
        rng = np.random.default_rng(5)
        targets = rng.normal(size=(4, 2))
        for _ in range(3):
            targets = np.vstack([targets, rng.normal(size=(3, 2))])
            _, tnorm = fit_normalizers(pool, targets)
            n = len(targets)
            for j in range(2):
                mean = sum(targets[i, j] for i in range(n)) / n
                var = sum((targets[i, j] - mean) ** 2 for i in range(n)) / n
                assert tnorm.mean[j] == pytest.approx(mean, abs=1e-12)
                assert tnorm.std[j] == pytest.approx(var**0.5, abs=1e-12)

    def test_empty_training_set_rejected(self):
        pool = small_pool()
        with pytest.raises(DegenerateInput):
            fit_normalizers(pool, np.empty((0, 2)))

    def test_features_map_into_unit_interval(self):
        pool = small_pool(n=50, d=6, seed=2)
        fnorm, _ = fit_normalizers(pool, np.zeros((1, 2)))
        scaled = fnorm.transform(params_matrix(pool.candidates))
        assert scaled.min() >= 0.0
        assert scaled.max() <= 1.0
        # Bounds themselves map to the interval ends.
        assert np.any(scaled == 0.0)
        assert np.any(scaled == 1.0)

    def test_constant_feature_dimension_maps_to_half(self):
        params = np.column_stack([np.full(4, 3.0), np.arange(4.0)])
        pool = pool_from_arrays(params, np.zeros((4, 2)))
        fnorm, _ = fit_normalizers(pool, np.zeros((1, 2)))
        scaled = fnorm.transform(params)
        np.testing.assert_array_equal(scaled[:, 0], [0.5, 0.5, 0.5, 0.5])

    def test_target_normalizer_roundtrip(self):
        pool = small_pool()
        targets = np.random.default_rng(0).normal(size=(10, 2)) * 7 + 3
        _, tnorm = fit_normalizers(pool, targets)
        np.testing.assert_allclose(tnorm.inverse(tnorm.transform(targets)), targets, atol=1e-12)

    def test_inverse_example(self):
        from dado.datapool import TargetNormalizer

        tnorm = TargetNormalizer(np.array([1.0, 1.0]), np.array([2.0, 2.0]))
        np.testing.assert_array_equal(tnorm.inverse(np.array([0.0, 0.0])), [1.0, 1.0])


class TestPoolInvariants:
    def test_available_plus_consumed_is_size(self):
        pool = small_pool(n=30)
        rng = np.random.default_rng(0)
        initial_sample(pool, 10, rng)
        assert pool.available + len(pool.consumed) == len(pool)
        consume(pool, [c.id for c in bootstrap_draw(pool, 5, rng)])
        assert pool.available + len(pool.consumed) == len(pool)

    def test_copy_isolates_consumption(self):
        pool = small_pool(n=10)
        clone = pool.copy()
        consume(pool, [0, 1])
        assert clone.available == 10
        assert pool.available == 8
