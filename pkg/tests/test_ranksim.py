import numpy as np
import pytest

from geopart.ranksim import (
    SEGMENTS,
    CollectiveLog,
    RankWorld,
    allreduce_extreme,
    allreduce_sum,
    gather_rows,
    global_sort_redistribute,
    segment_block_sums,
    weighted_mean_reduce,
)


class TestWorldConstruction:
    def test_contiguous_shards_cover_points(self):
        pts = np.arange(10, dtype=float).reshape(5, 2)
        w = RankWorld.from_points(pts, p=2)
        assert w.p == 2
        assert [s.size for s in w.shards] == [2, 3]
        assert np.array_equal(np.concatenate([s.gids for s in w.shards]), np.arange(5))
        assert np.array_equal(np.concatenate([s.points for s in w.shards]), pts)

    def test_shard_sizes_differ_by_at_most_one(self):
        w = RankWorld.from_points(np.zeros((11, 2)), p=4)
        sizes = [s.size for s in w.shards]
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == 11

    def test_rank_count_bounds(self):
        with pytest.raises(ValueError):
            RankWorld.from_points(np.zeros((3, 2)), p=4)
        with pytest.raises(ValueError):
            RankWorld.from_points(np.zeros((3, 2)), p=0)

    def test_positions_are_global(self):
        w = RankWorld.from_points(np.zeros((6, 2)), p=3)
        assert np.array_equal(w.shards[2].positions(), [4, 5])


class TestAllreduce:
    def test_sum_example(self):
        w = RankWorld.from_points(np.zeros((4, 2)), p=2)
        out = allreduce_sum(w, [np.array([1.0, 2.0]), np.array([3.0, 4.0])])
        assert np.array_equal(out, [4.0, 6.0])

    def test_sum_is_rank_order(self):
        # fixed reduction order: ((r0 + r1) + r2), not pairwise
        w = RankWorld.from_points(np.zeros((3, 2)), p=3)
        a, b, c = np.array([1e16]), np.array([1.0]), np.array([-1e16])
        out = allreduce_sum(w, [a, b, c])
        assert out[0] == (1e16 + 1.0) + -1e16

    def test_extreme_min_max(self):
        w = RankWorld.from_points(np.zeros((4, 2)), p=2)
        lo = allreduce_extreme(w, [np.array([1.0, 5.0]), np.array([2.0, 3.0])], op=np.minimum)
        hi = allreduce_extreme(w, [np.array([1.0, 5.0]), np.array([2.0, 3.0])], op=np.maximum)
        assert np.array_equal(lo, [1.0, 3.0])
        assert np.array_equal(hi, [2.0, 5.0])

    def test_requires_one_contribution_per_rank(self):
        w = RankWorld.from_points(np.zeros((4, 2)), p=2)
        with pytest.raises(ValueError):
            allreduce_sum(w, [np.array([1.0])])

    def test_logged(self):
        w = RankWorld.from_points(np.zeros((4, 2)), p=2)
        before = w.log.counts.get("sum-reduce", 0)
        allreduce_sum(w, [np.zeros(3), np.zeros(3)])
        assert w.log.counts["sum-reduce"] == before + 1

    def test_volume_independent_of_point_count(self):
        # reductions move per-block data, never per-point data
        wa = RankWorld.from_points(np.zeros((10, 2)), p=2)
        wb = RankWorld.from_points(np.zeros((1000, 2)), p=2)
        allreduce_sum(wa, [np.zeros(8), np.zeros(8)])
        allreduce_sum(wb, [np.zeros(8), np.zeros(8)])
        assert wa.log.volumes["sum-reduce"] == wb.log.volumes["sum-reduce"]


class TestSortRedistribute:
    def test_four_points_two_ranks(self):
        pts = np.array([[3.0, 0.0], [1.0, 0.0], [0.0, 0.0], [2.0, 0.0]])
        w = RankWorld.from_points(pts, p=2)
        keys = [s.points[:, 0].astype(np.uint64) for s in w.shards]
        w2 = global_sort_redistribute(w, keys)
        assert np.array_equal(w2.shards[0].gids, [2, 1])
        assert np.array_equal(w2.shards[1].gids, [3, 0])
        assert np.array_equal(w2.shards[0].points[:, 0], [0.0, 1.0])

    def test_equal_keys_keep_global_id_order(self):
        pts = np.zeros((4, 2))
        w = RankWorld.from_points(pts, p=2)
        keys = [np.zeros(s.size, dtype=np.uint64) for s in w.shards]
        w2 = global_sort_redistribute(w, keys)
        assert np.array_equal(np.concatenate([s.gids for s in w2.shards]), [0, 1, 2, 3])

    def test_weights_travel_with_points(self):
        pts = np.array([[2.0, 0.0], [1.0, 0.0]])
        w = RankWorld.from_points(pts, weights=np.array([20.0, 10.0]), p=2)
        w2 = global_sort_redistribute(w, [s.points[:, 0].astype(np.uint64) for s in w.shards])
        assert w2.shards[0].weights[0] == 10.0
        assert w2.shards[1].weights[0] == 20.0

    def test_global_order_independent_of_rank_count(self):
        rng = np.random.default_rng(0)
        pts = rng.random((97, 2))
        keys_global = (pts[:, 0] * 1e6).astype(np.uint64)
        orders = []
        for p in (1, 2, 4, 8):
            w = RankWorld.from_points(pts, p=p)
            keys = [keys_global[s.gids] for s in w.shards]
            w2 = global_sort_redistribute(w, keys)
            orders.append(np.concatenate([s.gids for s in w2.shards]))
        for other in orders[1:]:
            assert np.array_equal(orders[0], other)

    def test_sort_logged(self):
        w = RankWorld.from_points(np.zeros((4, 2)), p=2)
        global_sort_redistribute(w, [np.zeros(s.size, dtype=np.uint64) for s in w.shards])
        assert w.log.counts["sort"] == 1


class TestSegmentReduce:
    def test_two_point_mean(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0]])
        w = RankWorld.from_points(pts, p=1)
        s = w.shards[0]
        sums = segment_block_sums(w, 0, np.zeros(2, dtype=np.int64), s.points * s.weights[:, None], k=1)
        wts = segment_block_sums(w, 0, np.zeros(2, dtype=np.int64), s.weights, k=1)
        centers, totals, empty = weighted_mean_reduce(w, [sums], [wts])
        assert np.array_equal(centers, [[1.0, 0.0]])
        assert totals[0] == 2.0
        assert not empty[0]

    def test_weighted_mean_pulls_toward_heavy_point(self):
        pts = np.array([[0.0, 0.0], [4.0, 0.0]])
        w = RankWorld.from_points(pts, weights=np.array([1.0, 3.0]), p=1)
        s = w.shards[0]
        sums = segment_block_sums(w, 0, np.zeros(2, dtype=np.int64), s.points * s.weights[:, None], k=1)
        wts = segment_block_sums(w, 0, np.zeros(2, dtype=np.int64), s.weights, k=1)
        centers, _, _ = weighted_mean_reduce(w, [sums], [wts])
        assert np.array_equal(centers, [[3.0, 0.0]])

    def test_empty_block_is_nan_and_flagged(self):
        pts = np.array([[1.0, 1.0]])
        w = RankWorld.from_points(pts, p=1)
        s = w.shards[0]
        sums = segment_block_sums(w, 0, np.zeros(1, dtype=np.int64), s.points * s.weights[:, None], k=2)
        wts = segment_block_sums(w, 0, np.zeros(1, dtype=np.int64), s.weights, k=2)
        centers, totals, empty = weighted_mean_reduce(w, [sums], [wts])
        assert empty[1] and not empty[0]
        assert np.isnan(centers[1]).all()
        assert totals[1] == 0.0

    def test_negative_assignment_excluded(self):
        pts = np.array([[1.0, 0.0], [100.0, 0.0]])
        w = RankWorld.from_points(pts, p=1)
        s = w.shards[0]
        assignment = np.array([0, -1], dtype=np.int64)
        sums = segment_block_sums(w, 0, assignment, s.points * s.weights[:, None], k=1)
        wts = segment_block_sums(w, 0, assignment, s.weights, k=1)
        centers, totals, _ = weighted_mean_reduce(w, [sums], [wts])
        assert np.array_equal(centers, [[1.0, 0.0]])
        assert totals[0] == 1.0

    def test_bit_identical_across_rank_counts(self):
        # adversarial magnitudes: naive per-rank partial sums would differ
        rng = np.random.default_rng(1)
        pts = rng.random((512, 2)) * np.power(10.0, rng.integers(-8, 9, size=(512, 1)))
        wts_g = rng.random(512) + 1e-3
        assignment_g = rng.integers(0, 7, size=512).astype(np.int64)
        results = []
        for p in (1, 2, 4, 8, 16):
            w = RankWorld.from_points(pts, weights=wts_g, p=p)
            sums = [
                segment_block_sums(
                    w, r, assignment_g[s.gids], s.points * s.weights[:, None], k=7
                )
                for r, s in enumerate(w.shards)
            ]
            wpart = [
                segment_block_sums(w, r, assignment_g[s.gids], s.weights, k=7)
                for r, s in enumerate(w.shards)
            ]
            centers, totals, _ = weighted_mean_reduce(w, sums, wpart)
            results.append((centers, totals))
        for centers, totals in results[1:]:
            assert np.array_equal(centers, results[0][0])
            assert np.array_equal(totals, results[0][1])

    def test_segment_count_fixed(self):
        assert SEGMENTS == 256


class TestGatherAndLog:
    def test_gather_concatenates_in_rank_order(self):
        w = RankWorld.from_points(np.zeros((4, 2)), p=2)
        out = gather_rows(w, [np.array([[1.0]]), np.array([[2.0]])])
        assert np.array_equal(out, [[1.0], [2.0]])
        assert w.log.counts["gather"] == 1

    def test_log_accumulates(self):
        log = CollectiveLog()
        log.record("sort", 10)
        log.record("sort", 5)
        assert log.counts["sort"] == 2
        assert log.volumes["sort"] == 15
