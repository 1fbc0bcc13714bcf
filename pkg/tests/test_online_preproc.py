"""
Tests for online membership structures, preprocessed universes and weighted stars
Run with: python -m pytest tests/test_online_preproc.py -v
"""
from itertools import combinations

import numpy as np
import pytest

from sumset_toolkit.errors import DimensionMismatchError, PreconditionError, SubsetViolationError
from sumset_toolkit.services.core_model import InstanceKind, PointSet, WorkCounter, gen_threesum_instance
from sumset_toolkit.services.minplus_hist import substring_histograms
from sumset_toolkit.services.online_preproc import balanced_delta, online_alpha


def sumset_points(A: PointSet, B: PointSet) -> set:
    return set(map(tuple, (A.array[:, None, :] + B.array[None, :, :]).reshape(-1, A.dim).tolist()))


def query_points(rng, A, B, count=150):
    """Half true sums, half random points near the sumset's range"""
    sums = sorted(sumset_points(A, B))
    picks = [sums[i] for i in rng.choice(len(sums), size=count // 2, replace=False).tolist()]
    top = 2 * max(A.universe, B.universe)
    noise = [tuple(v) for v in rng.integers(0, top, size=(count // 2, A.dim)).tolist()]
    return picks + noise


def subset(rng, s: PointSet, fraction=0.6) -> PointSet:
    keep = rng.random(len(s)) < fraction
    return PointSet.from_array(s.array[keep], dim=s.dim)


def star_oracle(weights, edges, W):
    neighbours = [set() for _ in weights]
    for u, v in edges:
        if u != v:
            neighbours[u].add(v)
            neighbours[v].add(u)
    for u, nbrs in enumerate(neighbours):
        for trio in combinations(sorted(nbrs), 3):
            if weights[u] + sum(weights[v] for v in trio) == W:
                return True
    return False


# ============== Online Structure Tests ==============
class TestOnlineStructure:
    """Membership queries against the explicit sumset"""

    @pytest.mark.parametrize("P", [1.0, 1e9])
    def test_queries_match_sumset(self, online_service, rng, P):
        A, B, _ = gen_threesum_instance(InstanceKind.MONOTONE, 120, 3, d=2)
        struct = online_service.build_online(A, B, ell=8, P=P)
        truth = sumset_points(A, B)
        for q in query_points(rng, A, B):
            assert online_service.query_online(struct, q) == (q in truth)

    def test_both_branches_taken(self, online_service, rng):
        """A threshold of one makes crowded buckets popular and leaves singletons to the scan"""
        A, B, _ = gen_threesum_instance(InstanceKind.MONOTONE, 120, 5, d=2)
        popular = online_service.build_online(A, B, ell=8, P=1.0)
        scanned = online_service.build_online(A, B, ell=8, P=1e9)
        points = query_points(rng, A, B)
        popular_work, scanned_work = WorkCounter(), WorkCounter()
        assert (online_service.query_many(popular, points, popular_work)
                == online_service.query_many(scanned, points, scanned_work))
        assert popular_work.branches['high'] > 0
        assert scanned_work.branches['low'] > 0
        assert scanned_work.branches['high'] == 0
        assert scanned.high_list_size == 0

    def test_queries_leave_structure_unchanged(self, online_service, rng):
        """Two callers counting into their own counters see the same tallies"""
        A, B, _ = gen_threesum_instance(InstanceKind.MONOTONE, 80, 6, d=2)
        struct = online_service.build_online(A, B, ell=8, P=1.0)
        points = query_points(rng, A, B, 60)
        before = vars(struct).copy()
        first, second = WorkCounter(), WorkCounter()
        online_service.query_many(struct, points, first)
        online_service.query_many(struct, points, second)
        assert first == second
        assert sum(first.branches.values()) > 0
        assert vars(struct).keys() == before.keys()
        assert struct.stats == before['stats']

    def test_popular_lists_audit_clean(self, online_service):
        A, B, _ = gen_threesum_instance(InstanceKind.MONOTONE, 150, 8, d=2)
        struct = online_service.build_online(A, B, ell=8, P=2.0)
        audit = online_service.audit_online(struct)
        assert audit['missing'] == 0
        assert audit['spurious'] == 0
        assert audit['high_list'] == struct.high_list_size

    def test_tuned_parameters(self, online_service, rng):
        A, B, _ = gen_threesum_instance(InstanceKind.MONOTONE, 200, 1, d=1)
        struct = online_service.build_online(A, B)
        truth = sumset_points(A, B)
        for q in query_points(rng, A, B, 80):
            assert online_service.query_online(struct, q) == (q in truth)
        assert struct.stats['parts'] >= 1

    def test_query_dimension_checked(self, online_service):
        A = PointSet([(0, 0), (1, 1)], dim=2, universe=2)
        struct = online_service.build_online(A, A, ell=2, P=1.0)
        with pytest.raises(DimensionMismatchError):
            online_service.query_online(struct, (1,))

    def test_bad_threshold(self, online_service):
        A = PointSet.from_values([1, 2])
        with pytest.raises(PreconditionError):
            online_service.build_online(A, A, ell=2, P=0.5)

    def test_empty_side(self, online_service):
        A = PointSet.from_values([1, 2])
        struct = online_service.build_online(A, PointSet.from_values([]), ell=2, P=1.0)
        assert not online_service.query_online(struct, (3,))


# ============== Online Tuning Tests ==============
class TestOnlineTuning:
    """Exponent bookkeeping for online structures"""

    def test_balanced_delta(self):
        assert balanced_delta(2) == pytest.approx(2 / 21)
        assert balanced_delta(2, a_only_monotone=True) == pytest.approx(1 / 11)

    def test_tune_online(self, online_service):
        params = online_service.tune_online(4096, 2)
        assert params.ell % 2 == 0
        assert params.Q >= 1
        assert params.P >= 1
        assert params.preprocessing_exponent == pytest.approx(2 - 2 / 21)

    def test_delta_too_large(self, online_service):
        with pytest.raises(PreconditionError):
            online_service.tune_online(4096, 2, delta=0.9)

    def test_online_alpha_at_most_one(self):
        assert online_alpha(1, 1, 1, 1, 4, 1.0) == 1.0
        assert 0 < online_alpha(50, 50, 8, 8, 16, 40.0) < 1


# ============== Online Histogram Tests ==============
class TestOnlineHistogram:
    """Substring count vectors through the online structure"""

    @pytest.mark.parametrize("alphabet", [2, 3])
    def test_matches_enumeration(self, online_service, rng, alphabet):
        text = "".join(str(v) for v in rng.integers(0, alphabet, size=30).tolist())
        index = online_service.hist_online(text, alphabet)
        seen = substring_histograms(text, alphabet)
        queries = list(seen)[:30] + [tuple(rng.integers(0, 10, size=alphabet).tolist()) for _ in range(30)]
        for q in queries:
            assert index.query(q) == (q in seen)

    def test_zero_vector_and_empty_text(self, online_service):
        assert online_service.hist_online("", 2).query((0, 0))
        assert online_service.hist_online("0101", 2).query((0, 0))

    def test_wrong_width(self, online_service):
        with pytest.raises(DimensionMismatchError):
            online_service.hist_online("0101", 2).query((1, 1, 1))


# ============== Preprocessed Universe Tests ==============
class TestPreprocessedUniverse:
    """Subset queries answered from one stored cover"""

    @staticmethod
    def universe(rng, n=60, top=600):
        A0 = PointSet.from_values(rng.choice(top, size=n, replace=False).tolist())
        B0 = PointSet.from_values(rng.choice(top, size=n, replace=False).tolist())
        sums = np.unique(A0.array[:, 0][:, None] + B0.array[:, 0][None, :])
        S0 = PointSet.from_values(rng.choice(sums, size=2 * n, replace=False).tolist())
        return A0, B0, S0

    @pytest.mark.parametrize("deterministic", [False, True])
    def test_with_target_universe(self, online_service, solver, rng, deterministic):
        A0, B0, S0 = self.universe(rng)
        pu = online_service.preproc_universe(A0, B0, S0, alpha=0.25, deterministic=deterministic)
        assert pu.describe()['deterministic'] == deterministic
        for _ in range(4):
            A, B, S = subset(rng, A0), subset(rng, B0), subset(rng, S0)
            result = online_service.query_universe(pu, A, B, S)
            assert result.hits == solver.threesum_brute(A, B, S).hits

    @pytest.mark.parametrize("deterministic", [False, True])
    def test_without_target_universe(self, online_service, solver, rng, deterministic):
        """Any S is allowed; unpopular sums come from their buckets"""
        A0, B0, _ = self.universe(rng, n=50, top=200)
        pu = online_service.preproc_universe_no_S(A0, B0, t=4.0, alpha=0.25, deterministic=deterministic)
        assert pu.threshold == pytest.approx(50 / 4.0)
        for _ in range(4):
            A, B = subset(rng, A0), subset(rng, B0)
            S = PointSet.from_values(rng.choice(400, size=150, replace=False).tolist())
            result = online_service.query_universe(pu, A, B, S, witnesses=True)
            assert result.hits == solver.threesum_brute(A, B, S).hits
            assert set(result.witnesses) == set(result.hits.points)

    def test_query_budget(self, online_service, rng):
        A0, B0, S0 = self.universe(rng)
        pu = online_service.preproc_universe(A0, B0, S0, alpha=0.5)
        assert pu.query_budget == len(pu.cover.remainder) + pu.stored_sumset_size

    def test_subset_violation(self, online_service):
        A0 = PointSet.from_values([0, 1, 2])
        pu = online_service.preproc_universe(A0, A0, PointSet.from_values([1, 2, 3]), alpha=0.5)
        outside = PointSet.from_values([7])
        with pytest.raises(SubsetViolationError):
            online_service.query_universe(pu, outside, A0, PointSet.from_values([1]))
        with pytest.raises(SubsetViolationError):
            online_service.query_universe(pu, A0, A0, PointSet.from_values([4]))

    def test_planar_rejected(self, online_service):
        planar = PointSet([(0, 1)], dim=2, universe=2)
        with pytest.raises(PreconditionError):
            online_service.preproc_universe_no_S(planar, planar)


# ============== Weighted Star Tests ==============
class TestWeightedStars:
    """Centre plus three distinct neighbours of total weight W"""

    def test_matches_enumeration(self, online_service, rng):
        for _ in range(3):
            n = 10
            weights = rng.integers(0, 12, size=n).tolist()
            edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.4]
            for W in range(0, 50, 3):
                star = online_service.k13_star(weights, edges, W)
                assert (star is not None) == star_oracle(weights, edges, W)
                if star is not None:
                    u, *leaves = star
                    assert len(set(leaves)) == 3 and u not in leaves
                    assert weights[u] + sum(weights[v] for v in leaves) == W
                    adjacent = {frozenset(e) for e in edges}
                    assert all(frozenset((u, v)) in adjacent for v in leaves)

    def test_repeated_weight_needs_distinct_vertices(self, online_service):
        """Leaves 1, 2, 3 all weigh 5; a fourth 5 is not there to reuse"""
        weights = [0, 5, 5, 5, 1]
        edges = [(0, 1), (0, 2), (0, 3), (0, 4)]
        assert online_service.k13_weighted(weights, edges, 15)
        assert online_service.k13_weighted(weights, edges, 11)
        assert not online_service.k13_weighted(weights, edges, 20)

    def test_no_degree_three_vertex(self, online_service):
        assert not online_service.k13_weighted([1, 1, 1], [(0, 1), (1, 2)], 3)
