"""
Tests for the 3SUM+ solvers against the brute-force oracle
Run with: python -m pytest tests/test_solvers.py -v
"""
import numpy as np
import pytest

from sumset_toolkit.errors import ClusterAuditError, DimensionMismatchError, NotMonotoneError, PreconditionError
from sumset_toolkit.services.core_model import (
    ClusterDesc,
    GridConfig,
    InstanceKind,
    PointSet,
    WorkCounter,
    gen_monotone_set,
    gen_threesum_instance,
    is_aligned,
)
from sumset_toolkit.services.solvers import SolveParams, equitable_decompose, monotone_exponents


def assert_same_hits(oracle, result):
    assert result.hits == oracle.hits, f"expected {len(oracle.hits)} hits, got {len(result.hits)}"


# ============== Monotone Solver Tests ==============
class TestMonotoneSolver:
    """Grid cover solver on monotone sets"""

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_matches_brute(self, solver, d):
        for seed in range(8):
            A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, 200 + 37 * seed, seed, d=d)
            assert_same_hits(solver.threesum_brute(A, B, S), solver.threesum_monotone(A, B, S))

    def test_fft_biclique_path(self, fft_solver):
        """With transforms priced near zero every biclique goes through hashed convolution"""
        for seed in range(4):
            A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, 256, seed, d=2)
            result = fft_solver.threesum_monotone(A, B, S)
            assert_same_hits(fft_solver.threesum_brute(A, B, S), result)

    def test_explicit_params(self, solver):
        A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, 300, 5, d=2)
        params = SolveParams(ell=6, alpha=0.25, recurse=0)
        assert_same_hits(solver.threesum_brute(A, B, S), solver.threesum_monotone(A, B, S, params=params))

    def test_recursion_on_remainder(self, solver):
        """Remainder cells above the cutoff are solved recursively"""
        A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, 400, 11, d=2)
        params = SolveParams(ell=64, alpha=0.5, recurse=2, brute_cutoff=4)
        assert_same_hits(solver.threesum_brute(A, B, S), solver.threesum_monotone(A, B, S, params=params))

    def test_work_below_brute_force(self, solver):
        """At n = 1024 in the plane the structural work is well under |A||B|"""
        A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, 1024, 0, d=2)
        brute = solver.threesum_brute(A, B, S)
        fast = solver.threesum_monotone(A, B, S)
        assert_same_hits(brute, fast)
        assert fast.work.total < brute.work.total / 2

    def test_rejects_non_monotone(self, solver):
        A = PointSet([(0, 3), (1, 0)], dim=2, universe=4)
        with pytest.raises(NotMonotoneError):
            solver.threesum_monotone(A, A, A)

    def test_dimension_mismatch(self, solver):
        A = PointSet.from_values([1, 2])
        B = PointSet([(0, 0)], dim=2, universe=1)
        with pytest.raises(DimensionMismatchError):
            solver.threesum_monotone(A, B, A)

    def test_empty_sets(self, solver):
        empty = PointSet([], dim=2, universe=4)
        A = PointSet([(0, 0), (1, 1)], dim=2, universe=4)
        assert len(solver.threesum_monotone(A, empty, A).hits) == 0

    def test_witnesses(self, solver):
        """Every hit comes with a pair from A x B that sums to it"""
        A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, 150, 3, d=2)
        result = solver.threesum_monotone(A, B, S, witnesses=True)
        assert set(result.witnesses) == set(result.hits.points)
        for s, (a, b) in result.witnesses.items():
            assert a in A and b in B
            assert tuple(x + y for x, y in zip(a, b)) == s

    def test_stats_recorded(self, solver):
        A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, 128, 2, d=2)
        record = solver.threesum_monotone(A, B, S).record()
        assert record['solver'] == 'monotone'
        assert record['work']['total'] > 0
        assert 'ell' in record


# ============== Tuning Tests ==============
class TestTuning:
    """Exponents and parameters"""

    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_exponents_solve_quadratic(self, d):
        x, y, z = monotone_exponents(d)
        assert 6 * z * z + (d - 11) * z - 2 * d == pytest.approx(0, abs=1e-9)
        assert 1 <= z <= 2
        assert x == pytest.approx(1 - z / 2)
        assert y == pytest.approx(x * z)

    def test_one_dimensional_root(self):
        """6z^2 - 10z - 2 = 0 in one dimension"""
        _, _, z = monotone_exponents(1)
        assert z == pytest.approx((10 + 148 ** 0.5) / 12, abs=1e-9)

    def test_params(self, solver):
        params = solver.tune_monotone_params(4096, 2)
        assert params.ell % 2 == 0
        assert 0 < params.alpha <= 1

    def test_params_need_n(self, solver):
        with pytest.raises(PreconditionError):
            solver.tune_monotone_params(1, 2)

    def test_clustered_alpha_clamped(self, solver):
        assert solver.tune_clustered_alpha(1, 1, 100, 64, 1) == 1.0
        assert 0 < solver.tune_clustered_alpha(64, 64, 4, 16, 1000) < 1

    def test_solve_params_validation(self):
        with pytest.raises(PreconditionError):
            SolveParams(ell=4, alpha=0)


# ============== Clustered Solver Tests ==============
class TestClusteredSolvers:
    """Clustered and one-clustered engines"""

    def test_clustered_matches_brute(self, solver):
        desc = ClusterDesc(4, 64)
        for seed in range(8):
            A, B, S = gen_threesum_instance(InstanceKind.CLUSTERED, 200, seed, K=4, L=64)
            assert_same_hits(solver.threesum_brute(A, B, S), solver.threesum_clustered(A, B, S, desc, desc))

    def test_clustered_fft_path(self, fft_solver):
        desc = ClusterDesc(8, 32)
        A, B, S = gen_threesum_instance(InstanceKind.CLUSTERED, 200, 4, K=8, L=32)
        assert_same_hits(fft_solver.threesum_brute(A, B, S), fft_solver.threesum_clustered(A, B, S, desc, desc))

    def test_one_clustered_matches_brute(self, solver, rng):
        """Only A is clustered; B and S are arbitrary"""
        desc = ClusterDesc(4, 64)
        for seed in range(6):
            A, _, _ = gen_threesum_instance(InstanceKind.CLUSTERED, 150, seed, K=4, L=64)
            B = PointSet.from_values(rng.choice(2000, size=150, replace=False).tolist())
            S = PointSet.from_values(rng.choice(2500, size=300, replace=False).tolist())
            assert_same_hits(solver.threesum_brute(A, B, S), solver.threesum_one_clustered(A, B, S, desc))

    def test_descriptor_audited(self, solver):
        A = PointSet.from_values([0, 100, 200])
        with pytest.raises(ClusterAuditError):
            solver.threesum_clustered(A, A, A, ClusterDesc(1, 8), ClusterDesc(3, 8))

    def test_equitable_decompose_partitions(self, rng):
        s = PointSet.from_values(rng.choice(4000, size=500, replace=False).tolist())
        parts = equitable_decompose(s, GridConfig(16, 4000, 1))
        assert sum(len(sub) for sub, _ in parts) == len(s)
        for sub, desc in parts:
            counts = np.unique(sub.array[:, 0] // 16, return_counts=True)[1]
            assert counts.max() <= desc.M
            assert len(counts) == desc.K


# ============== Offline Monotone Solver Tests ==============
class TestMonotoneOffline:
    """Monotone A and B against an arbitrary S"""

    @pytest.mark.parametrize("d", [1, 2])
    def test_matches_brute(self, solver, rng, d):
        for seed in range(5):
            A, B, _ = gen_threesum_instance(InstanceKind.MONOTONE, 200, seed, d=d)
            S = PointSet.from_array(rng.integers(0, 400, size=(300, d)), dim=d)
            assert_same_hits(solver.threesum_brute(A, B, S), solver.threesum_monotone_offline(A, B, S))

    def test_only_a_monotone(self, solver, rng):
        A = gen_monotone_set(200, 2, rng)
        B = PointSet.from_array(rng.integers(0, 200, size=(150, 2)), dim=2)
        S = PointSet.from_array(rng.integers(0, 400, size=(300, 2)), dim=2)
        result = solver.threesum_monotone_offline(A, B, S, a_only_monotone=True)
        assert_same_hits(solver.threesum_brute(A, B, S), result)

    def test_b_must_be_monotone_by_default(self, solver):
        A = PointSet([(0, 0), (1, 1)], dim=2, universe=4)
        B = PointSet([(0, 3), (1, 0)], dim=2, universe=4)
        with pytest.raises(NotMonotoneError):
            solver.threesum_monotone_offline(A, B, A)


# ============== Direct Solver Tests ==============
class TestDirectSolvers:
    """Brute force, convolution and helpers"""

    def test_fft_matches_brute(self, solver, rng):
        A = PointSet.from_values(rng.choice(3000, size=200, replace=False).tolist())
        B = PointSet.from_values(rng.choice(3000, size=200, replace=False).tolist())
        S = PointSet.from_values(rng.choice(6000, size=500, replace=False).tolist())
        assert_same_hits(solver.threesum_brute(A, B, S), solver.threesum_fft(A, B, S))

    def test_fft_needs_1d(self, solver):
        planar = PointSet([(0, 1)], dim=2, universe=2)
        with pytest.raises(PreconditionError):
            solver.threesum_fft(planar, planar, planar)

    def test_brute_small_case(self, solver):
        A = PointSet.from_values([1, 2])
        B = PointSet.from_values([10, 20])
        S = PointSet.from_values([11, 12, 13, 22])
        result = solver.threesum_brute(A, B, S)
        assert result.hits.values() == [11, 12, 22]
        assert result.work.pair_ops == 4

    def test_problem_table(self, solver):
        assert set(solver.problems) == {'3sum-brute', '3sum-fft', '3sum-monotone', '3sum-monotone-offline'}

    def test_sumset_in_cells(self, solver, rng):
        """Exact A + B inside the requested cells for aligned inputs"""
        ell = 8
        a = gen_monotone_set(120, 2, rng).array
        b = gen_monotone_set(120, 2, rng).array
        a = a[is_aligned_rows(a, ell)]
        b = b[is_aligned_rows(b, ell)]
        sums = np.unique((a[:, None, :] + b[None, :, :]).reshape(-1, 2), axis=0)
        cells = np.unique(sums // ell, axis=0)[::3]
        got = solver.sumset_in_cells(a, b, cells, ell, 0.5, WorkCounter())
        chosen = {tuple(c) for c in cells.tolist()}
        wanted = {tuple(p) for p in sums.tolist() if tuple(x // ell for x in p) in chosen}
        assert {tuple(p) for p in got.tolist()} == wanted
        assert is_aligned(a, ell) and is_aligned(b, ell)


def is_aligned_rows(points: np.ndarray, ell: int) -> np.ndarray:
    return ((points % ell) < ell // 2).all(axis=1)
