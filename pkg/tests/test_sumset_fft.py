"""
Tests for exact convolution, pseudo-additive hash families and FFT sumsets
Run with: python -m pytest tests/test_sumset_fft.py -v
"""
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from sumset_toolkit.errors import ConvolutionCapError, PreconditionError
from sumset_toolkit.settings import Settings
from sumset_toolkit.services.core_model import PointSet, WorkCounter
from sumset_toolkit.services.sumset_fft import PseudoAdditiveFn, SumsetService, prime_pool


def brute_sumset(A: PointSet, B: PointSet) -> set:
    return {a + b for a in A.values() for b in B.values()}


def random_instance(rng, n, top, noise=20):
    A = PointSet.from_values(rng.choice(top, size=n, replace=False).tolist())
    B = PointSet.from_values(rng.choice(top, size=n, replace=False).tolist())
    sums = brute_sumset(A, B)
    T = PointSet.from_values(sorted(sums | set(rng.integers(0, 2 * top, size=noise).tolist())))
    return A, B, T


# ============== Convolution Tests ==============
class TestConvolution:
    """Exact integer convolution on every backend"""

    @given(st.lists(st.integers(0, 2 ** 16), min_size=1, max_size=200),
           st.lists(st.integers(0, 2 ** 16), min_size=1, max_size=200))
    @hyp_settings(max_examples=60, deadline=None)
    def test_matches_schoolbook(self, u, v):
        """Any input equals numpy's direct convolution"""
        service = SumsetService(Settings(seed=1))
        assert service.convolve(u, v).tolist() == np.convolve(u, v).tolist()

    def test_number_theoretic_path_exact(self, rng):
        """Long vectors with large entries take the modular transform and stay exact"""
        service = SumsetService(Settings(seed=1))
        for _ in range(5):
            u = rng.integers(0, 2 ** 20, size=512)
            v = rng.integers(0, 2 ** 20, size=512)
            work = WorkCounter()
            assert np.array_equal(service.convolve(u, v, work), np.convolve(u, v))
            assert work.fft_cells == 1024

    def test_float_path_exact(self, rng):
        """0/1 vectors are short enough in norm for the rounded float transform"""
        service = SumsetService(Settings(seed=1))
        u = rng.integers(0, 2, size=3000)
        v = rng.integers(0, 2, size=2000)
        assert np.array_equal(service.convolve(u, v), np.convolve(u, v))

    def test_empty_input(self, sumset_service):
        assert sumset_service.convolve([], [1, 2]).size == 0

    def test_negative_entries_rejected(self, sumset_service):
        with pytest.raises(ValueError):
            sumset_service.convolve([1, -1], [1])

    def test_cap_enforced(self):
        """Output longer than dense_cap raises"""
        service = SumsetService(Settings(dense_cap=16))
        with pytest.raises(ConvolutionCapError):
            service.convolve(np.ones(10, dtype=np.int64), np.ones(10, dtype=np.int64))

    def test_sumset_small_universe(self, sumset_service, rng):
        A = PointSet.from_values(rng.choice(500, size=40, replace=False).tolist())
        B = PointSet.from_values(rng.choice(500, size=30, replace=False).tolist())
        assert set(sumset_service.sumset_small_universe(A, B).values()) == brute_sumset(A, B)


# ============== Hash Function Tests ==============
class TestPseudoAdditiveFn:
    """h(x) = x mod primes, with h-hat undoing carries"""

    @given(st.integers(0, 10 ** 9), st.integers(0, 10 ** 9))
    @hyp_settings(max_examples=100, deadline=None)
    def test_pseudo_additive(self, a, b):
        fn = PseudoAdditiveFn((101, 103))
        assert int(fn.decode(fn.apply([a]) + fn.apply([b]))[0]) == int(fn.apply([a + b])[0])

    def test_rejects_composite(self):
        with pytest.raises(ValueError):
            PseudoAdditiveFn((15,))

    def test_rejects_repeated_primes(self):
        with pytest.raises(ValueError):
            PseudoAdditiveFn((7, 7))

    def test_offsets_decode_to_hash(self):
        """Every valid offset decodes back to h(s)"""
        fn = PseudoAdditiveFn((5, 7))
        values = np.arange(0, 200, 7)
        offsets = fn.offsets(values)
        for s, row in zip(values.tolist(), offsets.tolist()):
            for y in row:
                if y >= 0:
                    assert int(fn.decode([y])[0]) == int(fn.apply([s])[0])

    def test_check_pseudo_additive(self, sumset_service):
        assert sumset_service.check_pseudo_additive(PseudoAdditiveFn((97,)), universe=10 ** 6, samples=2000)

    def test_prime_pool(self):
        assert prime_pool(20) == (2, 3, 5, 7, 11, 13, 17, 19)


# ============== Hash Family Tests ==============
class TestHashFamilies:
    """Pseudo-perfect families, randomized and deterministic"""

    @pytest.mark.parametrize("mode", ["randomized", "deterministic"])
    def test_family_passes_full_audit(self, sumset_service, rng, mode):
        """Every target value has a collision-free witness"""
        for _ in range(5):
            T = PointSet.from_values(rng.choice(10 ** 6, size=200, replace=False).tolist())
            family = sumset_service.build_family(T, mode)
            audit = sumset_service.audit_family(family, T)
            assert audit.passed, audit.to_dict()
            assert family.mode == mode

    def test_deterministic_family_size_bound(self, sumset_service, rng):
        T = PointSet.from_values(rng.choice(10 ** 5, size=300, replace=False).tolist())
        family = sumset_service.build_family_deterministic(T)
        assert len(family) <= sumset_service.deterministic_size_bound(300)

    def test_deterministic_is_reproducible(self, rng):
        """No randomness: two services build the same family"""
        T = PointSet.from_values(rng.choice(10 ** 5, size=100, replace=False).tolist())
        first = SumsetService(Settings(seed=1)).build_family_deterministic(T)
        second = SumsetService(Settings(seed=2)).build_family_deterministic(T)
        assert [fn.primes for fn in first.fns] == [fn.primes for fn in second.fns]

    def test_audit_detects_broken_witness(self, sumset_service):
        """A witness that collides is reported"""
        T = PointSet.from_values([0, 2, 4, 6])
        family = sumset_service.build_family_randomized(T)
        family.fns.append(PseudoAdditiveFn((2,)))
        family.witness[:] = len(family.fns) - 1
        audit = sumset_service.audit_family(family, T)
        assert not audit.passed
        assert audit.violations == [0, 2, 4, 6]

    def test_witness_of(self, sumset_service):
        T = PointSet.from_values([3, 10, 40])
        family = sumset_service.build_family(T, "rand")
        assert 0 <= family.witness_of(10) < len(family)
        with pytest.raises(KeyError):
            family.witness_of(11)

    def test_empty_target_rejected(self, sumset_service):
        with pytest.raises(PreconditionError):
            sumset_service.build_family(PointSet.from_values([]), "det")

    def test_unknown_mode(self, sumset_service):
        with pytest.raises(ValueError):
            sumset_service.build_family(PointSet.from_values([1]), "quantum")


# ============== FFT Sumset Tests ==============
class TestSumsetViaFFT:
    """A + B from a known superset T"""

    @pytest.mark.parametrize("mode", ["randomized", "deterministic"])
    def test_hashed_path_matches_brute(self, sumset_service, rng, mode):
        for _ in range(10):
            A, B, T = random_instance(rng, 30, 5000)
            got = sumset_service.sumset_via_fft(A, B, T, mode=mode, allow_dense=False)
            assert set(got.values()) == brute_sumset(A, B)

    def test_dense_path_matches_brute(self, sumset_service, rng):
        A, B, T = random_instance(rng, 40, 300)
        work = WorkCounter()
        got = sumset_service.sumset_via_fft(A, B, T, work=work)
        assert set(got.values()) == brute_sumset(A, B)
        assert work.total > 0

    def test_prebuilt_family_reused(self, sumset_service, rng):
        A, B, T = random_instance(rng, 20, 2000)
        family = sumset_service.build_family(T, "det")
        got = sumset_service.sumset_via_fft(A, B, T, family=family)
        assert set(got.values()) == brute_sumset(A, B)

    def test_family_for_other_target_rejected(self, sumset_service):
        A = PointSet.from_values([1, 2])
        T = PointSet.from_values([2, 3, 4])
        family = sumset_service.build_family(PointSet.from_values([2, 3]), "rand")
        with pytest.raises(PreconditionError):
            sumset_service.sumset_via_fft(A, A, T, family=family)

    def test_debug_checks_superset(self):
        """With debug on, a T that misses sums is rejected"""
        service = SumsetService(Settings(debug=True, seed=1))
        A = PointSet.from_values([1, 5])
        with pytest.raises(PreconditionError):
            service.sumset_via_fft(A, A, PointSet.from_values([2, 6]))

    def test_empty_inputs(self, sumset_service):
        empty = PointSet.from_values([])
        assert len(sumset_service.sumset_via_fft(empty, PointSet.from_values([1]), PointSet.from_values([1]))) == 0

    def test_needs_1d(self, sumset_service):
        planar = PointSet([(0, 1)], dim=2, universe=2)
        with pytest.raises(PreconditionError):
            sumset_service.sumset_via_fft(planar, planar, planar)


# ============== Sparse Convolution Tests ==============
class TestSparseConvolution:
    """Weighted convolution restricted to a superset of its support"""

    @pytest.mark.parametrize("allow_dense", [True, False])
    def test_matches_brute(self, sumset_service, rng, allow_dense):
        u = {int(k): int(w) for k, w in zip(rng.choice(3000, 15, replace=False), rng.integers(1, 9, 15))}
        v = {int(k): int(w) for k, w in zip(rng.choice(3000, 15, replace=False), rng.integers(1, 9, 15))}
        expected = {}
        for i, wi in u.items():
            for j, wj in v.items():
                expected[i + j] = expected.get(i + j, 0) + wi * wj
        T = PointSet.from_values(sorted(expected))
        assert sumset_service.sparse_convolution(u, v, T, allow_dense=allow_dense) == expected

    def test_empty(self, sumset_service):
        assert sumset_service.sparse_convolution({}, {1: 1}, PointSet.from_values([1])) == {}
