"""
Tests for the Graph Lemma, subset extraction and biclique covers
Run with: python -m pytest tests/test_bsg.py -v
"""
import numpy as np
import pytest

from sumset_toolkit.errors import DimensionMismatchError, PreconditionError
from sumset_toolkit.settings import Settings
from sumset_toolkit.services.bsg import (
    EXTRACT_CONSTANT,
    BipartiteGraph,
    BSGService,
    block_sumset,
    count_length3_paths,
    solution_matrix,
)
from sumset_toolkit.services.core_model import PointSet, WorkCounter


def dense_graph(rng, n_a, n_b, p):
    return BipartiteGraph(rng.random((n_a, n_b)) < p)


def random_triple(rng, n, top):
    A = PointSet.from_values(rng.choice(top, size=n, replace=False).tolist())
    B = PointSet.from_values(rng.choice(top, size=n, replace=False).tolist())
    sums = (A.array[:, 0][:, None] + B.array[:, 0][None, :]).reshape(-1)
    S = PointSet.from_values(np.unique(rng.choice(sums, size=n)).tolist())
    return A, B, S


# ============== Graph Lemma Tests ==============
class TestGraphLemma:
    """Explicit-constant postconditions of both variants"""

    @pytest.mark.parametrize("alpha", [1 / 2, 1 / 4, 1 / 8])
    def test_deterministic_postconditions(self, bsg_service, rng, alpha):
        """|A'| >= alpha|A|/8, dense A' x B', and many length-3 paths for every (a', b')"""
        for _ in range(10):
            n_a, n_b = (int(v) for v in rng.integers(16, 65, size=2))
            G = dense_graph(rng, n_a, n_b, min(1.0, 2 * alpha))
            if G.edge_count < alpha * n_a * n_b:
                continue
            result = bsg_service.graph_lemma_det(G, alpha)
            left, right = result.left, result.right
            assert left.size >= alpha * n_a / 8
            assert G.adjacency[np.ix_(left, right)].sum() >= alpha * left.size * n_b / 4
            paths = count_length3_paths(G)[np.ix_(left, right)]
            assert paths.min() >= (alpha ** 2 * n_a / 64) * (alpha ** 3 * n_b / 2048)

    def test_randomized_returns_dense_block(self, bsg_service, rng):
        G = dense_graph(rng, 64, 64, 0.6)
        result = bsg_service.graph_lemma_rand(G, 0.5)
        assert result.left.size and result.right.size
        assert G.adjacency[np.ix_(result.left, result.right)].mean() > 0.25

    def test_randomized_seeded(self, rng):
        """Same seed, same subsets"""
        G = dense_graph(rng, 300, 300, 0.5)
        first = BSGService(Settings(seed=3)).graph_lemma_rand(G, 0.4)
        second = BSGService(Settings(seed=3)).graph_lemma_rand(G, 0.4)
        assert np.array_equal(first.left, second.left)
        assert np.array_equal(first.right, second.right)

    def test_too_few_edges(self, bsg_service):
        G = BipartiteGraph(np.eye(8, dtype=bool))
        with pytest.raises(PreconditionError):
            bsg_service.graph_lemma_det(G, 0.5)

    def test_alpha_range(self, bsg_service):
        with pytest.raises(PreconditionError):
            bsg_service.graph_lemma_det(BipartiteGraph(np.ones((2, 2))), 1.5)

    def test_work_counted(self, bsg_service, rng):
        work = WorkCounter()
        bsg_service.graph_lemma_det(dense_graph(rng, 10, 10, 0.9), 0.5, work)
        assert work.bsg_ops == 2 * 10 * 10 * 10

    def test_sample_size(self, bsg_service):
        """(1/delta)^2 (1/alpha)^power log2 n, rounded up"""
        assert bsg_service.sample_size(0.5, 0.5, 1024, 2) == 4 * 4 * 10

    def test_from_pairs(self):
        G = BipartiteGraph.from_pairs(3, 2, [(0, 1), (2, 0)])
        assert G.edge_count == 2
        assert G.adjacency[2, 0]


# ============== Extraction Tests ==============
class TestExtract:
    """Subsets with a certified sumset bound"""

    def test_bound_holds(self, bsg_service, rng):
        A, B, S = random_triple(rng, 40, 200)
        G = BipartiteGraph(solution_matrix(A, B, S))
        alpha = G.edge_count / (len(A) * len(B))
        result = bsg_service.bsg_extract(A, B, G, alpha, t=len(S) / 40)
        assert result.bound_holds
        assert result.sumset == block_sumset(A, B, result.left, result.right)
        assert result.bound == pytest.approx(EXTRACT_CONSTANT * result.sum_count ** 3 / (alpha ** 5 * 1600))

    def test_too_many_sums(self, bsg_service):
        A = PointSet.from_values(range(4))
        G = BipartiteGraph(np.ones((4, 4), dtype=bool))
        with pytest.raises(PreconditionError):
            bsg_service.bsg_extract(A, A, G, 0.5, t=0.5)

    def test_shape_mismatch(self, bsg_service):
        A = PointSet.from_values(range(4))
        with pytest.raises(DimensionMismatchError):
            bsg_service.bsg_extract(A, A, BipartiteGraph(np.ones((3, 4))), 0.5, t=4)


# ============== Cover Tests ==============
class TestCover:
    """Biclique covers and their audit"""

    @pytest.mark.parametrize("alpha", [1 / 2, 1 / 4, 1 / 8])
    @pytest.mark.parametrize("variant", ["det", "rand"])
    def test_cover_passes_audit(self, bsg_service, rng, alpha, variant):
        """Exact coverage, short remainder, bounded k and exact block sumsets"""
        for _ in range(5):
            n = int(rng.integers(8, 65))
            A, B, S = random_triple(rng, n, 4 * n)
            cover = bsg_service.bsg_cover(A, B, S, alpha, variant, verify=(variant == "rand"))
            audit = bsg_service.verify_cover(cover, A, B, S)
            assert audit.passed, audit.failures
            assert len(cover.remainder) <= alpha * len(A) * len(B)

    def test_remainder_pairs_are_solutions(self, bsg_service, rng):
        A, B, S = random_triple(rng, 32, 100)
        cover = bsg_service.bsg_cover(A, B, S, 0.25, "det")
        for ia, ib in cover.remainder.tolist():
            assert (A.points[ia][0] + B.points[ib][0],) in S

    def test_no_solutions_gives_empty_cover(self, bsg_service):
        A = PointSet.from_values([0, 1, 2])
        S = PointSet.from_values([100])
        cover = bsg_service.bsg_cover(A, A, S, 0.5, "det")
        assert cover.k == 0
        assert len(cover.remainder) == 0

    def test_tiny_alpha_uses_single_block(self, bsg_service):
        """When the block bound exceeds |A||B| the whole product is one biclique"""
        A = PointSet.from_values([0, 1, 2, 3])
        S = PointSet.from_values(range(7))
        cover = bsg_service.bsg_cover(A, A, S, 1 / 8, "det")
        assert cover.k == 1
        assert cover.stats['trivial'] == 1
        assert bsg_service.verify_cover(cover, A, A, S).passed

    def test_single_block_records_plain_edge_density(self, bsg_service):
        """Four of the sixteen pairs sum to 3; the A x B block keeps that sparse density"""
        A = PointSet.from_values([0, 1, 2, 3])
        S = PointSet.from_values([3])
        cover = bsg_service.bsg_cover(A, A, S, 1 / 8, "det")
        assert cover.stats['trivial'] == 1
        assert cover.k == 1
        block = cover.pairs[0]
        assert block.alpha == pytest.approx(0.25)
        assert len(block.sumset) == 7
        assert len(cover.remainder) == 0

    def test_audit_catches_corruption(self, bsg_service, rng):
        """Dropping a block leaves solution pairs uncovered"""
        A, B, S = random_triple(rng, 32, 64)
        cover = bsg_service.bsg_cover(A, B, S, 0.125, "det")
        assert cover.k >= 1
        cover.pairs.pop(0)
        audit = bsg_service.verify_cover(cover, A, B, S)
        assert not audit.passed
        assert audit.counterexample is not None

    def test_describe_lists_blocks(self, bsg_service, rng):
        A, B, S = random_triple(rng, 16, 40)
        cover = bsg_service.bsg_cover(A, B, S, 0.25, "det")
        text = cover.describe()
        assert text.startswith(f"cover k={cover.k}")
        assert text.count("block ") == cover.k

    def test_bad_variant(self, bsg_service):
        A = PointSet.from_values([1])
        with pytest.raises(ValueError):
            bsg_service.bsg_cover(A, A, A, 0.5, "magic")

    def test_solution_matrix_dimension(self):
        with pytest.raises(DimensionMismatchError):
            solution_matrix(PointSet.from_values([1]), PointSet([(1, 1)], dim=2, universe=2), PointSet.from_values([1]))
