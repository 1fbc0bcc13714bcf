"""
BSG Service - Graph Lemma, subset extraction and the iterated biclique cover

The cover splits every pair (a, b) with a + b in S into a few bicliques
A_i x B_i with small sumsets plus a short explicit remainder list.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ConstructionError, DimensionMismatchError, PreconditionError
from ..settings import Settings
from .core_model import PointSet, WorkCounter, encode_points

logger = logging.getLogger(__name__)

# Constants from the triple-marking argument: 64 * 2048
EXTRACT_CONSTANT = 131072


@dataclass
class BipartiteGraph:
    """Dense adjacency over index pairs of A x B"""
    adjacency: np.ndarray

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=bool)
        if self.adjacency.ndim != 2:
            raise ValueError("adjacency must be a 2D matrix")

    @classmethod
    def from_pairs(cls, left_size: int, right_size: int, pairs) -> "BipartiteGraph":
        adjacency = np.zeros((left_size, right_size), dtype=bool)
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        adjacency[pairs[:, 0], pairs[:, 1]] = True
        return cls(adjacency)

    @property
    def left_size(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def right_size(self) -> int:
        return int(self.adjacency.shape[1])

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum())


@dataclass
class GraphLemmaResult:
    left: np.ndarray
    right: np.ndarray
    alpha: float
    stats: Dict[str, int] = field(default_factory=dict)


@dataclass
class ExtractResult:
    left: np.ndarray
    right: np.ndarray
    sumset: PointSet
    sum_count: int
    bound: float
    bound_holds: bool


@dataclass
class BicliqueBlock:
    """A_i x B_i as index arrays into A and B, with T_i = A_i + B_i"""
    left: np.ndarray
    right: np.ndarray
    sumset: PointSet
    alpha: float


@dataclass
class BSGCover:
    pairs: List[BicliqueBlock]
    remainder: np.ndarray
    left: PointSet
    right: PointSet
    alpha: float
    n_hat: float
    t: float
    variant: str
    stats: Dict[str, float] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.pairs)

    def describe(self) -> str:
        lines = [f"cover k={self.k} remainder={len(self.remainder)} alpha={self.alpha:g} "
                 f"n_hat={self.n_hat:.2f} t={self.t:.3f} variant={self.variant}"]
        for i, block in enumerate(self.pairs):
            lines.append(f"block {i} alpha_i={block.alpha:.4f} |A_i|={block.left.size} "
                         f"|B_i|={block.right.size} |T_i|={len(block.sumset)}")
            lines.append("  A_i " + " ".join(_fmt(self.left.points[j]) for j in block.left.tolist()))
            lines.append("  B_i " + " ".join(_fmt(self.right.points[j]) for j in block.right.tolist()))
        lines.append("remainder")
        for ia, ib in self.remainder.tolist():
            lines.append(f"  {_fmt(self.left.points[ia])} {_fmt(self.right.points[ib])}")
        return "\n".join(lines)


@dataclass
class CoverAudit:
    passed: bool
    failures: List[str]
    counterexample: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]] = None
    failed_block: Optional[int] = None
    stats: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            'passed': self.passed,
            'failures': self.failures,
            'counterexample': self.counterexample,
            'failed_block': self.failed_block,
            'stats': self.stats,
        }


def _fmt(point) -> str:
    return "(" + ",".join(str(c) for c in point) + ")"


def count_length3_paths(G: BipartiteGraph) -> np.ndarray:
    """Number of paths a - b - a2 - b2 for every (a, b2), exact integers"""
    X = G.adjacency.astype(np.int64)
    return X @ X.T @ X


def sum_radix(*sets: PointSet) -> int:
    """Radix that keeps every coordinate of a pairwise sum below itself"""
    top = 0
    for s in sets:
        if len(s):
            top += int(s.array.max())
    return max(top + 1, 2)


def solution_matrix(A: PointSet, B: PointSet, S: PointSet) -> np.ndarray:
    """G[a, b] = (a + b in S)"""
    if not (A.dim == B.dim == S.dim):
        raise DimensionMismatchError("A, B and S must share a dimension")
    radix = max(sum_radix(A, B), int(S.array.max()) + 1 if len(S) else 1)
    ka = encode_points(A.array, radix)
    kb = encode_points(B.array, radix)
    ks = encode_points(S.array, radix)
    return np.isin(ka[:, None] + kb[None, :], ks)


def block_sumset(A: PointSet, B: PointSet, left: np.ndarray, right: np.ndarray) -> PointSet:
    """Brute-force A[left] + B[right]"""
    sums = (A.array[left][:, None, :] + B.array[right][None, :, :]).reshape(-1, A.dim)
    return PointSet.from_array(sums, universe=A.universe + B.universe - 1, dim=A.dim)


class BSGService:
    """Service for Graph Lemma subsets and biclique covers"""

    def __init__(self, settings: Optional[Settings] = None, rng: Optional[np.random.Generator] = None):
        self.settings = settings or Settings()
        self.rng = rng if rng is not None else np.random.default_rng(self.settings.seed)

    @staticmethod
    def _check_lemma_input(G: BipartiteGraph, alpha: float) -> None:
        if not 0 < alpha <= 1:
            raise PreconditionError(f"alpha must lie in (0, 1], got {alpha}")
        need = alpha * G.left_size * G.right_size
        if G.left_size == 0 or G.right_size == 0 or G.edge_count < need * (1 - 1e-9):
            raise PreconditionError(f"graph has {G.edge_count} edges, the lemma needs at least {need:g}")

    def graph_lemma_det(self, G: BipartiteGraph, alpha: float, work: Optional[WorkCounter] = None) -> GraphLemmaResult:
        """Exhaustive Graph Lemma with exact degree and codegree counts"""
        self._check_lemma_input(G, alpha)
        X = G.adjacency
        n_a, n_b = X.shape
        Xf = X.astype(np.float64)

        a0 = X.sum(axis=1) >= alpha * n_b / 2
        codegree = Xf @ Xf.T
        bad = (codegree <= alpha ** 3 * n_b / 2048) & a0[:, None] & a0[None, :]
        members = (X & a0[:, None]).astype(np.float64)
        bad_degree = bad.astype(np.float64) @ members
        star_size = members.sum(axis=0)
        bad_size = (bad_degree * members).sum(axis=0)
        if work is not None:
            work.add_bsg(2 * n_a * n_a * n_b)

        passing = np.flatnonzero((star_size >= alpha * n_a / 4)
                                 & (bad_size <= alpha ** 2 * star_size * n_a / 256))
        if not passing.size:
            raise ConstructionError("no vertex b* passes the codegree test")
        b_star = int(passing[0])

        star = members[:, b_star] > 0
        left = np.flatnonzero(star & (bad_degree[:, b_star] <= alpha ** 2 * n_a / 64))
        right = np.flatnonzero(X[left].sum(axis=0) >= alpha * left.size / 4)
        if not left.size or not right.size:
            raise ConstructionError(f"Graph Lemma produced an empty side at b*={b_star}")
        return GraphLemmaResult(left, right, alpha, {'b_star': b_star, 'candidates': int(passing.size)})

    def sample_size(self, alpha: float, delta: float, n: int, power: int) -> int:
        """ceil((1/delta)^2 (1/alpha)^power log2 N)"""
        return math.ceil((1 / delta) ** 2 * (1 / alpha) ** power * max(math.log2(max(n, 2)), 1.0))

    def _sample(self, population: int, size: int, rng: np.random.Generator) -> np.ndarray:
        if population <= self.settings.sample_threshold or size >= population:
            return np.arange(population)
        return np.sort(rng.choice(population, size=size, replace=False))

    def graph_lemma_rand(self, G: BipartiteGraph, alpha: float, delta: Optional[float] = None,
                         rng: Optional[np.random.Generator] = None,
                         work: Optional[WorkCounter] = None) -> GraphLemmaResult:
        """Graph Lemma with sampled degree and codegree estimates and a random b*"""
        self._check_lemma_input(G, alpha)
        delta = delta or self.settings.sampling_delta
        rng = rng if rng is not None else self.rng
        X = G.adjacency
        n_a, n_b = X.shape
        n = max(n_a, n_b)
        probes = 0

        r1 = self._sample(n_b, self.sample_size(alpha, delta, n, 1), rng)
        degree = X[:, r1].sum(axis=1) * (n_b / r1.size)
        a0 = np.flatnonzero(degree >= alpha * n_b / 2)
        probes += n_a * r1.size

        r5 = self._sample(n_b, self.sample_size(alpha, delta, n, 3), rng)
        near = X[:, r5].astype(np.int64)
        scale5 = n_b / r5.size
        bad_threshold = alpha ** 3 * n_b / 2048

        cap = math.ceil(self.settings.graph_lemma_iteration_constant / alpha * max(math.log2(max(n, 2)), 1.0))
        for attempt in range(1, cap + 1):
            b_star = int(rng.integers(n_b))
            star = a0[X[a0, b_star]]
            m = star.size
            if m < alpha * n_a / 4:
                continue

            pair_count = self.sample_size(alpha, delta, n, 2)
            if m * m <= self.settings.sample_threshold or pair_count >= m * m:
                codegree = (near[star] @ near[star].T) * scale5
                bad_fraction = float((codegree <= bad_threshold).mean())
            else:
                i1 = star[rng.integers(m, size=pair_count)]
                i2 = star[rng.integers(m, size=pair_count)]
                codegree = (near[i1] * near[i2]).sum(axis=1) * scale5
                bad_fraction = float((codegree <= bad_threshold).mean())
            probes += min(m * m, pair_count) * r5.size
            if bad_fraction * m * m > alpha ** 2 * m * n_a / 256:
                continue

            r7 = self._sample(m, self.sample_size(alpha, delta, n, 2), rng)
            codegree = (near[star] @ near[star[r7]].T) * scale5
            bad_degree = (codegree <= bad_threshold).sum(axis=1) * (m / r7.size)
            left = star[bad_degree <= alpha ** 2 * n_a / 64]
            probes += m * r7.size * r5.size
            if not left.size:
                continue

            r8 = self._sample(left.size, math.ceil((1 / delta) * (1 / alpha) * max(math.log2(max(n, 2)), 1.0)), rng)
            right_degree = X[left[r8]].sum(axis=0) * (left.size / r8.size)
            right = np.flatnonzero(right_degree >= alpha * left.size / 4)
            probes += r8.size * n_b
            if not right.size:
                continue

            if work is not None:
                work.add_bsg(probes)
            return GraphLemmaResult(left, right, alpha, {'b_star': b_star, 'attempts': attempt})

        if work is not None:
            work.add_bsg(probes)
        raise ConstructionError(f"no b* accepted after {cap} random attempts (alpha={alpha:g})")

    def graph_lemma(self, G: BipartiteGraph, alpha: float, variant: str,
                    rng: Optional[np.random.Generator] = None,
                    work: Optional[WorkCounter] = None) -> GraphLemmaResult:
        if variant == "det":
            return self.graph_lemma_det(G, alpha, work)
        return self.graph_lemma_rand(G, alpha, rng=rng, work=work)

    def bsg_extract(self, A: PointSet, B: PointSet, G: BipartiteGraph, alpha: float, t: float,
                    variant: str = "det", work: Optional[WorkCounter] = None) -> ExtractResult:
        """Graph Lemma subsets plus the certified bound on |A' + B'|"""
        if G.adjacency.shape != (len(A), len(B)):
            raise DimensionMismatchError("graph shape does not match A x B")
        n_hat = math.sqrt(len(A) * len(B))
        ia, ib = np.nonzero(G.adjacency)
        sums = np.unique((A.array[ia] + B.array[ib]).reshape(-1, A.dim), axis=0)
        sum_count = int(sums.shape[0])
        if sum_count > t * n_hat:
            raise PreconditionError(f"edge sums number {sum_count}, above t N = {t * n_hat:g}")

        result = self.graph_lemma(G, alpha, variant, work=work)
        sumset = block_sumset(A, B, result.left, result.right)
        if work is not None:
            work.add_bsg(result.left.size * result.right.size)
        bound = EXTRACT_CONSTANT * sum_count ** 3 / (alpha ** 5 * len(A) * len(B))
        holds = len(sumset) <= bound
        if not holds:
            logger.error(f"Sumset bound violated: |A'+B'|={len(sumset)} > {bound:g}")
        return ExtractResult(result.left, result.right, sumset, sum_count, bound, holds)

    def bsg_cover(self, A: PointSet, B: PointSet, S: PointSet, alpha: float, variant: str = "rand",
                  verify: bool = False,
                  work: Optional[WorkCounter] = None,
                  rng: Optional[np.random.Generator] = None) -> BSGCover:
        """Cover all solution pairs of A x B by bicliques plus a remainder of at most alpha N^2 pairs.

        Randomized covers are checked after each biclique and fall back to
        the deterministic lemma when the removal guarantee fails.
        """
        if not 0 < alpha <= 1:
            raise PreconditionError(f"alpha must lie in (0, 1], got {alpha}")
        if variant not in ("det", "rand"):
            raise ValueError(f"unknown cover variant {variant!r}")
        rng = rng if rng is not None else self.rng

        attempts = self.settings.las_vegas_retries if (verify and variant == "rand") else 1
        for attempt in range(1, attempts + 1):
            cover = self._build_cover(A, B, S, alpha, variant, work, rng)
            if not verify:
                return cover
            audit = self.verify_cover(cover, A, B, S)
            if audit.passed:
                cover.stats['verify_attempts'] = attempt
                return cover
            logger.warning(f"Cover audit failed on attempt {attempt}: {audit.failures}")
        if variant == "rand":
            return self._build_cover(A, B, S, alpha, "det", work, rng)
        raise ConstructionError("deterministic cover failed its audit")

    def _build_cover(self, A, B, S, alpha, variant, work, rng) -> BSGCover:
        n_a, n_b = len(A), len(B)
        n_hat_sq = n_a * n_b
        n_hat = math.sqrt(n_hat_sq)
        G = solution_matrix(A, B, S)
        if work is not None:
            work.add_bsg(n_hat_sq)
        edges = int(G.sum())
        t = len(S) / n_hat if n_hat else 0.0
        stats: Dict[str, float] = {'initial_edges': edges, 'retries': 0, 'fallbacks': 0}
        blocks: List[BicliqueBlock] = []
        limit = 64 / alpha + 1

        # More bicliques allowed than there are pairs: one A x B block covers everything.
        # This block is not extracted and carries no density guarantee; its alpha is the edge density of G.
        if edges and limit > n_hat_sq and edges > alpha * n_hat_sq:
            left, right = np.arange(n_a), np.arange(n_b)
            blocks.append(BicliqueBlock(left, right, block_sumset(A, B, left, right), edges / n_hat_sq))
            if work is not None:
                work.add_bsg(n_hat_sq)
            G[:] = False
            stats['trivial'] = 1
            logger.debug("Tiny alpha, using the single biclique A x B")

        while G.sum() > alpha * n_hat_sq:
            if len(blocks) >= limit:
                raise ConstructionError(f"cover exceeded {limit:g} bicliques")
            current = int(G.sum())
            alpha_i = current / n_hat_sq
            graph_i = BipartiteGraph(G)
            chosen = None
            tries = self.settings.las_vegas_retries if variant == "rand" else 1
            for _ in range(tries):
                try:
                    result = self.graph_lemma(graph_i, alpha_i, variant, rng=rng, work=work)
                except ConstructionError:
                    stats['retries'] += 1
                    continue
                removed = int(G[np.ix_(result.left, result.right)].sum())
                if variant == "det" or removed >= alpha_i ** 2 * n_hat_sq / 64:
                    chosen = result
                    break
                stats['retries'] += 1
            if chosen is None:
                stats['fallbacks'] += 1
                chosen = self.graph_lemma_det(graph_i, alpha_i, work)

            sumset = block_sumset(A, B, chosen.left, chosen.right)
            if work is not None:
                work.add_bsg(chosen.left.size * chosen.right.size)
            G[np.ix_(chosen.left, chosen.right)] = False
            blocks.append(BicliqueBlock(chosen.left, chosen.right, sumset, alpha_i))
            logger.debug(f"Biclique {len(blocks)}: |A_i|={chosen.left.size} |B_i|={chosen.right.size} "
                         f"|T_i|={len(sumset)} removed {current - int(G.sum())} edges")

        remainder = np.argwhere(G).astype(np.int64).reshape(-1, 2)
        stats['left_total'] = int(sum(b.left.size for b in blocks))
        return BSGCover(blocks, remainder, A, B, alpha, n_hat, t, variant, stats)

    def verify_cover(self, cover: BSGCover, A: PointSet, B: PointSet, S: PointSet) -> CoverAudit:
        """Recheck coverage, remainder, sumsets and size bounds by brute force"""
        failures: List[str] = []
        counterexample = None
        failed_block = None
        n_hat_sq = len(A) * len(B)
        solutions = solution_matrix(A, B, S)

        covered = np.zeros_like(solutions)
        for block in cover.pairs:
            covered[np.ix_(block.left, block.right)] = True
        in_remainder = np.zeros_like(solutions)
        if len(cover.remainder):
            in_remainder[cover.remainder[:, 0], cover.remainder[:, 1]] = True

        missing = np.argwhere(solutions & ~covered & ~in_remainder)
        if missing.size:
            ia, ib = missing[0].tolist()
            counterexample = (A.points[ia], B.points[ib])
            failures.append(f"pair {counterexample} with sum in S is not covered")
        spurious = np.argwhere(in_remainder & ~solutions)
        if spurious.size:
            ia, ib = spurious[0].tolist()
            counterexample = counterexample or (A.points[ia], B.points[ib])
            failures.append(f"remainder pair {(A.points[ia], B.points[ib])} has no sum in S")
        if len(cover.remainder) > cover.alpha * n_hat_sq:
            failures.append(f"remainder holds {len(cover.remainder)} pairs, bound {cover.alpha * n_hat_sq:g}")

        limit = 64 / cover.alpha + 1
        if cover.k > limit:
            failures.append(f"k={cover.k} exceeds {limit:g}")

        ia, ib = np.nonzero(solutions)
        sum_count = int(np.unique(A.array[ia] + B.array[ib], axis=0).shape[0]) if ia.size else 0
        for i, block in enumerate(cover.pairs):
            if block_sumset(A, B, block.left, block.right) != block.sumset:
                failed_block = i if failed_block is None else failed_block
                failures.append(f"T_{i} differs from A_{i} + B_{i}")
            bound = EXTRACT_CONSTANT * sum_count ** 3 / (block.alpha ** 5 * n_hat_sq) if n_hat_sq else 0
            if len(block.sumset) > bound:
                failed_block = i if failed_block is None else failed_block
                failures.append(f"|T_{i}|={len(block.sumset)} exceeds {bound:g}")

        left_total = int(sum(b.left.size for b in cover.pairs))
        stats = {
            'k': cover.k,
            'remainder': int(len(cover.remainder)),
            'left_total': left_total,
            'left_total_reference': 16 * len(A) * math.log(1 / cover.alpha) if cover.alpha < 1 else 0.0,
            'sumset_cost': int(sum(len(b.sumset) for b in cover.pairs)),
        }
        return CoverAudit(not failures, failures, counterexample, failed_block, stats)
