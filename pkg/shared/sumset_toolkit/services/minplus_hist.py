"""
MinPlus Service - Bounded monotone (min,+) convolution and histogram indexing

Both problems reduce to the lower and upper envelope of a sumset A + B of
connected monotone planar sets, found by a simultaneous binary search whose
probes are answered by the monotone 3SUM+ solver.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatchError, PreconditionError
from .core_model import PointSet, WorkCounter, check_monotone, is_connected
from .solvers import SolverService

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MonotoneSeq:
    """Non-decreasing integer sequence with values in [0, bound)"""
    values: Tuple[int, ...]
    bound: int

    @classmethod
    def of(cls, values: Sequence[int], c: Optional[int] = None) -> "MonotoneSeq":
        values = tuple(int(v) for v in values)
        if not values:
            raise PreconditionError("sequences must be non-empty")
        if any(b < a for a, b in zip(values, values[1:])):
            raise PreconditionError("sequence is not non-decreasing")
        bound = c * len(values) if c is not None else values[-1] + 1
        if values[0] < 0 or values[-1] >= max(bound, 1):
            raise PreconditionError(f"sequence values must lie in [0, {bound})")
        return cls(values, bound)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SumsetBoundary:
    """lower[k] and upper[k] are the extreme y values of A + B at x = x_start + k"""
    x_start: int
    lower: np.ndarray
    upper: np.ndarray

    def at(self, x: int) -> Tuple[int, int]:
        k = x - self.x_start
        return int(self.lower[k]), int(self.upper[k])


@dataclass(frozen=True)
class HistIndex:
    """Fewest and most ones over all substrings of each length k = 0..n"""
    n: int
    min_ones: np.ndarray
    max_ones: np.ndarray


def minplus_naive(a: Sequence[int], b: Sequence[int]) -> List[int]:
    """s_k = min_i (a_i + b_(k-i)), one vector pass per entry of a"""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if not a.size or not b.size:
        return []
    out = np.full(a.size + b.size - 1, np.iinfo(np.int64).max, dtype=np.int64)
    for i, value in enumerate(a.tolist()):
        np.minimum(out[i:i + b.size], value + b, out=out[i:i + b.size])
    return out.tolist()


def staircase(seq: MonotoneSeq) -> PointSet:
    """Column i holds y in [a_i, a_(i+1)]; the last column is the single point a_(n-1)"""
    values = np.asarray(seq.values, dtype=np.int64)
    tops = np.append(values[1:], values[-1])
    heights = tops - values + 1
    xs = np.repeat(np.arange(values.size), heights)
    ys = np.repeat(values, heights) + (np.arange(int(heights.sum())) - np.repeat(np.cumsum(heights) - heights, heights))
    return PointSet.from_array(np.stack((xs, ys), axis=1), dim=2)


def prefix_counts(text: str, alphabet: int) -> np.ndarray:
    """(n+1, alphabet) array of symbol counts in every prefix"""
    symbols = np.fromiter((int(ch) for ch in text), dtype=np.int64, count=len(text))
    counts = np.zeros((len(text) + 1, alphabet), dtype=np.int64)
    if len(text):
        counts[1:] = np.eye(alphabet, dtype=np.int64)[symbols].cumsum(axis=0)
    return counts


def check_digits(text: str, alphabet: int) -> None:
    bad = [ch for ch in set(text) if not ch.isdigit() or int(ch) >= alphabet]
    if bad:
        raise PreconditionError(f"string holds symbols {sorted(bad)} outside [0, {alphabet})")


class MinPlusService:
    """Service for sumset envelopes, (min,+) convolution and histogram indexing"""

    def __init__(self, solver: SolverService):
        self.solver = solver

    def boundary_of_sumset(self, A: PointSet, B: PointSet, work: Optional[WorkCounter] = None) -> SumsetBoundary:
        """Envelopes of A + B through O(log n) rounds of two monotone 3SUM+ probes each.

        Every k keeps a dyadic block known to hold its lower (upper) envelope
        value. A probe at the block midpoint is either in A + B, or the column
        of A + B at k (an interval) lies wholly on one side, which one element
        of that column decides.
        """
        for label, s in (("A", A), ("B", B)):
            if s.dim != 2:
                raise DimensionMismatchError(f"{label} must be planar")
            if not len(s):
                raise PreconditionError(f"{label} is empty")
            check_monotone(s, label)
            if not is_connected(s):
                raise PreconditionError(f"{label} is not connected")
        work = work if work is not None else WorkCounter()
        a, b = A.array, B.array
        ks = np.arange(int(a[0, 0] + b[0, 0]), int(a[-1, 0] + b[-1, 0]) + 1, dtype=np.int64)

        a_cols, a_first = np.unique(a[:, 0], return_index=True)
        b_cols, b_first = np.unique(b[:, 0], return_index=True)
        column = np.maximum(a_cols[0], ks - b_cols[-1])
        sample = a[a_first[column - a_cols[0]], 1] + b[b_first[ks - column - b_cols[0]], 1]

        top = int(a[:, 1].max() + b[:, 1].max())
        width = 1 << top.bit_length()
        low = np.zeros(ks.size, dtype=np.int64)
        high = np.zeros(ks.size, dtype=np.int64)
        rounds = 0
        while width > 1:
            half = width // 2
            probe = low + half - 1
            inside = self._probe(A, B, ks, probe, work)
            low = np.where(inside | (sample < probe), low, low + half)

            probe = high + half
            inside = self._probe(A, B, ks, probe, work)
            high = np.where(inside | (sample > probe), high + half, high)
            width = half
            rounds += 1
        logger.debug(f"Boundary search finished after {rounds} rounds over {ks.size} columns")
        return SumsetBoundary(int(ks[0]), low, high)

    def _probe(self, A: PointSet, B: PointSet, ks: np.ndarray, ys: np.ndarray, work: WorkCounter) -> np.ndarray:
        """(k, y_k) in A + B for every k; the probe set is monotone by construction"""
        S = PointSet.from_array(np.stack((ks, ys), axis=1), dim=2)
        hits = self.solver.threesum_monotone(A, B, S, work=work).hits
        return np.isin(ks, hits.array[:, 0])

    def minplus_bounded_monotone(self, a: Sequence[int], b: Sequence[int], c: Optional[int] = None,
                                 work: Optional[WorkCounter] = None) -> List[int]:
        """s_k is the lowest y of staircase(a) + staircase(b) at x = k"""
        seq_a = a if isinstance(a, MonotoneSeq) else MonotoneSeq.of(a, c)
        seq_b = b if isinstance(b, MonotoneSeq) else MonotoneSeq.of(b, c)
        boundary = self.boundary_of_sumset(staircase(seq_a), staircase(seq_b), work)
        return boundary.lower.tolist()

    def minplus_bounded_differences(self, a: Sequence[int], b: Sequence[int], c: int,
                                    work: Optional[WorkCounter] = None) -> List[int]:
        """Add c*i to make both inputs monotone, convolve, subtract c*k"""
        if c < 0:
            raise PreconditionError("difference bound must be non-negative")
        va = np.asarray(a, dtype=np.int64)
        vb = np.asarray(b, dtype=np.int64)
        if not va.size or not vb.size:
            raise PreconditionError("sequences must be non-empty")
        for label, v in (("a", va), ("b", vb)):
            if v.size > 1 and int(np.abs(np.diff(v)).max()) > c:
                raise PreconditionError(f"consecutive entries of {label} differ by more than {c}")
        ta = va + c * np.arange(va.size)
        tb = vb + c * np.arange(vb.size)
        base_a, base_b = int(ta.min()), int(tb.min())
        shifted = self.minplus_bounded_monotone((ta - base_a).tolist(), (tb - base_b).tolist(), work=work)
        k = np.arange(len(shifted), dtype=np.int64)
        return (np.asarray(shifted, dtype=np.int64) + base_a + base_b - c * k).tolist()

    def histindex_build_binary(self, text: str, work: Optional[WorkCounter] = None) -> HistIndex:
        """Envelope of prefix-count staircase A plus its reflection (n0, n1) - A"""
        check_digits(text, 2)
        n = len(text)
        if not n:
            zero = np.zeros(1, dtype=np.int64)
            return HistIndex(0, zero, zero.copy())
        prefix = prefix_counts(text, 2)
        n0, n1 = (int(v) for v in prefix[-1])
        A = PointSet.from_array(prefix, dim=2)
        B = PointSet.from_array(prefix[-1] - prefix, dim=2)
        boundary = self.boundary_of_sumset(A, B, work)

        # zero-count q sits at x = n0 + q
        offset = n0 - boundary.x_start
        lo = boundary.lower[offset:offset + n0 + 1] - n1
        up = boundary.upper[offset:offset + n0 + 1] - n1
        lo[0] = 0
        q = np.arange(n0 + 1, dtype=np.int64)
        k = np.arange(n + 1, dtype=np.int64)
        q_max = np.searchsorted(q + lo, k, side="right") - 1
        q_min = np.searchsorted(q + up, k, side="left")
        return HistIndex(n, k - q_max, k - q_min)

    @staticmethod
    def histindex_query(index: HistIndex, zeros: int, ones: int) -> bool:
        """Some substring holds exactly `zeros` 0s and `ones` 1s"""
        k = zeros + ones
        if zeros < 0 or ones < 0 or k > index.n:
            return False
        return bool(index.min_ones[k] <= ones <= index.max_ones[k])

    def hist_offline_queries(self, text: str, queries: Sequence[Sequence[int]], alphabet: Optional[int] = None,
                             work: Optional[WorkCounter] = None) -> List[bool]:
        """Batch answers via prefix vectors A, C - A and S = queries + C"""
        sigma = alphabet or (max((int(ch) for ch in text), default=0) + 1)
        check_digits(text, sigma)
        for qv in queries:
            if len(qv) != sigma:
                raise DimensionMismatchError(f"query {tuple(qv)} has {len(qv)} entries, alphabet has {sigma}")
        if not len(queries):
            return []
        vectors = np.array([list(qv) for qv in queries], dtype=np.int64).reshape(len(queries), sigma)
        answers = np.zeros(len(vectors), dtype=bool)
        answers[(vectors == 0).all(axis=1)] = True
        valid = (vectors >= 0).all(axis=1) & (vectors.sum(axis=1) <= len(text)) & ~answers
        if not valid.any():
            return answers.tolist()

        prefix = prefix_counts(text, sigma)
        total = prefix[-1]
        A = PointSet.from_array(prefix, dim=sigma)
        B = PointSet.from_array(total - prefix, dim=sigma)
        S = PointSet.from_array(vectors[valid] + total, dim=sigma)
        hits = self.solver.threesum_monotone_offline(A, B, S, work=work).hits
        rows = np.flatnonzero(valid)
        answers[rows] = [tuple(v) in hits for v in (vectors[rows] + total).tolist()]
        return answers.tolist()


def substring_histograms(text: str, alphabet: int) -> set:
    """Count vectors of every substring, the empty one included"""
    prefix = prefix_counts(text, alphabet)
    seen = {tuple([0] * alphabet)}
    for i in range(len(text)):
        seen.update(map(tuple, (prefix[i + 1:] - prefix[i]).tolist()))
    return seen
