"""
Online Service - Sumset membership queries and 3SUM+ over preprocessed universes

Online structures bucket every cell pair (a*, b*) by a* + b*. Cells whose
bucket holds more than P pairs get the exact list of their sums computed up
front; every other cell is answered by scanning its bucket at query time.
Preprocessed universes store one biclique cover of A0 x B0 and answer
subset queries from its remainder list and its stored sumsets.
"""

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatchError, PreconditionError, SubsetViolationError
from ..settings import Settings
from .bsg import BSGCover
from .core_model import (
    CellIndex,
    GridConfig,
    PointSet,
    WorkCounter,
    align_decompose,
    encode_points,
    even_side,
    index_cells,
)
from .minplus_hist import check_digits, prefix_counts
from .solvers import KeyIndex, SolverService, ThreeSumResult, key_radix
from .sumset_fft import HashFamily

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OnlineParams:
    """Tuned grid side and popularity threshold, with the exponents they predict"""
    ell: int
    P: float
    Q: float
    delta: float
    query_exponent: float
    preprocessing_exponent: float

    def to_dict(self) -> Dict[str, float]:
        return {
            'ell': self.ell,
            'P': round(self.P, 4),
            'Q': round(self.Q, 4),
            'delta': round(self.delta, 6),
            'query_exponent': round(self.query_exponent, 6),
            'preprocessing_exponent': round(self.preprocessing_exponent, 6),
        }


def balanced_delta(d: int, a_only_monotone: bool = False) -> float:
    """delta equating preprocessing with the cost of n queries"""
    return 1 / (d + 9) if a_only_monotone else 2 / (d + 19)


def online_alpha(K_A: int, K_B: int, M_A: int, M_B: int, L: int, P: float) -> float:
    """1/alpha = min{[(M_A M_B P^3) / (K_A K_B L)]^(1/7), (K_B M_A M_B)^(1/6)}, at least 1"""
    first = (M_A * M_B * P ** 3 / max(K_A * K_B * L, 1)) ** (1 / 7)
    second = (K_B * M_A * M_B) ** (1 / 6)
    return 1 / max(1.0, min(first, second))


@dataclass
class _PairStruct:
    """Buckets and high-popularity list for one pair of aligned parts"""
    shift: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ia: CellIndex
    ib: CellIndex
    cell_radix: int
    bucket_keys: np.ndarray
    bucket_starts: np.ndarray
    popularity: np.ndarray
    bucket_pairs: np.ndarray
    high_cells: np.ndarray
    high_list: np.ndarray
    a_index: KeyIndex
    b_index: KeyIndex
    high_index: KeyIndex


@dataclass
class OnlineStruct:
    """One bucket structure per pair of aligned parts of A and B; queries OR their answers"""
    grid: GridConfig
    P: float
    alpha: Optional[float]
    parts: List[_PairStruct]
    dim: int
    stats: Dict[str, float] = field(default_factory=dict)

    @property
    def high_list_size(self) -> int:
        return int(sum(len(p.high_list) for p in self.parts))

    @property
    def bucket_count(self) -> int:
        return int(sum(len(p.bucket_keys) for p in self.parts))


@dataclass
class PreprocUniverse:
    """Stored cover of A0 x B0 (against S0, or against the popular sums when S0 is absent)"""
    A0: PointSet
    B0: PointSet
    S0: Optional[PointSet]
    cover: BSGCover
    alpha: float
    families: Optional[List[HashFamily]] = None
    t: Optional[float] = None
    threshold: Optional[float] = None
    bucket_sums: Optional[np.ndarray] = None
    bucket_starts: Optional[np.ndarray] = None
    bucket_counts: Optional[np.ndarray] = None
    bucket_pairs: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.cover.k

    @property
    def stored_sumset_size(self) -> int:
        return int(sum(len(block.sumset) for block in self.cover.pairs))

    @property
    def query_budget(self) -> int:
        """|R| + sum |T_i|, the pair and cell work a query batch is charged against"""
        return int(len(self.cover.remainder)) + self.stored_sumset_size

    def describe(self) -> Dict[str, object]:
        return {
            'k': self.k,
            'remainder': int(len(self.cover.remainder)),
            'stored_sumset_size': self.stored_sumset_size,
            'alpha': self.alpha,
            't': self.t,
            'threshold': self.threshold,
            'deterministic': self.families is not None,
        }


class OnlineHistogram:
    """Histogram queries on a fixed string through an online sumset structure"""

    def __init__(self, service: "OnlineService", text: str, alphabet: int, struct: Optional[OnlineStruct]):
        self.service = service
        self.text = text
        self.alphabet = alphabet
        self.struct = struct
        self.total = prefix_counts(text, alphabet)[-1]

    def query(self, vector: Sequence[int]) -> bool:
        """Some substring has exactly these symbol counts"""
        v = np.asarray(list(vector), dtype=np.int64)
        if v.shape != (self.alphabet,):
            raise DimensionMismatchError(f"query {tuple(vector)} has {v.size} entries, alphabet has {self.alphabet}")
        if (v < 0).any() or int(v.sum()) > len(self.text):
            return False
        if not v.any():
            return True
        return self.service.query_online(self.struct, (v + self.total).tolist())


def _sorted_buckets(keys: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Group positions by key: (unique keys, starts, counts, positions ordered by key)"""
    order = np.argsort(keys, kind="stable")
    unique, starts, counts = np.unique(keys[order], return_index=True, return_counts=True)
    return unique, starts.astype(np.int64), counts.astype(np.int64), order


class OnlineService:
    """Service for online membership structures and preprocessed-universe 3SUM+"""

    def __init__(self, settings: Optional[Settings] = None, solver: Optional[SolverService] = None):
        self.settings = settings or Settings()
        self.solver = solver or SolverService(self.settings)

    # ---------- online structures ----------

    def tune_online(self, n: int, d: int, delta: Optional[float] = None,
                    a_only_monotone: bool = False) -> OnlineParams:
        """l = n^(delta/2), Q = n^(1/3 - delta(d+13)/6); only-A-monotone uses l = n^delta, Q = n^(1/3 - delta(d+6)/3)"""
        if n < 2:
            raise PreconditionError("tuning needs n >= 2")
        delta = balanced_delta(d, a_only_monotone) if delta is None else delta
        if not 0 <= delta < 1:
            raise PreconditionError(f"delta must lie in [0, 1), got {delta}")
        if a_only_monotone:
            ell_exp, q_exp = delta, 1 / 3 - delta * (d + 6) / 3
        else:
            ell_exp, q_exp = delta / 2, 1 / 3 - delta * (d + 13) / 6
        Q = n ** q_exp
        if Q < 1:
            raise PreconditionError(f"delta={delta:g} is too large for d={d}: Q = {Q:.4f} < 1")
        ell = even_side(max(2, math.ceil(n ** ell_exp)))
        P = max(1.0, (n / ell) / Q)
        return OnlineParams(ell, P, Q, delta, 1 - q_exp, 2 - delta)

    def build_online(self, A: PointSet, B: PointSet, ell: Optional[int] = None, P: Optional[float] = None,
                     alpha: Optional[float] = None, delta: Optional[float] = None,
                     work: Optional[WorkCounter] = None) -> OnlineStruct:
        """Buckets over all cell pairs plus the exact sums inside cells of popularity above P.

        When l or P is missing both come from tune_online on max(|A|, |B|).
        """
        if A.dim != B.dim:
            raise DimensionMismatchError(f"dimensions differ: A={A.dim} B={B.dim}")
        work = work if work is not None else WorkCounter()
        d = A.dim
        if ell is None or P is None:
            params = self.tune_online(max(len(A), len(B), 2), d, delta)
            ell = params.ell if ell is None else ell
            P = params.P if P is None else P
        if P < 1:
            raise PreconditionError(f"popularity threshold must be at least 1, got {P}")
        ell = even_side(max(2, int(ell)))
        universe = max([int(s.array.max()) + 1 for s in (A, B) if len(s)] + [1])
        grid = GridConfig(ell, universe, d)
        struct = OnlineStruct(grid, float(P), alpha, [], d)
        if not len(A) or not len(B):
            return struct

        for pa in align_decompose(A, grid):
            for pb in align_decompose(B, grid):
                shift = np.array(pa.shift, dtype=np.int64) + np.array(pb.shift, dtype=np.int64)
                struct.parts.append(self._build_pair(pa.subset.array, pb.subset.array, shift, ell, P, alpha, work))
        struct.stats = {
            'parts': len(struct.parts),
            'buckets': struct.bucket_count,
            'high_cells': int(sum(len(p.high_cells) for p in struct.parts)),
            'high_list': struct.high_list_size,
            'work': work.total,
        }
        logger.info(f"Online structure built: {struct.stats}")
        return struct

    def _build_pair(self, a: np.ndarray, b: np.ndarray, shift: np.ndarray, ell: int, P: float,
                    alpha: Optional[float], work: WorkCounter) -> _PairStruct:
        d = a.shape[1]
        ia, ib = index_cells(a, ell), index_cells(b, ell)
        left, right = np.meshgrid(np.arange(len(ia)), np.arange(len(ib)), indexing="ij")
        left, right = left.reshape(-1), right.reshape(-1)
        sum_cells = ia.cells[left] + ib.cells[right]
        cell_radix = key_radix(ia.cells, ib.cells)
        keys, starts, popularity, order = _sorted_buckets(encode_points(sum_cells, cell_radix))
        work.add_pairs(left.size)

        high = popularity > P
        high_cells = sum_cells[order[starts[high]]]
        if alpha is None:
            alpha = online_alpha(len(ia), len(ib), int(ia.counts.max()), int(ib.counts.max()), ell ** d, P)
        high_list = self.solver.sumset_in_cells(a, b, high_cells, ell, alpha, work)
        logger.debug(f"Part pair: {len(keys)} buckets, {int(high.sum())} popular, |L|={len(high_list)}")

        radix = key_radix(a, b)
        return _PairStruct(
            shift=shift, a=a, b=b, ia=ia, ib=ib, cell_radix=cell_radix,
            bucket_keys=keys, bucket_starts=starts, popularity=popularity,
            bucket_pairs=np.stack((left[order], right[order]), axis=1),
            high_cells=high_cells, high_list=high_list,
            a_index=KeyIndex(a, radix), b_index=KeyIndex(b, radix),
            high_index=KeyIndex(high_list, radix),
        )

    def query_online(self, struct: OnlineStruct, point: Sequence[int], work: Optional[WorkCounter] = None) -> bool:
        """s in A + B: bucket scan for unpopular cells, list lookup for popular ones.

        The structure is only read; pair probes and branch counts go to work.
        """
        s = np.asarray(list(point), dtype=np.int64)
        if s.shape != (struct.dim,):
            raise DimensionMismatchError(f"query has {s.size} coordinates, structure has {struct.dim}")
        work = work if work is not None else WorkCounter()
        for part in struct.parts:
            if self._query_pair(struct, part, s - part.shift, work):
                return True
        return False

    def _query_pair(self, struct: OnlineStruct, part: _PairStruct, p: np.ndarray,
                    work: WorkCounter) -> bool:
        if (p < 0).any():
            return False
        cell = p // struct.grid.side
        if (cell >= part.cell_radix).any():
            return False
        key = encode_points(cell[None, :], part.cell_radix)[0]
        pos = int(np.searchsorted(part.bucket_keys, key))
        if pos >= part.bucket_keys.size or part.bucket_keys[pos] != key:
            work.add_branch('miss')
            return False

        if part.popularity[pos] > struct.P:
            work.add_branch('high')
            return bool(part.high_index.locate(p[None, :])[0] >= 0)

        work.add_branch('low')
        start = part.bucket_starts[pos]
        for i, j in part.bucket_pairs[start:start + part.popularity[pos]].tolist():
            # scan the sparser cell, probe the other side
            if part.ia.counts[i] <= part.ib.counts[j]:
                probe = part.b_index.locate(p[None, :] - part.a[part.ia.members(i)])
            else:
                probe = part.a_index.locate(p[None, :] - part.b[part.ib.members(j)])
            work.add_pairs(probe.size)
            if (probe >= 0).any():
                return True
        return False

    def query_many(self, struct: OnlineStruct, points: Iterable[Sequence[int]],
                   work: Optional[WorkCounter] = None) -> List[bool]:
        return [self.query_online(struct, p, work) for p in points]

    def audit_online(self, struct: OnlineStruct) -> Dict[str, int]:
        """Recompute every part's popular-cell sums by brute force and diff them against the stored lists"""
        missing = spurious = 0
        for part in struct.parts:
            d = part.a.shape[1]
            sums = np.unique((part.a[:, None, :] + part.b[None, :, :]).reshape(-1, d), axis=0)
            popular = np.isin(encode_points(sums // struct.grid.side, part.cell_radix),
                              encode_points(part.high_cells, part.cell_radix))
            radix = key_radix(sums, part.high_list)
            expected = encode_points(sums[popular], radix)
            stored = encode_points(part.high_list, radix)
            missing += int((~np.isin(expected, stored)).sum())
            spurious += int((~np.isin(stored, expected)).sum())
        return {'missing': missing, 'spurious': spurious, 'high_list': struct.high_list_size}

    def hist_online(self, text: str, alphabet: Optional[int] = None, delta: Optional[float] = None,
                    work: Optional[WorkCounter] = None) -> OnlineHistogram:
        """Online structure over prefix vectors A and their reflection C - A"""
        sigma = alphabet or (max((int(ch) for ch in text), default=0) + 1)
        check_digits(text, sigma)
        if not text:
            return OnlineHistogram(self, text, sigma, None)
        prefix = prefix_counts(text, sigma)
        A = PointSet.from_array(prefix, dim=sigma)
        B = PointSet.from_array(prefix[-1] - prefix, dim=sigma)
        struct = self.build_online(A, B, delta=delta, work=work)
        return OnlineHistogram(self, text, sigma, struct)

    # ---------- preprocessed universes ----------

    @staticmethod
    def _check_universe_input(*sets: PointSet) -> None:
        for s in sets:
            if s.dim != 1:
                raise PreconditionError("preprocessed universes hold 1D sets")

    def _families(self, cover: BSGCover, deterministic: bool, work: WorkCounter) -> Optional[List[HashFamily]]:
        if not deterministic:
            return None
        return [self.solver.sumset.build_family_deterministic(block.sumset, work=work) for block in cover.pairs]

    def preproc_universe(self, A0: PointSet, B0: PointSet, S0: PointSet, alpha: Optional[float] = None,
                         deterministic: Optional[bool] = None, work: Optional[WorkCounter] = None) -> PreprocUniverse:
        """Cover A0 x B0 against S0 once; 1/alpha defaults to n^(1/7)"""
        self._check_universe_input(A0, B0, S0)
        work = work if work is not None else WorkCounter()
        n = max(len(A0), len(B0), len(S0), 2)
        alpha = alpha if alpha is not None else 1 / n ** (1 / 7)
        deterministic = self.settings.deterministic if deterministic is None else deterministic
        cover = self.solver.bsg.bsg_cover(A0, B0, S0, alpha, self.solver.variant, work=work)
        pu = PreprocUniverse(A0, B0, S0, cover, alpha, self._families(cover, deterministic, work))
        logger.info(f"Universe preprocessed: {pu.describe()}")
        return pu

    def preproc_universe_no_S(self, A0: PointSet, B0: PointSet, t: Optional[float] = None,
                              alpha: Optional[float] = None, deterministic: Optional[bool] = None,
                              work: Optional[WorkCounter] = None) -> PreprocUniverse:
        """Buckets over all of A0 + B0; the cover handles sums of popularity above n/t.

        t and 1/alpha default to n^(1/10).
        """
        self._check_universe_input(A0, B0)
        work = work if work is not None else WorkCounter()
        n = max(len(A0), len(B0), 2)
        t = t if t is not None else n ** 0.1
        alpha = alpha if alpha is not None else 1 / t
        if t <= 0:
            raise PreconditionError(f"t must be positive, got {t}")
        deterministic = self.settings.deterministic if deterministic is None else deterministic

        left, right = np.meshgrid(np.arange(len(A0)), np.arange(len(B0)), indexing="ij")
        left, right = left.reshape(-1), right.reshape(-1)
        sums = A0.array[left, 0] + B0.array[right, 0]
        work.add_pairs(sums.size)
        keys, starts, counts, order = _sorted_buckets(sums)
        threshold = n / t
        popular = keys[counts > threshold]
        S0 = PointSet.from_array(popular.reshape(-1, 1), dim=1)

        cover = self.solver.bsg.bsg_cover(A0, B0, S0, alpha, self.solver.variant, work=work)
        pu = PreprocUniverse(A0, B0, None, cover, alpha, self._families(cover, deterministic, work), t, threshold,
                             keys, starts, counts, np.stack((left[order], right[order]), axis=1))
        logger.info(f"Universe preprocessed without S0: {pu.describe()} popular={len(S0)}")
        return pu

    @staticmethod
    def _subset_mask(sub: PointSet, universe: PointSet, label: str) -> np.ndarray:
        """Rows of the universe that belong to sub"""
        values = universe.array[:, 0]
        inside = np.isin(sub.array[:, 0], values)
        if not inside.all():
            raise SubsetViolationError(f"{label} holds {int(sub.array[~inside, 0][0])}, outside its universe")
        return np.isin(values, sub.array[:, 0])

    def query_universe(self, pu: PreprocUniverse, A: PointSet, B: PointSet, S: PointSet,
                       witnesses: bool = False, work: Optional[WorkCounter] = None) -> ThreeSumResult:
        """(A + B) & S from the stored remainder and biclique sumsets"""
        self._check_universe_input(A, B, S)
        work = work if work is not None else WorkCounter()
        in_a = self._subset_mask(A, pu.A0, "A")
        in_b = self._subset_mask(B, pu.B0, "B")
        s = S.array[:, 0]
        found = np.zeros(s.size, dtype=bool)
        stats: Dict[str, object] = {'solver': 'universe', 'k': pu.k}

        if pu.S0 is not None:
            self._subset_mask(S, pu.S0, "S")
            covered = np.ones(s.size, dtype=bool)
        else:
            covered = self._scan_buckets(pu, in_a, in_b, s, found, work, stats)

        a0, b0 = pu.A0.array[:, 0], pu.B0.array[:, 0]
        if len(pu.cover.remainder) and covered.any():
            ri, rj = pu.cover.remainder[:, 0], pu.cover.remainder[:, 1]
            keep = in_a[ri] & in_b[rj]
            found |= covered & np.isin(s, a0[ri[keep]] + b0[rj[keep]])
            work.add_pairs(len(ri))

        mode = "deterministic" if pu.families is not None else self.solver.hash_mode
        for i, block in enumerate(pu.cover.pairs):
            if not covered.any():
                break
            left = block.left[in_a[block.left]]
            right = block.right[in_b[block.right]]
            if not left.size or not right.size:
                continue
            sub_a = PointSet.from_array(pu.A0.array[left], dim=1)
            sub_b = PointSet.from_array(pu.B0.array[right], dim=1)
            family = pu.families[i] if pu.families is not None else None
            sums = self.solver.sumset.sumset_via_fft(sub_a, sub_b, block.sumset, mode=mode, family=family, work=work)
            found |= covered & np.isin(s, sums.array[:, 0])

        stats['query_budget'] = pu.query_budget
        return self.solver.package_result(A, B, S, S.array[found], work, witnesses, stats)

    @staticmethod
    def _scan_buckets(pu: PreprocUniverse, in_a: np.ndarray, in_b: np.ndarray, s: np.ndarray,
                      found: np.ndarray, work: WorkCounter, stats: Dict[str, object]) -> np.ndarray:
        """Answer unpopular sums from their buckets; returns the rows left to the cover"""
        if not pu.bucket_sums.size:
            stats['low_rows'] = stats['high_rows'] = 0
            return np.zeros(s.size, dtype=bool)
        pos = np.clip(np.searchsorted(pu.bucket_sums, s), 0, pu.bucket_sums.size - 1)
        present = pu.bucket_sums[pos] == s
        popularity = np.where(present, pu.bucket_counts[pos], 0)
        low = present & (popularity <= pu.threshold)

        rows = np.flatnonzero(low)
        if rows.size:
            counts = popularity[rows]
            total = int(counts.sum())
            owner = np.repeat(np.arange(rows.size), counts)
            offset = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            pairs = pu.bucket_pairs[pu.bucket_starts[pos[rows]][owner] + offset]
            ok = in_a[pairs[:, 0]] & in_b[pairs[:, 1]]
            found[rows] = np.bincount(owner, weights=ok.astype(np.float64), minlength=rows.size) > 0
            work.add_pairs(total)
        stats['low_rows'] = int(rows.size)
        stats['high_rows'] = int((present & ~low).sum())
        return present & ~low

    # ---------- weighted stars ----------

    def k13_weighted(self, weights: Sequence[int], edges: Iterable[Tuple[int, int]], W: int) -> bool:
        return self.k13_star(weights, edges, W) is not None

    def k13_star(self, weights: Sequence[int], edges: Iterable[Tuple[int, int]],
                 W: int) -> Optional[Tuple[int, int, int, int]]:
        """Center u and three distinct neighbours whose weights total W, or None.

        Weights are encoded as 4(w - w_min) + 1, so a + b carries the tag 2
        and the targets 4(W - w(u) - w3 - 2 w_min) + 2 match only pair sums.
        A hit names a pair total and w3; the weight multiset of N(u) then
        decides whether three distinct vertices realize it.
        """
        weights = [int(w) for w in weights]
        n = len(weights)
        neighbours: List[set] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                continue
            neighbours[u].add(v)
            neighbours[v].add(u)
        if not any(len(nb) >= 3 for nb in neighbours):
            return None

        w = np.asarray(weights, dtype=np.int64)
        w_min = int(w.min())
        code = 4 * (w - w_min) + 1
        A0 = PointSet.from_values(np.unique(code).tolist())
        pu = self.preproc_universe_no_S(A0, A0)

        for u in range(n):
            if len(neighbours[u]) < 3:
                continue
            nbrs = np.array(sorted(neighbours[u]), dtype=np.int64)
            A = PointSet.from_values(np.unique(code[nbrs]).tolist())
            third = np.unique(w[nbrs])
            pair_total = W - weights[u] - third - 2 * w_min
            keep = pair_total >= 0
            if not keep.any():
                continue
            targets = 4 * pair_total[keep] + 2
            S = PointSet.from_values(targets.tolist())
            hits = self.query_universe(pu, A, A, S).hits.array[:, 0]
            by_target = dict(zip(targets.tolist(), third[keep].tolist()))
            for target in hits.tolist():
                star = self._distinct_star(nbrs, w, (target - 2) // 4 + 2 * w_min, by_target[target])
                if star is not None:
                    return (u,) + star
        return None

    @staticmethod
    def _distinct_star(nbrs: np.ndarray, w: np.ndarray, pair_total: int, w3: int) -> Optional[Tuple[int, int, int]]:
        """Three distinct neighbours with w(v1) + w(v2) = pair_total and w(v3) = w3"""
        by_weight: Dict[int, List[int]] = defaultdict(list)
        for v in nbrs.tolist():
            by_weight[int(w[v])].append(v)
        for x in sorted(by_weight):
            y = pair_total - x
            if y < x or y not in by_weight:
                continue
            need = Counter((x, y, w3))
            if all(len(by_weight.get(value, [])) >= count for value, count in need.items()):
                pools = {value: list(vs) for value, vs in by_weight.items()}
                v1 = pools[x].pop()
                v2 = pools[y].pop()
                v3 = pools[w3].pop()
                return v1, v2, v3
        return None
