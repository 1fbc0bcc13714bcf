"""
Solver Service - 3SUM+ engines: brute force, small-universe FFT, monotone grid, clustered

All grid engines share one pipeline. A and B are split into aligned parts,
each part pair is covered on the cell level by bicliques plus a remainder,
remainder cell pairs are solved directly (or recursively), and bicliques are
solved through FFT sumsets over the cell superset of A_i* + B_i*.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..errors import DimensionMismatchError, PreconditionError
from ..settings import Settings
from .bsg import BSGService
from .core_model import (
    CellIndex,
    ClusterDesc,
    FlatteningMap,
    GridConfig,
    Point,
    PointSet,
    WorkCounter,
    align_decompose,
    audit_cluster,
    check_monotone,
    encode_points,
    even_side,
    grid_side_for_volume,
    index_cells,
    infer_cluster_desc,
)
from .sumset_fft import SumsetService

logger = logging.getLogger(__name__)

PAIR_CHUNK = 1 << 22


@dataclass
class SolveParams:
    """Grid side, BSG parameter and the exponents they were tuned from"""
    ell: int
    alpha: float
    recurse: int = 1
    brute_cutoff: int = 32
    x: Optional[float] = None
    y: Optional[float] = None
    z: Optional[float] = None

    def __post_init__(self):
        if self.ell < 1 or self.brute_cutoff < 1 or self.recurse < 0:
            raise PreconditionError("solve parameters must be positive")
        if not 0 < self.alpha <= 1:
            raise PreconditionError(f"alpha must lie in (0, 1], got {self.alpha}")


@dataclass
class ThreeSumResult:
    hits: PointSet
    work: WorkCounter
    witnesses: Optional[Dict[Point, Tuple[Point, Point]]] = None
    stats: Dict[str, object] = field(default_factory=dict)

    def record(self) -> Dict[str, object]:
        out = {'hits': len(self.hits), 'work': self.work.to_dict()}
        out.update(self.stats)
        return out


class KeyIndex:
    """Sorted mixed-radix keys of a point array, for vectorized membership"""

    def __init__(self, points: np.ndarray, radix: int):
        self.radix = radix
        self.dim = points.shape[1]
        keys = encode_points(points, radix) if len(points) else np.zeros(0, dtype=np.int64)
        self.order = np.argsort(keys, kind="stable")
        self.sorted = keys[self.order]

    def locate_keys(self, keys: np.ndarray) -> np.ndarray:
        """Row of each key in the indexed array, or -1"""
        if not self.sorted.size:
            return np.full(keys.shape[0], -1, dtype=np.int64)
        pos = np.clip(np.searchsorted(self.sorted, keys), 0, self.sorted.size - 1)
        return np.where(self.sorted[pos] == keys, self.order[pos], -1)

    def locate(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        valid = ((points >= 0) & (points < self.radix)).all(axis=1)
        keys = encode_points(np.where(valid[:, None], points, 0), self.radix)
        return np.where(valid, self.locate_keys(keys), -1)


def key_radix(*arrays: np.ndarray) -> int:
    top = max((int(a.max()) for a in arrays if a.size), default=0)
    return 2 * top + 2


def _gather(index: CellIndex, cells: np.ndarray) -> np.ndarray:
    """Point rows of the given cells, concatenated"""
    counts = index.counts[cells]
    total = int(counts.sum())
    if not total:
        return np.zeros(0, dtype=np.int64)
    first = np.cumsum(counts) - counts
    offsets = np.arange(total) - np.repeat(first, counts)
    return index.order[np.repeat(index.starts[cells], counts) + offsets]


def _block_pairs(ix: CellIndex, rx: np.ndarray, iy: CellIndex, ry: np.ndarray,
                 chunk: int = PAIR_CHUNK) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """All point index pairs of cell pairs (rx[k], ry[k]), in chunks of about `chunk` pairs"""
    if not len(rx):
        return
    sizes = ix.counts[rx] * iy.counts[ry]
    group = (np.cumsum(sizes) - sizes) // chunk
    bounds = np.concatenate(([0], np.flatnonzero(np.diff(group)) + 1, [len(rx)]))
    for lo, hi in zip(bounds[:-1].tolist(), bounds[1:].tolist()):
        part = sizes[lo:hi]
        total = int(part.sum())
        if not total:
            continue
        pid = np.repeat(np.arange(hi - lo), part)
        offset = np.arange(total) - (np.cumsum(part) - part)[pid]
        width = iy.counts[ry[lo:hi]][pid]
        xi = ix.order[ix.starts[rx[lo:hi]][pid] + offset // width]
        yi = iy.order[iy.starts[ry[lo:hi]][pid] + offset % width]
        yield xi, yi


def monotone_exponents(d: int) -> Tuple[float, float, float]:
    """(x, y, z) with z the root in [1, 2] of 6z^2 + (d - 11)z - 2d, x = 1 - z/2, y = xz"""
    f = lambda z: 6 * z * z + (d - 11) * z - 2 * d
    lo, hi = 1.0, 2.0
    for _ in range(80):
        mid = (lo + hi) / 2
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    z = (lo + hi) / 2
    x = 1 - z / 2
    return x, x * z, z


def equitable_decompose(s: PointSet, g: GridConfig) -> List[Tuple[PointSet, ClusterDesc]]:
    """Bucket cells by floor(log2 occupancy); bucket i is (K_i, side^d, 2^(i+1) - 1)-clustered"""
    if not len(s):
        return []
    if s.dim != g.dim:
        raise DimensionMismatchError(f"set has dimension {s.dim}, grid has {g.dim}")
    index = index_cells(s.array, g.side)
    level = np.floor(np.log2(index.counts)).astype(np.int64)
    parts = []
    for i in np.unique(level).tolist():
        cells = np.flatnonzero(level == i)
        subset = PointSet.from_array(s.array[_gather(index, cells)], universe=s.universe, dim=s.dim)
        parts.append((subset, ClusterDesc(int(cells.size), g.side ** g.dim, 2 ** (i + 1) - 1)))
    return parts


class SolverService:
    """Service for exact 3SUM+ over integer point sets"""

    def __init__(self, settings: Optional[Settings] = None, sumset: Optional[SumsetService] = None,
                 bsg: Optional[BSGService] = None):
        self.settings = settings or Settings()
        self.sumset = sumset or SumsetService(self.settings)
        self.bsg = bsg or BSGService(self.settings)

    @property
    def variant(self) -> str:
        return "det" if self.settings.deterministic else "rand"

    @property
    def hash_mode(self) -> str:
        return "deterministic" if self.settings.deterministic else "randomized"

    @property
    def problems(self) -> Dict[str, Callable[..., ThreeSumResult]]:
        return {
            '3sum-brute': self.threesum_brute,
            '3sum-fft': self.threesum_fft,
            '3sum-monotone': self.threesum_monotone,
            '3sum-monotone-offline': self.threesum_monotone_offline,
        }

    # ---------- plumbing ----------

    @staticmethod
    def _check_sets(A: PointSet, B: PointSet, S: PointSet) -> None:
        if not (A.dim == B.dim == S.dim):
            raise DimensionMismatchError(f"dimensions differ: A={A.dim} B={B.dim} S={S.dim}")

    def package_result(self, A: PointSet, B: PointSet, S: PointSet, hits: np.ndarray, work: WorkCounter,
                       witnesses: bool, stats: Dict[str, object]) -> ThreeSumResult:
        hit_set = PointSet.from_array(hits.reshape(-1, S.dim), universe=S.universe, dim=S.dim)
        found = self.find_witnesses(A, B, hit_set) if witnesses else None
        logger.info(f"3SUM+ {stats.get('solver')}: {len(hit_set)} hits, work {work.total}")
        return ThreeSumResult(hit_set, work.snapshot(), found, stats)

    def find_witnesses(self, A: PointSet, B: PointSet, hits: PointSet) -> Dict[Point, Tuple[Point, Point]]:
        """One (a, b) per hit, found by scanning A"""
        out: Dict[Point, Tuple[Point, Point]] = {}
        if not len(hits) or not len(A) or not len(B):
            return out
        index = KeyIndex(B.array, key_radix(A.array, B.array, hits.array))
        for s, point in zip(hits.array, hits.points):
            rows = index.locate(s[None, :] - A.array)
            first = int(np.argmax(rows >= 0))
            if rows[first] >= 0:
                out[point] = (A.points[first], B.points[int(rows[first])])
        return out

    def _brute_hits(self, a: np.ndarray, b: np.ndarray, s: np.ndarray, work: WorkCounter) -> np.ndarray:
        if not (len(a) and len(b) and len(s)):
            return s[:0]
        radix = key_radix(a, b, s)
        index = KeyIndex(s, radix)
        ka, kb = encode_points(a, radix), encode_points(b, radix)
        found = np.zeros(len(s), dtype=bool)
        rows = max(1, PAIR_CHUNK // len(kb))
        for start in range(0, len(ka), rows):
            hit = index.locate_keys((ka[start:start + rows, None] + kb[None, :]).reshape(-1))
            found[hit[hit >= 0]] = True
        work.add_pairs(len(a) * len(b))
        return s[found]

    # ---------- direct solvers ----------

    def threesum_brute(self, A: PointSet, B: PointSet, S: PointSet, witnesses: bool = False,
                       work: Optional[WorkCounter] = None, **_) -> ThreeSumResult:
        """Every pair sum checked against a sorted key index of S"""
        self._check_sets(A, B, S)
        work = work if work is not None else WorkCounter()
        hits = self._brute_hits(A.array, B.array, S.array, work)
        return self.package_result(A, B, S, hits, work, witnesses, {'solver': 'brute'})

    def threesum_fft(self, A: PointSet, B: PointSet, S: PointSet, witnesses: bool = False,
                     work: Optional[WorkCounter] = None, **_) -> ThreeSumResult:
        self._check_sets(A, B, S)
        if A.dim != 1:
            raise PreconditionError("threesum_fft needs 1D sets")
        work = work if work is not None else WorkCounter()
        sums = self.sumset.sumset_small_universe(A, B, work)
        hits = S.array[np.isin(S.array[:, 0], sums.array[:, 0])]
        return self.package_result(A, B, S, hits, work, witnesses, {'solver': 'fft'})

    # ---------- parameter tuning ----------

    def tune_monotone_params(self, n: int, d: int) -> SolveParams:
        """l = ceil(ell_constant n^x) rounded even, 1/alpha = n^y"""
        if n < 2:
            raise PreconditionError("tuning needs n >= 2")
        x, y, z = monotone_exponents(d)
        ell = even_side(max(2, math.ceil(self.settings.ell_constant * n ** x)))
        ell = min(ell, even_side(n))
        alpha = min(1.0, n ** -y)
        return SolveParams(ell, alpha, recurse=1, brute_cutoff=self.settings.brute_cutoff, x=x, y=y, z=z)

    @staticmethod
    def tune_clustered_alpha(K_A: int, K_B: int, K_S: int, L: int, W: float) -> float:
        """1/alpha = min{((K_A K_B)^2 W / (K_S^3 L))^(1/7), (K_B W)^(1/6)}, at least 1"""
        first = ((K_A * K_B) ** 2 * W / (K_S ** 3 * L)) ** (1 / 7)
        second = (K_B * W) ** (1 / 6)
        return 1.0 / max(1.0, min(first, second))

    @staticmethod
    def clustered_w(desc_a: ClusterDesc, desc_b: ClusterDesc, desc_s: ClusterDesc,
                    n_a: int, n_b: int, n_s: int) -> int:
        """min of pairwise M products; a missing M counts as the set size"""
        m_a = desc_a.M if desc_a.M is not None else n_a
        m_b = desc_b.M if desc_b.M is not None else n_b
        m_s = desc_s.M if desc_s.M is not None else n_s
        return max(1, min(m_a * m_b, m_a * m_s, m_b * m_s))

    # ---------- grid engine ----------

    def _solve_grid(self, a: np.ndarray, b: np.ndarray, s: np.ndarray, ell: int, alpha: float,
                    work: WorkCounter, stats: Dict[str, object], depth: int = 0,
                    cutoff: Optional[int] = None, pairing: str = "ab") -> np.ndarray:
        """Hits of S among A + B, via aligned parts, cell-level cover, remainder and biclique steps"""
        if not (len(a) and len(b) and len(s)):
            return s[:0]
        d = a.shape[1]
        universe = int(max(a.max(), b.max())) + 1
        ell = max(2, min(even_side(ell), even_side(universe)))
        grid = GridConfig(ell, universe, d)
        parts_a = align_decompose(PointSet.from_array(a, universe=universe, dim=d), grid)
        parts_b = align_decompose(PointSet.from_array(b, universe=universe, dim=d), grid)

        found = []
        for pa in parts_a:
            for pb in parts_b:
                shift = np.array(pa.shift, dtype=np.int64) + np.array(pb.shift, dtype=np.int64)
                local = s - shift
                local = local[(local >= 0).all(axis=1)]
                if not len(local):
                    continue
                hit = self._solve_aligned(pa.subset.array, pb.subset.array, local, ell, alpha, work, stats,
                                          depth, cutoff or self.settings.brute_cutoff, pairing)
                if len(hit):
                    found.append(hit + shift)
        if not found:
            return s[:0]
        return np.unique(np.concatenate(found), axis=0)

    def _solve_aligned(self, a, b, s, ell, alpha, work, stats, depth, cutoff, pairing) -> np.ndarray:
        d = a.shape[1]
        ia, ib = index_cells(a, ell), index_cells(b, ell)
        a_star = PointSet.from_array(ia.cells, dim=d)
        b_star = PointSet.from_array(ib.cells, dim=d)
        s_star = PointSet.from_array(np.unique(s // ell, axis=0), dim=d)
        cover = self.bsg.bsg_cover(a_star, b_star, s_star, alpha, self.variant, work=work)
        stats['blocks'] = stats.get('blocks', 0) + cover.k
        stats['remainder_pairs'] = stats.get('remainder_pairs', 0) + len(cover.remainder)
        logger.debug(f"Cell cover: |A*|={len(a_star)} |B*|={len(b_star)} |S*|={len(s_star)} "
                     f"k={cover.k} remainder={len(cover.remainder)}")

        radix = key_radix(a, b, s)
        member = KeyIndex(s, radix)
        found = np.zeros(len(s), dtype=bool)

        if len(cover.remainder):
            ri, rj = cover.remainder[:, 0], cover.remainder[:, 1]
            if depth > 0 and ell > cutoff:
                self._step1_recurse(a, ia, b, ib, s, ri, rj, ell, work, stats, depth, cutoff, member, found)
            elif pairing == "cheapest":
                self._step1_cheapest(a, ia, b, ib, s, ri, rj, ell, radix, work, member, found)
            else:
                for xi, yi in _block_pairs(ia, ri, ib, rj):
                    rows = member.locate(a[xi] + b[yi])
                    found[rows[rows >= 0]] = True
                    work.add_pairs(len(xi))

        for block in cover.pairs:
            self._step2(a, ia, b, ib, s, block, ell, radix, work, stats, member, found)
        return s[found]

    def sumset_in_cells(self, a: np.ndarray, b: np.ndarray, cells: np.ndarray, ell: int, alpha: float,
                        work: WorkCounter, stats: Optional[Dict[str, object]] = None) -> np.ndarray:
        """(A + B) restricted to the given cells, for aligned A and B"""
        d = a.shape[1]
        if not (len(a) and len(b) and len(cells)):
            return np.zeros((0, d), dtype=np.int64)
        offsets = np.stack(np.meshgrid(*[np.arange(ell)] * d, indexing="ij"), axis=-1).reshape(-1, d)
        targets = (cells[:, None, :] * ell + offsets[None, :, :]).reshape(-1, d)
        return self._solve_aligned(a, b, targets, ell, alpha, work, stats if stats is not None else {},
                                   0, self.settings.brute_cutoff, "ab")

    def _step1_recurse(self, a, ia, b, ib, s, ri, rj, ell, work, stats, depth, cutoff, member, found) -> None:
        """Each remainder cell pair becomes a subproblem inside [l]^d"""
        d = a.shape[1]
        s_index = index_cells(s, ell)
        cell_key = KeyIndex(s_index.cells, key_radix(ia.cells, ib.cells, s_index.cells))
        targets = cell_key.locate(ia.cells[ri] + ib.cells[rj])
        sub = self.tune_monotone_params(ell, d)
        stats['recursions'] = stats.get('recursions', 0) + int((targets >= 0).sum())
        for i, j, k in zip(ri.tolist(), rj.tolist(), targets.tolist()):
            if k < 0:
                continue
            corner_a, corner_b = ia.cells[i] * ell, ib.cells[j] * ell
            corner = corner_a + corner_b
            hit = self._solve_grid(a[ia.members(i)] - corner_a, b[ib.members(j)] - corner_b,
                                   s[s_index.members(k)] - corner, sub.ell, sub.alpha, work, stats,
                                   depth - 1, cutoff)
            if len(hit):
                rows = member.locate(hit + corner)
                found[rows[rows >= 0]] = True

    def _step1_cheapest(self, a, ia, b, ib, s, ri, rj, ell, radix, work, member, found) -> None:
        """Per remainder cell pair, enumerate the cheapest of A x B, A x S, B x S"""
        s_index = index_cells(s, ell)
        cell_key = KeyIndex(s_index.cells, key_radix(ia.cells, ib.cells, s_index.cells))
        k = cell_key.locate(ia.cells[ri] + ib.cells[rj])
        keep = k >= 0
        ri, rj, k = ri[keep], rj[keep], k[keep]
        if not len(k):
            return
        ca, cb, cs = ia.counts[ri], ib.counts[rj], s_index.counts[k]
        choice = np.argmin(np.stack((ca * cb, ca * cs, cb * cs)), axis=0)

        pick = choice == 0
        for xi, yi in _block_pairs(ia, ri[pick], ib, rj[pick]):
            rows = member.locate(a[xi] + b[yi])
            found[rows[rows >= 0]] = True
            work.add_pairs(len(xi))
        for mode, (pts, index, cells) in ((1, (a, ia, ri)), (2, (b, ib, rj))):
            pick = choice == mode
            if not pick.any():
                continue
            other = KeyIndex(b if mode == 1 else a, radix)
            for xi, yi in _block_pairs(index, cells[pick], s_index, k[pick]):
                ok = other.locate(s[yi] - pts[xi]) >= 0
                found[yi[ok]] = True
                work.add_pairs(len(xi))

    def _step2(self, a, ia, b, ib, s, block, ell, radix, work, stats, member, found) -> None:
        """Biclique A_i x B_i: brute force or FFT sumset over the cell superset, whichever is cheaper"""
        d = a.shape[1]
        pa = a[_gather(ia, block.left)]
        pb = b[_gather(ib, block.right)]
        t_cells = block.sumset.array
        volume = ell ** d
        brute_cost = len(pa) * len(pb)
        span = len(t_cells) * volume
        fft_cost = span * max(math.log2(max(span, 2)), 1.0) * self.settings.fft_cost_factor

        if brute_cost <= fft_cost:
            stats['brute_blocks'] = stats.get('brute_blocks', 0) + 1
            rows = max(1, PAIR_CHUNK // max(len(pb), 1))
            for start in range(0, len(pa), rows):
                hit = member.locate((pa[start:start + rows, None, :] + pb[None, :, :]).reshape(-1, d))
                found[hit[hit >= 0]] = True
            work.add_pairs(brute_cost)
            return

        stats['fft_blocks'] = stats.get('fft_blocks', 0) + 1
        universe = int(max(a.max(), b.max())) + 1
        mapping = FlatteningMap(ell, universe, d)
        flat_a = PointSet.from_array(mapping.apply(pa).reshape(-1, 1), universe=mapping.limit, dim=1)
        flat_b = PointSet.from_array(mapping.apply(pb).reshape(-1, 1), universe=mapping.limit, dim=1)
        starts = mapping.cell_values(t_cells)
        target = (starts[:, None] + np.arange(volume, dtype=np.int64)[None, :]).reshape(-1, 1)
        flat_t = PointSet.from_array(target, universe=mapping.limit, dim=1)
        sums = self.sumset.sumset_via_fft(flat_a, flat_b, flat_t, mode=self.hash_mode, work=work)

        in_range = ((s >= 0) & (s // ell < mapping.base)).all(axis=1)
        rows = np.flatnonzero(in_range)
        hit = np.isin(mapping.apply(s[rows]), sums.array[:, 0])
        found[rows[hit]] = True
        logger.debug(f"FFT biclique: |A_i|={len(pa)} |B_i|={len(pb)} |T|={span} hits={int(hit.sum())}")

    # ---------- structured solvers ----------

    def threesum_monotone(self, A: PointSet, B: PointSet, S: PointSet, params: Optional[SolveParams] = None,
                          witnesses: bool = False, work: Optional[WorkCounter] = None, **_) -> ThreeSumResult:
        """3SUM+ on monotone sets through the cell-level cover with tuned l and alpha"""
        self._check_sets(A, B, S)
        check_monotone(A, "A")
        check_monotone(B, "B")
        check_monotone(S, "S")
        work = work if work is not None else WorkCounter()
        params = params or self.tune_monotone_params(max(len(A), len(B), 2), A.dim)
        stats: Dict[str, object] = {'solver': 'monotone', 'ell': params.ell, 'alpha': params.alpha}
        hits = self._solve_grid(A.array, B.array, S.array, params.ell, params.alpha, work, stats,
                                depth=params.recurse, cutoff=params.brute_cutoff)
        return self.package_result(A, B, S, hits, work, witnesses, stats)

    def _clustered_hits(self, a, b, s, desc_a, desc_b, desc_s, alpha, work, stats) -> np.ndarray:
        d = a.shape[1]
        L = max(desc_a.L, desc_b.L)
        ell = even_side(grid_side_for_volume(L, d))
        if alpha is None:
            W = self.clustered_w(desc_a, desc_b, desc_s, len(a), len(b), len(s))
            alpha = self.tune_clustered_alpha(desc_a.K, desc_b.K, desc_s.K, L, W)
        stats.setdefault('ell', ell)
        stats.setdefault('alpha', alpha)
        return self._solve_grid(a, b, s, ell, alpha, work, stats, depth=0, pairing="cheapest")

    def threesum_clustered(self, A: PointSet, B: PointSet, S: PointSet, desc_a: ClusterDesc, desc_b: ClusterDesc,
                           desc_s: Optional[ClusterDesc] = None, alpha: Optional[float] = None,
                           witnesses: bool = False, work: Optional[WorkCounter] = None, **_) -> ThreeSumResult:
        """3SUM+ on clustered sets; descriptors are audited before solving"""
        self._check_sets(A, B, S)
        audit_cluster(A, desc_a, "A")
        audit_cluster(B, desc_b, "B")
        if desc_s is not None:
            audit_cluster(S, desc_s, "S")
        else:
            desc_s = infer_cluster_desc(S, max(desc_a.L, desc_b.L))
        work = work if work is not None else WorkCounter()
        stats: Dict[str, object] = {'solver': 'clustered'}
        hits = self._clustered_hits(A.array, B.array, S.array, desc_a, desc_b, desc_s, alpha, work, stats)
        return self.package_result(A, B, S, hits, work, witnesses, stats)

    def _solve_equitable(self, A: PointSet, B: PointSet, S: PointSet, grid: GridConfig,
                         work: WorkCounter, stats: Dict[str, object],
                         split_a: bool = True, split_b: bool = True) -> np.ndarray:
        """Union over equitable subset triples of the clustered engine"""
        def whole(s: PointSet):
            index = index_cells(s.array, grid.side)
            return [(s, ClusterDesc(max(len(index), 1), grid.side ** grid.dim, int(index.counts.max())))]

        parts_a = equitable_decompose(A, grid) if split_a else whole(A)
        parts_b = equitable_decompose(B, grid) if split_b else whole(B)
        parts_s = equitable_decompose(S, grid)
        stats['triples'] = len(parts_a) * len(parts_b) * len(parts_s)
        found = []
        for sub_a, desc_a in parts_a:
            for sub_b, desc_b in parts_b:
                for sub_s, desc_s in parts_s:
                    hit = self._clustered_hits(sub_a.array, sub_b.array, sub_s.array,
                                               desc_a, desc_b, desc_s, None, work, stats)
                    if len(hit):
                        found.append(hit)
        if not found:
            return S.array[:0]
        return np.unique(np.concatenate(found), axis=0)

    def threesum_one_clustered(self, A: PointSet, B: PointSet, S: PointSet, desc_a: ClusterDesc,
                               witnesses: bool = False, work: Optional[WorkCounter] = None, **_) -> ThreeSumResult:
        """Only A is clustered; all three sets are split equitably on A's grid"""
        self._check_sets(A, B, S)
        audit_cluster(A, desc_a, "A")
        work = work if work is not None else WorkCounter()
        if not (len(A) and len(B) and len(S)):
            return self.package_result(A, B, S, S.array[:0], work, witnesses, {'solver': 'one-clustered'})
        side = grid_side_for_volume(desc_a.L, A.dim)
        universe = max(int(s.array.max()) for s in (A, B, S)) + 1
        stats: Dict[str, object] = {'solver': 'one-clustered'}
        hits = self._solve_equitable(A, B, S, GridConfig(side, universe, A.dim), work, stats)
        return self.package_result(A, B, S, hits, work, witnesses, stats)

    def threesum_monotone_offline(self, A: PointSet, B: PointSet, S: PointSet, a_only_monotone: bool = False,
                                  witnesses: bool = False, work: Optional[WorkCounter] = None,
                                  **_) -> ThreeSumResult:
        """A and B monotone (or only A), S arbitrary: S is split equitably on an l-grid.

        Monotone sets are (O(n/l), l^d)-clustered, so every part runs the
        clustered engine with l = n^(1/(d+13)), or n^(1/(d+6)) when only A
        is monotone.
        """
        self._check_sets(A, B, S)
        check_monotone(A, "A")
        if not a_only_monotone:
            check_monotone(B, "B")
        work = work if work is not None else WorkCounter()
        stats: Dict[str, object] = {'solver': 'monotone-offline'}
        if not (len(A) and len(B) and len(S)):
            return self.package_result(A, B, S, S.array[:0], work, witnesses, stats)
        n = max(len(A), len(B), 2)
        exponent = 1 / (A.dim + 6) if a_only_monotone else 1 / (A.dim + 13)
        ell = even_side(max(2, math.ceil(self.settings.ell_constant * n ** exponent)))
        universe = max(int(s.array.max()) for s in (A, B, S)) + 1
        ell = min(ell, even_side(universe))
        stats['ell'] = ell
        hits = self._solve_equitable(A, B, S, GridConfig(ell, universe, A.dim), work, stats,
                                     split_a=False, split_b=a_only_monotone)
        return self.package_result(A, B, S, hits, work, witnesses, stats)
