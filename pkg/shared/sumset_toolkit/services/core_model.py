"""
Core Model - Point sets, grid geometry, flattening, instance generators and file formats
"""

import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import (
    ClusterAuditError,
    DimensionMismatchError,
    FlattenOverflowError,
    NotMonotoneError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

Point = Tuple[int, ...]

INT63 = 2 ** 63


class PointSet:
    """Deduplicated set of d-dimensional points in [U]^d, kept in lexicographic order"""

    __slots__ = ("dim", "universe", "_array", "_points", "_members")

    def __init__(self, points: Iterable[Sequence[int]], dim: int, universe: int):
        rows = [tuple(int(c) for c in p) for p in points]
        for row in rows:
            if len(row) != dim:
                raise DimensionMismatchError(f"point {row} has {len(row)} coordinates, expected {dim}")
        array = np.array(rows, dtype=np.int64).reshape(-1, dim) if rows else np.zeros((0, dim), dtype=np.int64)
        self._init(array, dim, universe)

    def _init(self, array: np.ndarray, dim: int, universe: int) -> None:
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        if universe < 1:
            raise ValueError("universe must be positive")
        if array.size:
            array = np.unique(array, axis=0)
            low, high = int(array.min()), int(array.max())
            if low < 0 or high >= universe:
                bad = array[np.flatnonzero(((array < 0) | (array >= universe)).any(axis=1))[0]]
                raise ValueError(f"point {tuple(int(c) for c in bad)} outside universe [0, {universe})")
        array.setflags(write=False)
        self.dim = dim
        self.universe = universe
        self._array = array
        self._points = None
        self._members = None

    @classmethod
    def from_array(cls, array, universe: Optional[int] = None, dim: Optional[int] = None) -> "PointSet":
        """Build from an (n, d) integer array; universe defaults to max coordinate + 1"""
        array = np.asarray(array, dtype=np.int64)
        if array.ndim == 1:
            array = array.reshape(-1, dim or 1)
        dim = dim or array.shape[1]
        if array.shape[1] != dim:
            raise DimensionMismatchError(f"array has {array.shape[1]} columns, expected {dim}")
        if universe is None:
            universe = int(array.max()) + 1 if array.size else 1
        instance = cls.__new__(cls)
        instance._init(np.array(array, dtype=np.int64, copy=True), dim, max(int(universe), 1))
        return instance

    @classmethod
    def from_values(cls, values: Iterable[int], universe: Optional[int] = None) -> "PointSet":
        """1D set from plain integers"""
        return cls.from_array(np.fromiter((int(v) for v in values), dtype=np.int64), universe=universe, dim=1)

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def points(self) -> Tuple[Point, ...]:
        if self._points is None:
            self._points = tuple(tuple(row) for row in self._array.tolist())
        return self._points

    def values(self) -> List[int]:
        """Plain integers of a 1D set"""
        if self.dim != 1:
            raise DimensionMismatchError("values() needs a 1D set")
        return self._array[:, 0].tolist()

    def translate(self, offset: Sequence[int], universe: Optional[int] = None) -> "PointSet":
        """Shifted copy; the caller keeps track of the offset"""
        offset = np.asarray(offset, dtype=np.int64).reshape(1, -1)
        if offset.shape[1] != self.dim:
            raise DimensionMismatchError("offset dimension differs from set dimension")
        return PointSet.from_array(self._array + offset, universe=universe, dim=self.dim)

    def __len__(self) -> int:
        return int(self._array.shape[0])

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points)

    def __contains__(self, item) -> bool:
        if self._members is None:
            self._members = frozenset(self.points)
        return tuple(int(c) for c in item) in self._members

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self._array, other._array)

    def __hash__(self):
        return hash((self.dim, self.points))

    def __repr__(self) -> str:
        preview = ", ".join(str(p) for p in self.points[:4])
        more = ", ..." if len(self) > 4 else ""
        return f"PointSet(d={self.dim}, U={self.universe}, n={len(self)}: {preview}{more})"


@dataclass(frozen=True)
class GridConfig:
    """Grid of hypercube cells with side length `side` over [U]^d"""
    side: int
    universe: int
    dim: int

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("grid side must be at least 1")
        if self.universe < 1 or self.dim < 1:
            raise ValueError("grid needs a positive universe and dimension")

    @property
    def cells_per_axis(self) -> int:
        return -(-self.universe // self.side)


@dataclass(frozen=True)
class ClusterDesc:
    """(K, L, M)-clustering promise: K disjoint cubes of volume L, at most M points each"""
    K: int
    L: int
    M: Optional[int] = None

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ValueError("cluster descriptor needs K >= 1 and L >= 1")
        if self.M is not None and self.M < 1:
            raise ValueError("cluster descriptor M must be positive when present")


@dataclass(frozen=True)
class AlignedPart:
    """Points of one residue class, shifted so every residue is below side/2"""
    subset: PointSet
    shift: Tuple[int, ...]
    mask: str

    def restore(self) -> PointSet:
        return self.subset.translate(self.shift, universe=self.subset.universe)


@dataclass
class WorkCounter:
    """Structural operation tally for one solve"""
    pair_ops: int = 0
    fft_cells: int = 0
    bsg_ops: int = 0
    # online query branches taken (miss, high, low); not part of the total
    branches: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return self.pair_ops + self.fft_cells + self.bsg_ops

    def add_pairs(self, count: int) -> None:
        self.pair_ops += int(count)

    def add_fft(self, cells: int) -> None:
        self.fft_cells += int(cells)

    def add_bsg(self, ops: int) -> None:
        self.bsg_ops += int(ops)

    def add_branch(self, name: str) -> None:
        self.branches[name] += 1

    def merge(self, other: "WorkCounter") -> None:
        self.pair_ops += other.pair_ops
        self.fft_cells += other.fft_cells
        self.bsg_ops += other.bsg_ops
        self.branches.update(other.branches)

    def snapshot(self) -> "WorkCounter":
        return WorkCounter(self.pair_ops, self.fft_cells, self.bsg_ops, Counter(self.branches))

    def to_dict(self) -> Dict[str, int]:
        return {
            'pair_ops': self.pair_ops,
            'fft_cells': self.fft_cells,
            'bsg_ops': self.bsg_ops,
            'total': self.total,
        }


@dataclass(frozen=True)
class CellIndex:
    """Points grouped by grid cell: cells[i] owns points[order[starts[i]:starts[i+1]]]"""
    cells: np.ndarray
    order: np.ndarray
    starts: np.ndarray
    counts: np.ndarray

    def __len__(self) -> int:
        return int(self.cells.shape[0])

    def members(self, i: int) -> np.ndarray:
        return self.order[self.starts[i]:self.starts[i + 1]]


def even_side(side: int) -> int:
    return side + (side % 2)


def _check_dim(s: PointSet, g: GridConfig) -> None:
    if s.dim != g.dim:
        raise DimensionMismatchError(f"set has dimension {s.dim}, grid has {g.dim}")


def cell_of(p: Sequence[int], g: GridConfig) -> Point:
    """CELL(p): coordinate-wise floor division by the grid side"""
    coords = tuple(int(c) for c in p)
    if len(coords) != g.dim:
        raise DimensionMismatchError(f"point {coords} has {len(coords)} coordinates, grid has {g.dim}")
    for c in coords:
        if c < 0 or c >= g.universe:
            raise ValueError(f"point {coords} outside universe [0, {g.universe})")
    return tuple(c // g.side for c in coords)


def index_cells(points: np.ndarray, side: int) -> CellIndex:
    """Group an (n, d) array by cell"""
    points = np.asarray(points, dtype=np.int64)
    dim = points.shape[1]
    if not points.shape[0]:
        empty = np.zeros(0, dtype=np.int64)
        return CellIndex(np.zeros((0, dim), dtype=np.int64), empty, np.zeros(1, dtype=np.int64), empty)
    cells, inverse = np.unique(points // side, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=cells.shape[0]).astype(np.int64)
    starts = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    return CellIndex(cells, order, starts, counts)


def align_decompose(s: PointSet, g: GridConfig) -> List[AlignedPart]:
    """Split s into at most 2^d parts, each aligned after a shift of side/2 on some coordinates"""
    _check_dim(s, g)
    if not len(s):
        return []
    side = even_side(g.side)
    half = side // 2
    arr = s.array
    bits = (arr % side) >= half
    codes = bits.astype(np.int64) @ (1 << np.arange(s.dim, dtype=np.int64))
    shifted = arr - bits.astype(np.int64) * half

    parts = []
    for code in np.unique(codes).tolist():
        mask_bits = [bool((code >> j) & 1) for j in range(s.dim)]
        shift = tuple(half if b else 0 for b in mask_bits)
        label = "".join("1" if b else "0" for b in mask_bits)
        subset = PointSet.from_array(shifted[codes == code], universe=s.universe, dim=s.dim)
        parts.append(AlignedPart(subset, shift, label))
    parts.sort(key=lambda part: part.mask)
    return parts


def is_aligned(points: np.ndarray, side: int) -> bool:
    side = even_side(side)
    return bool(((np.asarray(points) % side) < side // 2).all())


@dataclass(frozen=True)
class FlatteningMap:
    """Injective map [2U)^d -> Z that is additive on points aligned to the grid"""
    side: int
    universe: int
    dim: int

    def __post_init__(self):
        if self.limit >= INT63:
            raise FlattenOverflowError(self.limit)

    @property
    def volume(self) -> int:
        return self.side ** self.dim

    @property
    def base(self) -> int:
        return 2 * (-(-self.universe // self.side))

    @property
    def limit(self) -> int:
        """Exclusive upper bound of all images"""
        return self.volume * self.base ** self.dim

    def _weights(self) -> Tuple[np.ndarray, np.ndarray]:
        powers = np.arange(self.dim, dtype=np.int64)
        return np.int64(self.base) ** powers, np.int64(self.side) ** powers

    def cell_values(self, cells: np.ndarray) -> np.ndarray:
        """Image of each cell's lowest corner; the cell occupies [value, value + volume)"""
        cell_w, _ = self._weights()
        return self.volume * (np.asarray(cells, dtype=np.int64).reshape(-1, self.dim) @ cell_w)

    def apply(self, points) -> np.ndarray:
        arr = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        if not arr.shape[0]:
            return np.zeros(0, dtype=np.int64)
        cells = arr // self.side
        if int(arr.min()) < 0 or int(cells.max()) >= self.base:
            raise ValueError(f"point outside the flattening range [0, {self.base * self.side})")
        cell_w, res_w = self._weights()
        return self.volume * (cells @ cell_w) + (arr % self.side) @ res_w


def flatten_to_1d(s: PointSet, g: GridConfig) -> PointSet:
    """L * sum cell_j (2 ceil(U/l))^j + sum (x_j mod l) l^j for every point"""
    _check_dim(s, g)
    mapping = FlatteningMap(g.side, g.universe, g.dim)
    return PointSet.from_array(mapping.apply(s.array).reshape(-1, 1), universe=mapping.limit, dim=1)


def first_monotone_violation(s: PointSet) -> Optional[int]:
    """Coordinate that decreases along lexicographic order, or None"""
    if len(s) < 2:
        return None
    bad = (np.diff(s.array, axis=0) < 0).any(axis=0)
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else None


def is_monotone(s: PointSet) -> bool:
    return first_monotone_violation(s) is None


def check_monotone(s: PointSet, label: str = "set") -> None:
    coordinate = first_monotone_violation(s)
    if coordinate is not None:
        raise NotMonotoneError(coordinate, label)


def is_connected(s: PointSet) -> bool:
    """Consecutive points (lexicographic order) differ by one unit step"""
    if len(s) < 2:
        return True
    steps = np.abs(np.diff(s.array, axis=0)).sum(axis=1)
    return bool((steps == 1).all())


def encode_points(points: np.ndarray, radix: int) -> np.ndarray:
    """Mixed-radix integer key per point; additive while no coordinate sum reaches radix"""
    points = np.asarray(points, dtype=np.int64)
    dim = points.shape[1] if points.ndim == 2 else 1
    if radix ** dim >= INT63:
        raise FlattenOverflowError(radix ** dim)
    weights = np.int64(radix) ** np.arange(dim, dtype=np.int64)
    return points.reshape(-1, dim) @ weights


def grid_side_for_volume(volume: int, dim: int) -> int:
    """Smallest l with l^d >= volume"""
    side = max(int(round(volume ** (1.0 / dim))), 1)
    while side ** dim < volume:
        side += 1
    while side > 1 and (side - 1) ** dim >= volume:
        side -= 1
    return side


def _greedy_intervals(values: np.ndarray, length: int) -> List[int]:
    """Point counts of the greedy left-to-right cover by intervals [x, x+length)"""
    counts = []
    i, n = 0, len(values)
    while i < n:
        j = int(np.searchsorted(values, values[i] + length, side="left"))
        counts.append(j - i)
        i = j
    return counts


def infer_cluster_desc(s: PointSet, L: int) -> ClusterDesc:
    """Smallest descriptor the greedy sweep (1D) or the grid (d > 1) certifies"""
    if not len(s):
        return ClusterDesc(1, L, 1)
    if s.dim == 1:
        counts = _greedy_intervals(s.array[:, 0], L)
        return ClusterDesc(len(counts), L, max(counts))
    side = grid_side_for_volume(L, s.dim)
    occupancy = index_cells(s.array, side).counts
    return ClusterDesc(len(occupancy), side ** s.dim, int(occupancy.max()))


def audit_cluster(s: PointSet, desc: ClusterDesc, label: str = "set") -> None:
    """Raise ClusterAuditError when s cannot satisfy desc.

    1D uses the greedy interval sweep, which is optimal for K. In d
    dimensions a cube of volume L meets at most 2^d grid cells of side
    ceil(L^(1/d)), so cell counts are checked against 2^d K and 2^d M.
    """
    if not len(s):
        return
    side = grid_side_for_volume(desc.L, s.dim)
    occupancy = index_cells(s.array, side).counts
    if s.dim == 1:
        counts = _greedy_intervals(s.array[:, 0], desc.L)
        if len(counts) > desc.K:
            raise ClusterAuditError(f"{label} needs {len(counts)} intervals of length {desc.L}, descriptor allows {desc.K}")
        if desc.M is not None and max(counts) > desc.M and int(occupancy.max()) > 2 * desc.M:
            raise ClusterAuditError(f"{label} has a cluster of {max(counts)} points, descriptor allows {desc.M}")
        return
    reach = 2 ** s.dim
    if len(occupancy) > reach * desc.K:
        raise ClusterAuditError(f"{label} touches {len(occupancy)} cells, more than {reach} x K={desc.K}")
    if desc.M is not None and int(occupancy.max()) > reach * desc.M:
        raise ClusterAuditError(f"{label} has a cell of {int(occupancy.max())} points, more than {reach} x M={desc.M}")


# ==================== Instance generation ====================

class InstanceKind(Enum):
    """Instance families accepted by gen_instance"""
    MONOTONE = "monotone-d"
    CLUSTERED = "clustered"
    SEQUENCE = "bounded-monotone-seq"
    STRING = "string"


def gen_monotone_set(n: int, d: int, rng: np.random.Generator, density: float = 0.5) -> PointSet:
    """Random subset of a lattice staircase from 0 to (n-1, ..., n-1)"""
    if n < 1 or d < 1:
        raise PreconditionError("monotone instances need n >= 1 and d >= 1")
    if not 0 < density <= 1:
        raise PreconditionError("density must lie in (0, 1]")
    steps = np.repeat(np.arange(d), n - 1)
    rng.shuffle(steps)
    path = np.zeros((steps.size + 1, d), dtype=np.int64)
    if steps.size:
        path[1:] = np.eye(d, dtype=np.int64)[steps].cumsum(axis=0)
    keep = rng.random(path.shape[0]) < density
    keep[int(rng.integers(path.shape[0]))] = True
    return PointSet.from_array(path[keep], universe=n, dim=d)


def gen_clustered_set(n: int, K: int, L: int, rng: np.random.Generator) -> PointSet:
    """1D set of n points inside K disjoint intervals of length L"""
    if K < 1 or L < 1 or n < 1:
        raise PreconditionError("clustered instances need n, K, L >= 1")
    if n > K * L:
        raise PreconditionError(f"{n} points do not fit in {K} intervals of length {L}")
    starts = 2 * L * np.arange(K, dtype=np.int64) + rng.integers(0, L + 1, size=K)
    slots = (starts[:, None] + np.arange(L, dtype=np.int64)[None, :]).reshape(-1)
    chosen = rng.choice(slots, size=n, replace=False)
    return PointSet.from_array(chosen.reshape(-1, 1), universe=2 * K * L, dim=1)


def gen_monotone_sequence(n: int, c: int, rng: np.random.Generator) -> List[int]:
    """Non-decreasing sequence of n values in [c n]"""
    if n < 1 or c < 1:
        raise PreconditionError("sequences need n >= 1 and c >= 1")
    return np.sort(rng.integers(0, c * n, size=n)).tolist()


def gen_string(n: int, alphabet: int, rng: np.random.Generator) -> str:
    if n < 0 or not 1 <= alphabet <= 10:
        raise PreconditionError("strings need n >= 0 and an alphabet of 1..10 digits")
    return "".join(str(v) for v in rng.integers(0, alphabet, size=n).tolist())


def gen_instance(kind: Union[InstanceKind, str], n: int, seed: int, d: int = 2, K: Optional[int] = None,
                 L: Optional[int] = None, c: int = 2, alphabet: int = 2, density: float = 0.5):
    """One seeded instance; the result is checked against its family's hypothesis"""
    kind = InstanceKind(kind)
    rng = np.random.default_rng(seed)
    if kind is InstanceKind.MONOTONE:
        instance = gen_monotone_set(n, d, rng, density)
        check_monotone(instance, "generated set")
    elif kind is InstanceKind.CLUSTERED:
        if K is None or L is None:
            raise PreconditionError("clustered instances need K and L")
        instance = gen_clustered_set(n, K, L, rng)
        audit_cluster(instance, ClusterDesc(K, L), "generated set")
    elif kind is InstanceKind.SEQUENCE:
        instance = gen_monotone_sequence(n, c, rng)
    else:
        instance = gen_string(n, alphabet, rng)
    logger.debug(f"Generated {kind.value} instance n={n} seed={seed}")
    return instance


def gen_threesum_instance(kind: Union[InstanceKind, str], n: int, seed: int, d: int = 2,
                          K: int = 4, L: int = 64) -> Tuple[PointSet, PointSet, PointSet]:
    """Seeded (A, B, S) triple; S mixes genuine sums with random points"""
    kind = InstanceKind(kind)
    rng = np.random.default_rng(seed)
    if kind is InstanceKind.MONOTONE:
        A = gen_monotone_set(n, d, rng)
        B = gen_monotone_set(n, d, rng)
        S = gen_monotone_set(2 * n - 1, d, rng)
        return A, B, S
    if kind is InstanceKind.CLUSTERED:
        A = gen_clustered_set(n, K, L, rng)
        B = gen_clustered_set(n, K, L, rng)
        a = A.array[rng.integers(len(A), size=n // 2), 0]
        b = B.array[rng.integers(len(B), size=n // 2), 0]
        universe = A.universe + B.universe
        noise = rng.integers(0, universe - 1, size=n - n // 2)
        S = PointSet.from_array(np.concatenate((a + b, noise)).reshape(-1, 1), universe=universe, dim=1)
        return A, B, S
    raise PreconditionError(f"no 3SUM instances for kind {kind.value}")


# ==================== File formats ====================

def format_point_set(s: PointSet) -> str:
    """'d U n' header then one point per line"""
    out = io.StringIO()
    out.write(f"{s.dim} {s.universe} {len(s)}\n")
    for p in s.points:
        out.write(" ".join(str(c) for c in p) + "\n")
    return out.getvalue()


def parse_point_set(text: str) -> PointSet:
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError("point set header 'd U n' missing")
    try:
        d, universe, n = (int(t) for t in tokens[:3])
        coords = [int(t) for t in tokens[3:]]
    except ValueError as e:
        raise ValueError(f"malformed point set: {e}") from e
    if d < 1 or n < 0 or len(coords) != d * n:
        raise ValueError(f"point set declares {n} points of dimension {d} but holds {len(coords)} coordinates")
    return PointSet.from_array(np.array(coords, dtype=np.int64).reshape(n, d), universe=universe, dim=d)


def format_sequence(values: Sequence[int], c: int) -> str:
    """'n c' header then the values"""
    return f"{len(values)} {c}\n" + "\n".join(str(int(v)) for v in values) + ("\n" if values else "")


def parse_sequence(text: str) -> Tuple[List[int], int]:
    tokens = text.split()
    if len(tokens) < 2:
        raise ValueError("sequence header 'n c' missing")
    try:
        n, c = int(tokens[0]), int(tokens[1])
        values = [int(t) for t in tokens[2:]]
    except ValueError as e:
        raise ValueError(f"malformed sequence: {e}") from e
    if len(values) != n:
        raise ValueError(f"sequence declares {n} values but holds {len(values)}")
    return values, c


def format_string(text: str, alphabet: int) -> str:
    """'n alphabet' header then the digit string"""
    return f"{len(text)} {alphabet}\n{text}\n"


def parse_string(text: str) -> Tuple[str, int]:
    lines = text.split()
    if len(lines) < 2:
        raise ValueError("string header 'n alphabet' missing")
    try:
        n, alphabet = int(lines[0]), int(lines[1])
    except ValueError as e:
        raise ValueError(f"malformed string header: {e}") from e
    body = lines[2] if len(lines) > 2 else ""
    if len(body) != n:
        raise ValueError(f"string declares length {n} but holds {len(body)} characters")
    if any(not ch.isdigit() or int(ch) >= alphabet for ch in body):
        raise ValueError(f"string uses symbols outside alphabet [0, {alphabet})")
    return body, alphabet


def read_text(path: Union[str, Path]) -> str:
    return Path(path).read_text()


def write_text(path: Union[str, Path], text: str) -> None:
    Path(path).write_text(text)
