"""
Sumset FFT Service - Exact convolution, pseudo-additive hash families and FFT sumsets

Convolutions run schoolbook for short inputs, through a rounded float FFT while the
error bound is safe, and otherwise through number-theoretic transforms modulo three
word-size primes recombined with Garner's rule.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from cachetools import LRUCache, cached

from ..errors import ConstructionError, ConvolutionCapError, PreconditionError
from ..settings import Settings
from .core_model import INT63, PointSet, WorkCounter

logger = logging.getLogger(__name__)

NTT_PRIMES = (998244353, 469762049, 167772161)
SCHOOLBOOK_LIMIT = 64
FLOAT_SAFE_BOUND = 2.0 ** 44


# ==================== Transform tables ====================

@cached(LRUCache(maxsize=8))
def _root_of(prime: int) -> int:
    return int(sympy.primitive_root(prime))


@cached(LRUCache(maxsize=64))
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@cached(LRUCache(maxsize=256))
def _twiddles(prime: int, length: int, invert: bool) -> np.ndarray:
    """w^0 .. w^(length/2 - 1) for a primitive length-th root of unity mod prime"""
    w = pow(_root_of(prime), (prime - 1) // length, prime)
    if invert:
        w = pow(w, prime - 2, prime)
    half = length // 2
    powers = np.ones(1, dtype=np.int64)
    step = w
    while powers.size < half:
        powers = np.concatenate((powers, powers * step % prime))
        step = step * step % prime
    powers = powers[:half]
    powers.setflags(write=False)
    return powers


@cached(LRUCache(maxsize=32))
def prime_pool(bound: int) -> Tuple[int, ...]:
    """All primes <= bound in ascending order"""
    return tuple(int(p) for p in sympy.primerange(2, bound + 1))


def _ntt(a: np.ndarray, prime: int, invert: bool) -> np.ndarray:
    n = a.size
    a = a[_bit_reverse(n)]
    length = 2
    while length <= n:
        half = length // 2
        blocks = a.reshape(-1, length)
        even = blocks[:, :half]
        odd = blocks[:, half:] * _twiddles(prime, length, invert) % prime
        a = np.concatenate(((even + odd) % prime, (even - odd) % prime), axis=1).reshape(-1)
        length *= 2
    if invert:
        a = a * pow(n, prime - 2, prime) % prime
    return a


def _garner(residues: List[np.ndarray]) -> np.ndarray:
    """Recombine residues modulo NTT_PRIMES; exact while the true value is below 2^63"""
    m1, m2, m3 = NTT_PRIMES
    r1, r2, r3 = residues
    t2 = (r2 - r1) % m2 * pow(m1, -1, m2) % m2
    x2 = r1 + m1 * t2
    t3 = (r3 - x2 % m3) % m3 * pow(m1 * m2 % m3, -1, m3) % m3
    return x2 + (m1 * m2) * t3


def _as_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).reshape(-1)
    if arr.size and int(arr.min()) < 0:
        raise ValueError("dense vectors must be non-negative")
    return arr


# ==================== Hash functions and families ====================

@dataclass(frozen=True)
class PseudoAdditiveFn:
    """h(x) = (x mod p_1, ..., x mod p_l) packed into one integer code.

    Component i uses radix 2p_i - 1, so the code of h(a) + h(b) is the
    componentwise sum and stays inside [0, range).
    """
    primes: Tuple[int, ...]

    def __post_init__(self):
        if not self.primes or len(set(self.primes)) != len(self.primes):
            raise ValueError("a hash function needs distinct primes")
        for p in self.primes:
            if not sympy.isprime(p):
                raise ValueError(f"{p} is not prime")

    @property
    def radices(self) -> Tuple[int, ...]:
        return tuple(2 * p - 1 for p in self.primes)

    @property
    def weights(self) -> Tuple[int, ...]:
        out, acc = [], 1
        for r in self.radices:
            out.append(acc)
            acc *= r
        return tuple(out)

    @property
    def range(self) -> int:
        return math.prod(self.radices)

    def apply(self, values) -> np.ndarray:
        x = np.asarray(values, dtype=np.int64).reshape(-1)
        code = np.zeros(x.size, dtype=np.int64)
        for p, w in zip(self.primes, self.weights):
            code += (x % p) * w
        return code

    def decode(self, codes) -> np.ndarray:
        """h-hat: reduce every component of a summed code back modulo its prime"""
        codes = np.asarray(codes, dtype=np.int64).reshape(-1)
        out = np.zeros(codes.size, dtype=np.int64)
        for p, r, w in zip(self.primes, self.radices, self.weights):
            out += ((codes // w) % r % p) * w
        return out

    def offsets(self, values) -> np.ndarray:
        """Summed codes y with decode(y) == h(s); shape (n, 2^l), -1 where a component overflows"""
        x = np.asarray(values, dtype=np.int64).reshape(-1)
        combos = np.zeros((x.size, 1), dtype=np.int64)
        valid = np.ones((x.size, 1), dtype=bool)
        for p, w in zip(self.primes, self.weights):
            low = (x % p)[:, None]
            high = low + p
            combos = np.concatenate((combos + low * w, combos + high * w), axis=1)
            valid = np.concatenate((valid, valid & (high <= 2 * p - 2)), axis=1)
        return np.where(valid, combos, -1)

    def __str__(self) -> str:
        return "h[" + ",".join(str(p) for p in self.primes) + "]"


@dataclass
class HashFamily:
    """Hash functions plus, for every target value, the index of a collision-free member"""
    fns: List[PseudoAdditiveFn]
    target: np.ndarray
    witness: np.ndarray
    mode: str
    retries: int = 0
    stats: Dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.fns)

    def witness_of(self, x: int) -> int:
        pos = int(np.searchsorted(self.target, x))
        if pos >= self.target.size or int(self.target[pos]) != x:
            raise KeyError(x)
        return int(self.witness[pos])

    def describe(self) -> str:
        lines = [f"family mode={self.mode} size={len(self.fns)} target={self.target.size} retries={self.retries}"]
        for i, fn in enumerate(self.fns):
            served = self.target[self.witness == i]
            lines.append(f"fn {i} primes {' '.join(str(p) for p in fn.primes)} witnesses {served.size}")
        return "\n".join(lines)

    def witness_table(self) -> str:
        return "\n".join(f"{int(x)} {int(w)}" for x, w in zip(self.target, self.witness))


@dataclass
class FamilyAudit:
    passed: bool
    size: int
    size_bound: Optional[float]
    violations: List[int]

    def to_dict(self) -> Dict[str, object]:
        return {
            'passed': self.passed,
            'size': self.size,
            'size_bound': self.size_bound,
            'violations': self.violations[:10],
        }


def collision_counts(fn: PseudoAdditiveFn, values: np.ndarray) -> np.ndarray:
    """|collide(h, x)| for every x in values, by bucketing codes"""
    _, inverse, counts = np.unique(fn.apply(values), return_inverse=True, return_counts=True)
    return counts[inverse.reshape(-1)] - 1


def _log2_sq(universe: int) -> float:
    return max(math.log2(max(universe, 2)), 1.0) ** 2


class SumsetService:
    """Service for exact convolutions and FFT-Lemma sumsets"""

    def __init__(self, settings: Optional[Settings] = None, rng: Optional[np.random.Generator] = None):
        self.settings = settings or Settings()
        self.rng = rng if rng is not None else np.random.default_rng(self.settings.seed)

    # ---------- convolution ----------

    def convolve(self, u, v, work: Optional[WorkCounter] = None) -> np.ndarray:
        """Exact z_k = sum_i u_i v_(k-i) of two non-negative integer vectors"""
        u, v = _as_vector(u), _as_vector(v)
        if not u.size or not v.size:
            return np.zeros(0, dtype=np.int64)
        out_len = u.size + v.size - 1
        if out_len > self.settings.dense_cap:
            raise ConvolutionCapError(f"convolution of length {out_len} exceeds cap {self.settings.dense_cap}")

        bound = int(u.max()) * int(v.max()) * min(u.size, v.size)
        if bound >= INT63:
            raise OverflowError(f"convolution entries may reach {bound}, beyond exact int64 range")

        if min(u.size, v.size) <= SCHOOLBOOK_LIMIT:
            if work is not None:
                work.add_pairs(u.size * v.size)
            return np.convolve(u, v)

        size = 1 << (out_len - 1).bit_length()
        if work is not None:
            work.add_fft(size)

        norm = float(np.linalg.norm(u.astype(float))) * float(np.linalg.norm(v.astype(float)))
        if norm * math.log2(size) < FLOAT_SAFE_BOUND:
            z = np.fft.irfft(np.fft.rfft(u, size) * np.fft.rfft(v, size), size)[:out_len]
            return np.rint(z).astype(np.int64)

        residues = []
        for prime in NTT_PRIMES:
            fu = _ntt(np.pad(u % prime, (0, size - u.size)), prime, False)
            fv = _ntt(np.pad(v % prime, (0, size - v.size)), prime, False)
            residues.append(_ntt(fu * fv % prime, prime, True)[:out_len])
        return _garner(residues)

    def sumset_small_universe(self, A: PointSet, B: PointSet, work: Optional[WorkCounter] = None) -> PointSet:
        """A + B for 1D sets through indicator convolution"""
        if A.dim != 1 or B.dim != 1:
            raise PreconditionError("sumset_small_universe works on 1D sets; flatten first")
        universe = A.universe + B.universe - 1
        if not len(A) or not len(B):
            return PointSet.from_array(np.zeros((0, 1), dtype=np.int64), universe=universe, dim=1)
        a, b = A.array[:, 0], B.array[:, 0]
        amin, bmin = int(a[0]), int(b[0])
        u = np.zeros(int(a[-1]) - amin + 1, dtype=np.int64)
        v = np.zeros(int(b[-1]) - bmin + 1, dtype=np.int64)
        u[a - amin] = 1
        v[b - bmin] = 1
        z = self.convolve(u, v, work)
        sums = np.flatnonzero(z > 0) + amin + bmin
        return PointSet.from_array(sums.reshape(-1, 1), universe=universe, dim=1)

    # ---------- hash families ----------

    def _random_prime(self, bound: int, rng: np.random.Generator) -> int:
        """Uniform prime in [2, bound] by rejection"""
        if bound < 2:
            return 2
        while True:
            candidate = int(rng.integers(2, bound + 1))
            if sympy.isprime(candidate):
                return candidate

    def randomized_bound(self, size: int, universe: int) -> int:
        """c N log^2 U, clipped so one hashed convolution stays under dense_cap"""
        bound = math.ceil(self.settings.prime_constant * size * _log2_sq(universe))
        return max(min(bound, self.settings.dense_cap // 2), 3)

    def deterministic_bound(self, size: int, universe: int, levels: int) -> int:
        return max(math.ceil(self.settings.prime_constant * size ** (1.0 / levels) * _log2_sq(universe)), 3)

    def build_family_randomized(self, T: PointSet, universe: Optional[int] = None,
                                work: Optional[WorkCounter] = None,
                                rng: Optional[np.random.Generator] = None) -> HashFamily:
        """log N + 1 random primes from [c N log^2 U], more on demand until every x has a witness"""
        values = self._target_values(T)
        rng = rng if rng is not None else self.rng
        size = values.size
        bound = self.randomized_bound(size, universe or T.universe)
        k = int(math.floor(math.log2(size))) + 1

        fns: List[PseudoAdditiveFn] = []
        witness = np.full(size, -1, dtype=np.int64)
        draws = 0
        while draws < k or (witness < 0).any():
            if draws - k >= self.settings.family_retry_cap:
                raise ConstructionError(
                    f"randomized family left {int((witness < 0).sum())} of {size} values without a witness "
                    f"after {draws} primes from [2, {bound}]")
            fn = PseudoAdditiveFn((self._random_prime(bound, rng),))
            draws += 1
            if fn in fns:
                continue
            fns.append(fn)
            if work is not None:
                work.add_pairs(size)
            free = (collision_counts(fn, values) == 0) & (witness < 0)
            witness[free] = len(fns) - 1

        retries = max(draws - k, 0)
        if retries:
            logger.debug(f"Randomized family needed {retries} extra primes for N={size}")
        family = self._prune(fns, values, witness, "randomized", retries)
        family.stats.update({'prime_bound': bound, 'draws': draws})
        return family

    def build_family_deterministic(self, T: PointSet, universe: Optional[int] = None,
                                   levels: Optional[int] = None,
                                   work: Optional[WorkCounter] = None) -> HashFamily:
        """Greedy family of l-prime functions from [c N^(1/l) log^2 U], no randomness"""
        values = self._target_values(T)
        levels = levels or self.settings.hash_levels
        if levels < 1:
            raise PreconditionError("levels must be at least 1")
        size = values.size
        bound = self.deterministic_bound(size, universe or T.universe, levels)
        pool = prime_pool(bound)
        if len(pool) < levels:
            raise ConstructionError(f"pool too small: {len(pool)} primes below {bound} for {levels} levels")

        remaining = np.ones(size, dtype=bool)
        witness = np.full(size, -1, dtype=np.int64)
        fns: List[PseudoAdditiveFn] = []
        while remaining.any():
            open_count = int(remaining.sum())
            primes: List[int] = []
            ranks = np.zeros(size, dtype=np.int64)
            for level in range(1, levels + 1):
                threshold = size ** (1.0 - level / levels)
                accepted = None
                for p in pool:
                    if p in primes:
                        continue
                    codes = ranks * (2 * p - 1) + values % p
                    _, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)
                    collide = counts[inverse.reshape(-1)] - 1
                    if work is not None:
                        work.add_pairs(size)
                    good = int(((collide < threshold) & remaining).sum())
                    if good * 2 ** level >= open_count:
                        accepted = (p, inverse.reshape(-1))
                        break
                if accepted is None:
                    raise ConstructionError(
                        f"pool too small: no prime <= {bound} passes level {level} for {open_count} open values")
                primes.append(accepted[0])
                ranks = accepted[1].astype(np.int64)
            fn = PseudoAdditiveFn(tuple(primes))
            fns.append(fn)
            done = remaining & (collision_counts(fn, values) == 0)
            witness[done] = len(fns) - 1
            remaining &= ~done

        family = self._prune(fns, values, witness, "deterministic", 0)
        family.stats.update({'prime_bound': bound, 'levels': levels, 'pool': len(pool)})
        return family

    def deterministic_size_bound(self, size: int, levels: Optional[int] = None) -> float:
        levels = levels or self.settings.hash_levels
        return self.settings.prime_constant * 2 ** levels * math.log2(max(size, 2)) + 1

    @staticmethod
    def _target_values(T: PointSet) -> np.ndarray:
        if T.dim != 1:
            raise PreconditionError("hash families work on 1D sets; flatten first")
        if not len(T):
            raise PreconditionError("hash family target must be non-empty")
        return T.array[:, 0]

    @staticmethod
    def _prune(fns, values, witness, mode, retries) -> HashFamily:
        """Drop members that witness nothing and renumber"""
        used = sorted(i for i in set(witness.tolist()) if i >= 0)
        remap = np.full(len(fns), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        target = np.array(values, dtype=np.int64)
        return HashFamily([fns[i] for i in used], target, remap[witness], mode, retries)

    def build_family(self, T: PointSet, mode: str, universe: Optional[int] = None,
                     levels: Optional[int] = None, work: Optional[WorkCounter] = None) -> HashFamily:
        if _normalize_mode(mode) == "deterministic":
            return self.build_family_deterministic(T, universe, levels, work)
        return self.build_family_randomized(T, universe, work)

    def audit_family(self, family: HashFamily, T: PointSet, levels: Optional[int] = None) -> FamilyAudit:
        """Recheck every witness by bucketing T under each member"""
        values = self._target_values(T)
        violations: List[int] = []
        if not np.array_equal(values, family.target):
            violations = sorted(set(values.tolist()) ^ set(family.target.tolist()))
        else:
            for i, fn in enumerate(family.fns):
                members = family.witness == i
                bad = members & (collision_counts(fn, values) != 0)
                violations.extend(values[bad].tolist())
            violations.extend(values[(family.witness < 0) | (family.witness >= len(family.fns))].tolist())
        bound = None
        if family.mode == "deterministic":
            bound = self.deterministic_size_bound(values.size, levels or family.stats.get('levels'))
        passed = not violations and (bound is None or len(family) <= bound)
        return FamilyAudit(passed, len(family), bound, sorted(violations))

    def check_pseudo_additive(self, fn: PseudoAdditiveFn, universe: int, samples: int = 10_000,
                              rng: Optional[np.random.Generator] = None) -> bool:
        """Spot-check h-hat(h(a) + h(b)) == h(a + b) on random pairs"""
        rng = rng if rng is not None else self.rng
        a = rng.integers(0, max(universe, 1), size=samples)
        b = rng.integers(0, max(universe, 1), size=samples)
        return bool(np.array_equal(fn.decode(fn.apply(a) + fn.apply(b)), fn.apply(a + b)))

    # ---------- sumsets over a known superset ----------

    def _dense_ok(self, span: int, target_size: int, universe: int) -> bool:
        return span <= self.settings.dense_cap and span <= self.randomized_bound(target_size, universe)

    def sumset_via_fft(self, A: PointSet, B: PointSet, T: PointSet, mode: str = "randomized",
                       family: Optional[HashFamily] = None, allow_dense: bool = True,
                       work: Optional[WorkCounter] = None) -> PointSet:
        """A + B given a superset T, one hashed convolution per family member"""
        if A.dim != 1 or B.dim != 1 or T.dim != 1:
            raise PreconditionError("sumset_via_fft works on 1D sets; flatten first")
        if not len(A) or not len(B) or not len(T):
            return PointSet.from_array(np.zeros((0, 1), dtype=np.int64), universe=T.universe, dim=1)
        if self.settings.debug:
            self._check_superset(A, B, T)

        a, b, t = A.array[:, 0], B.array[:, 0], T.array[:, 0]
        span = int(a[-1] - a[0]) + int(b[-1] - b[0]) + 1
        if allow_dense and family is None and self._dense_ok(span, t.size, T.universe):
            sums = self.sumset_small_universe(A, B, work)
            hit = np.isin(t, sums.array[:, 0])
            return PointSet.from_array(t[hit].reshape(-1, 1), universe=T.universe, dim=1)

        if family is None:
            family = self.build_family(T, mode, work=work)
        elif not np.array_equal(family.target, t):
            raise PreconditionError("hash family was built for a different target set")

        hit = np.zeros(t.size, dtype=bool)
        for i, fn in enumerate(family.fns):
            members = np.flatnonzero(family.witness == i)
            if not members.size:
                continue
            ua = np.bincount(fn.apply(a), minlength=1).astype(np.int64)
            vb = np.bincount(fn.apply(b), minlength=1).astype(np.int64)
            z = self.convolve(ua, vb, work)
            hit[members] = self._probe(fn, t[members], z) > 0
        return PointSet.from_array(t[hit].reshape(-1, 1), universe=T.universe, dim=1)

    @staticmethod
    def _probe(fn: PseudoAdditiveFn, values: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Sum of z over all summed codes that decode to h(s), per s"""
        offsets = fn.offsets(values)
        if not z.size:
            return np.zeros(offsets.shape[0], dtype=np.int64)
        inside = (offsets >= 0) & (offsets < z.size)
        picked = np.where(inside, z[np.clip(offsets, 0, max(z.size - 1, 0))], 0)
        return picked.sum(axis=1)

    def _check_superset(self, A: PointSet, B: PointSet, T: PointSet) -> None:
        if len(A) * len(B) > 1 << 22:
            logger.debug("Skipping superset check on a large instance")
            return
        sums = np.unique((A.array[:, 0][:, None] + B.array[:, 0][None, :]).reshape(-1))
        missing = sums[~np.isin(sums, T.array[:, 0])]
        if missing.size:
            raise PreconditionError(f"{missing.size} sums lie outside the target superset, e.g. {int(missing[0])}")

    def sparse_convolution(self, u: Dict[int, int], v: Dict[int, int], T: PointSet, mode: str = "randomized",
                           family: Optional[HashFamily] = None, allow_dense: bool = True,
                           work: Optional[WorkCounter] = None) -> Dict[int, int]:
        """Exact z = u * v restricted to the superset T of its support"""
        if T.dim != 1:
            raise PreconditionError("sparse_convolution works on 1D targets")
        if not u or not v or not len(T):
            return {}
        ua = np.fromiter(u.keys(), dtype=np.int64)
        uw = np.fromiter(u.values(), dtype=np.int64)
        vb = np.fromiter(v.keys(), dtype=np.int64)
        vw = np.fromiter(v.values(), dtype=np.int64)
        if min(ua.min(), vb.min()) < 0 or min(uw.min(), vw.min()) < 0:
            raise ValueError("sparse vectors need non-negative positions and weights")
        t = T.array[:, 0]
        span = int(ua.max() - ua.min()) + int(vb.max() - vb.min()) + 1

        if allow_dense and family is None and self._dense_ok(span, t.size, T.universe):
            du = np.zeros(int(ua.max() - ua.min()) + 1, dtype=np.int64)
            dv = np.zeros(int(vb.max() - vb.min()) + 1, dtype=np.int64)
            np.add.at(du, ua - ua.min(), uw)
            np.add.at(dv, vb - vb.min(), vw)
            z = self.convolve(du, dv, work)
            pos = t - int(ua.min()) - int(vb.min())
            inside = (pos >= 0) & (pos < z.size)
            weights = np.where(inside, z[np.clip(pos, 0, z.size - 1)], 0)
        else:
            if family is None:
                family = self.build_family(T, mode, work=work)
            elif not np.array_equal(family.target, t):
                raise PreconditionError("hash family was built for a different target set")
            weights = np.zeros(t.size, dtype=np.int64)
            for i, fn in enumerate(family.fns):
                members = np.flatnonzero(family.witness == i)
                if not members.size:
                    continue
                hu = np.zeros(fn.range, dtype=np.int64)
                hv = np.zeros(fn.range, dtype=np.int64)
                np.add.at(hu, fn.apply(ua), uw)
                np.add.at(hv, fn.apply(vb), vw)
                z = self.convolve(np.trim_zeros(hu, "b"), np.trim_zeros(hv, "b"), work)
                weights[members] = self._probe(fn, t[members], z)
        return {int(s): int(w) for s, w in zip(t.tolist(), weights.tolist()) if w}


def _normalize_mode(mode: str) -> str:
    mode = (mode or "randomized").lower()
    if mode in ("rand", "randomized", "random"):
        return "randomized"
    if mode in ("det", "deterministic"):
        return "deterministic"
    raise ValueError(f"unknown hash family mode {mode!r}")
