"""
Instance command handlers: gen, solve, verify
"""
import logging
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, Optional

import numpy as np

from sumset_toolkit.services.core_model import (
    ClusterDesc,
    InstanceKind,
    PointSet,
    format_point_set,
    format_sequence,
    format_string,
    gen_instance,
    gen_monotone_sequence,
    gen_string,
    gen_threesum_instance,
    infer_cluster_desc,
    write_text,
)
from sumset_toolkit.services.minplus_hist import minplus_naive, substring_histograms

from .base import BaseHandler

logger = logging.getLogger(__name__)

CLUSTERED_PROBLEMS = ('3sum-clustered', '3sum-one-clustered')

# Solver parameters each problem lets the command line override
PARAM_PROBLEMS = {
    '3sum-monotone': ('ell', 'alpha', 'recurse', 'brute_cutoff'),
    '3sum-clustered': ('alpha',),
}
SOLVE_PARAM_KEYS = ('ell', 'alpha', 'recurse', 'brute_cutoff')


def _diff(expected: PointSet, got: PointSet) -> Optional[Dict[str, object]]:
    """First point on which two hit sets disagree"""
    missing = [p for p in expected.points if p not in got]
    if missing:
        return {'kind': 'missing', 'point': missing[0]}
    spurious = [p for p in got.points if p not in expected]
    if spurious:
        return {'kind': 'spurious', 'point': spurious[0]}
    return None


class GenCommandHandler(BaseHandler):
    """Handler for gen: seeded instances of every family"""

    def handle(self, args) -> int:
        kind = InstanceKind(args.kind)
        if args.triple:
            A, B, S = gen_threesum_instance(kind, args.n, args.seed, d=args.d, K=args.K or 4, L=args.L or 64)
            out_dir = Path(args.out_dir or ".")
            out_dir.mkdir(parents=True, exist_ok=True)
            for name, s in (("A", A), ("B", B), ("S", S)):
                write_text(out_dir / f"{name}.txt", format_point_set(s))
            self.emit({'kind': kind.value, 'n': args.n, 'seed': args.seed, 'sizes': [len(A), len(B), len(S)],
                       'out_dir': str(out_dir)})
            return self.constants['EXIT_OK']

        instance = gen_instance(kind, args.n, args.seed, d=args.d, K=args.K, L=args.L, c=args.c,
                                alphabet=args.alphabet, density=args.density)
        if kind is InstanceKind.SEQUENCE:
            text = format_sequence(instance, args.c)
        elif kind is InstanceKind.STRING:
            text = format_string(instance, args.alphabet)
        else:
            text = format_point_set(instance)
        if args.out:
            write_text(args.out, text)
            logger.info(f"Wrote {kind.value} instance to {args.out}")
        else:
            self.write(text)
        return self.constants['EXIT_OK']


class SolveCommandHandler(BaseHandler):
    """Handler for solve: one 3SUM+ solver on instance files"""

    def handle(self, args) -> int:
        solver = self.services['solver_service']
        A, B, S = self.load_set(args.A), self.load_set(args.B), self.load_set(args.S)
        overrides = self._overrides(args)
        if args.problem in CLUSTERED_PROBLEMS:
            if not args.L:
                raise ValueError(f"{args.problem} needs --L")
            desc_a = ClusterDesc(args.K, args.L) if args.K else infer_cluster_desc(A, args.L)
            if args.problem == '3sum-clustered':
                desc_b = ClusterDesc(args.K, args.L) if args.K else infer_cluster_desc(B, args.L)
                result = solver.threesum_clustered(A, B, S, desc_a, desc_b, alpha=overrides.get('alpha'),
                                                   witnesses=args.witnesses)
            else:
                result = solver.threesum_one_clustered(A, B, S, desc_a, witnesses=args.witnesses)
        elif args.problem == '3sum-monotone' and overrides:
            tuned = solver.tune_monotone_params(max(len(A), len(B), 2), A.dim)
            result = solver.threesum_monotone(A, B, S, params=replace(tuned, **overrides), witnesses=args.witnesses)
        else:
            result = solver.problems[args.problem](A, B, S, witnesses=args.witnesses)

        record = {'problem': args.problem, 'sizes': [len(A), len(B), len(S)], **result.record(),
                  'hits_list': self.as_points(result.hits)}
        if overrides:
            record['params'] = overrides
        if result.witnesses is not None:
            record['witnesses'] = [[list(s), list(a), list(b)] for s, (a, b) in result.witnesses.items()]
        if args.out:
            write_text(args.out, format_point_set(result.hits))
        self.emit(record)
        return self.constants['EXIT_OK']

    @staticmethod
    def _overrides(args) -> Dict[str, float]:
        """Solver parameters given on the command line, rejected where the problem takes none"""
        overrides = {key: getattr(args, key) for key in SOLVE_PARAM_KEYS if getattr(args, key, None) is not None}
        extra = [key for key in overrides if key not in PARAM_PROBLEMS.get(args.problem, ())]
        if extra:
            flags = ", ".join("--" + key.replace("_", "-") for key in extra)
            raise ValueError(f"{args.problem} does not take {flags}")
        return overrides


class VerifyCommandHandler(BaseHandler):
    """Handler for verify: solver against oracle over seeded instances, or a result file against the oracle"""

    def handle(self, args) -> int:
        if args.result:
            return self._verify_result_file(args)

        checks = self._checks()
        if args.problem not in checks:
            raise ValueError(f"unknown problem {args.problem!r}; choose from {sorted(checks)}")
        check = checks[args.problem]
        passed = 0
        for seed in range(args.seed, args.seed + args.seeds):
            failure = check(seed, args)
            if failure is not None:
                self.emit({'problem': args.problem, 'status': 'mismatch', 'seed': seed, 'passed': passed,
                           'counterexample': failure})
                logger.error(f"{args.problem} mismatch at seed {seed}: {failure}")
                return self.constants['EXIT_MISMATCH']
            passed += 1
        self.emit({'problem': args.problem, 'status': 'ok', 'passed': passed, 'seeds': args.seeds})
        return self.constants['EXIT_OK']

    def _verify_result_file(self, args) -> int:
        solver = self.services['solver_service']
        A, B, S = self.load_set(args.A), self.load_set(args.B), self.load_set(args.S)
        claimed = self.load_set(args.result)
        expected = solver.threesum_brute(A, B, S).hits
        failure = _diff(expected, claimed)
        if failure is None:
            self.emit({'status': 'ok', 'hits': len(expected)})
            return self.constants['EXIT_OK']
        if failure['kind'] == 'missing':
            found = solver.find_witnesses(A, B, PointSet([failure['point']], S.dim, S.universe))
            failure['witness'] = found.get(tuple(failure['point']))
        self.emit({'status': 'mismatch', 'counterexample': failure})
        logger.error(f"Result file disagrees with the oracle: {failure}")
        return self.constants['EXIT_MISMATCH']

    # ---------- per-problem checks ----------

    def _checks(self) -> Dict[str, Callable[[int, object], Optional[Dict[str, object]]]]:
        return {
            '3sum-brute': lambda seed, args: self._check_threesum('3sum-brute', seed, args),
            '3sum-fft': lambda seed, args: self._check_threesum('3sum-fft', seed, args),
            '3sum-monotone': lambda seed, args: self._check_threesum('3sum-monotone', seed, args),
            '3sum-monotone-offline': lambda seed, args: self._check_threesum('3sum-monotone-offline', seed, args),
            '3sum-clustered': lambda seed, args: self._check_threesum('3sum-clustered', seed, args),
            '3sum-one-clustered': lambda seed, args: self._check_threesum('3sum-one-clustered', seed, args),
            'minplus': self._check_minplus,
            'minplus-differences': self._check_minplus_differences,
            'hist': self._check_hist,
            'hist-offline': self._check_hist_offline,
            'hist-online': self._check_hist_online,
            'online': self._check_online,
            'universe': self._check_universe,
            'bsg-cover': self._check_cover,
        }

    def _check_threesum(self, problem: str, seed: int, args) -> Optional[Dict[str, object]]:
        solver = self.services['solver_service']
        if problem in CLUSTERED_PROBLEMS:
            K, L = args.K or 4, args.L or 64
            A, B, S = gen_threesum_instance(InstanceKind.CLUSTERED, min(args.n, K * L), seed, K=K, L=L)
            desc = ClusterDesc(K, L)
            if problem == '3sum-clustered':
                got = solver.threesum_clustered(A, B, S, desc, desc).hits
            else:
                got = solver.threesum_one_clustered(A, B, S, desc).hits
        else:
            d = 1 if problem == '3sum-fft' else args.d
            A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, args.n, seed, d=d)
            got = solver.problems[problem](A, B, S).hits
        return _diff(solver.threesum_brute(A, B, S).hits, got)

    def _check_minplus(self, seed: int, args) -> Optional[Dict[str, object]]:
        rng = np.random.default_rng(seed)
        a = gen_monotone_sequence(args.n, args.c, rng)
        b = gen_monotone_sequence(args.n, args.c, rng)
        got = self.services['minplus_service'].minplus_bounded_monotone(a, b, args.c)
        return _first_difference(minplus_naive(a, b), got)

    def _check_minplus_differences(self, seed: int, args) -> Optional[Dict[str, object]]:
        rng = np.random.default_rng(seed)
        a = np.cumsum(rng.integers(-args.c, args.c + 1, size=args.n)).tolist()
        b = np.cumsum(rng.integers(-args.c, args.c + 1, size=args.n)).tolist()
        got = self.services['minplus_service'].minplus_bounded_differences(a, b, args.c)
        return _first_difference(minplus_naive(a, b), got)

    def _check_hist(self, seed: int, args) -> Optional[Dict[str, object]]:
        text = gen_string(args.n, 2, np.random.default_rng(seed))
        minplus = self.services['minplus_service']
        index = minplus.histindex_build_binary(text)
        truth = substring_histograms(text, 2)
        for zeros in range(args.n + 1):
            for ones in range(args.n + 1 - zeros):
                if minplus.histindex_query(index, zeros, ones) != ((zeros, ones) in truth):
                    return {'string': text, 'query': [zeros, ones], 'expected': (zeros, ones) in truth}
        return None

    def _hist_queries(self, text: str, alphabet: int, rng: np.random.Generator):
        truth = substring_histograms(text, alphabet)
        present = sorted(truth)
        picks = [present[i] for i in rng.integers(len(present), size=min(len(present), 32))]
        noise = rng.integers(0, max(len(text) // alphabet, 1) + 2, size=(32, alphabet)).tolist()
        return [list(q) for q in picks] + noise, truth

    def _check_hist_offline(self, seed: int, args) -> Optional[Dict[str, object]]:
        rng = np.random.default_rng(seed)
        text = gen_string(args.n, args.alphabet, rng)
        queries, truth = self._hist_queries(text, args.alphabet, rng)
        answers = self.services['minplus_service'].hist_offline_queries(text, queries, args.alphabet)
        for q, got in zip(queries, answers):
            if got != (tuple(q) in truth):
                return {'string': text, 'query': q, 'expected': not got}
        return None

    def _check_hist_online(self, seed: int, args) -> Optional[Dict[str, object]]:
        rng = np.random.default_rng(seed)
        text = gen_string(args.n, args.alphabet, rng)
        queries, truth = self._hist_queries(text, args.alphabet, rng)
        histogram = self.services['online_service'].hist_online(text, args.alphabet)
        for q in queries:
            got = histogram.query(q)
            if got != (tuple(q) in truth):
                return {'string': text, 'query': q, 'expected': not got}
        return None

    def _check_online(self, seed: int, args) -> Optional[Dict[str, object]]:
        rng = np.random.default_rng(seed)
        A, B, _ = gen_threesum_instance(InstanceKind.MONOTONE, args.n, seed, d=args.d)
        online = self.services['online_service']
        struct = online.build_online(A, B, ell=args.ell, P=args.P)
        sums = PointSet.from_array((A.array[:, None, :] + B.array[None, :, :]).reshape(-1, A.dim))
        probes = np.concatenate((sums.array[rng.integers(len(sums), size=32)],
                                 rng.integers(0, sums.universe + 1, size=(32, A.dim))))
        for p in probes.tolist():
            if online.query_online(struct, p) != (tuple(p) in sums):
                return {'query': p, 'expected': tuple(p) in sums}
        return None

    def _check_universe(self, seed: int, args) -> Optional[Dict[str, object]]:
        rng = np.random.default_rng(seed)
        top = 4 * args.n
        A0 = PointSet.from_values(rng.choice(top, size=args.n, replace=False).tolist())
        B0 = PointSet.from_values(rng.choice(top, size=args.n, replace=False).tolist())
        online = self.services['online_service']
        solver = self.services['solver_service']
        pu = online.preproc_universe_no_S(A0, B0)
        for _ in range(8):
            A = PointSet.from_values(a for a in A0.values() if rng.random() < 0.5)
            B = PointSet.from_values(b for b in B0.values() if rng.random() < 0.5)
            S = PointSet.from_values(rng.integers(0, 2 * top, size=args.n).tolist())
            failure = _diff(solver.threesum_brute(A, B, S).hits, online.query_universe(pu, A, B, S).hits)
            if failure is not None:
                return failure
        return None

    def _check_cover(self, seed: int, args) -> Optional[Dict[str, object]]:
        rng = np.random.default_rng(seed)
        top = 4 * args.n
        A = PointSet.from_values(rng.choice(top, size=args.n, replace=False).tolist())
        B = PointSet.from_values(rng.choice(top, size=args.n, replace=False).tolist())
        S = PointSet.from_values(rng.choice(2 * top, size=args.n, replace=False).tolist())
        bsg = self.services['bsg_service']
        cover = bsg.bsg_cover(A, B, S, args.alpha, args.variant, verify=args.variant == "rand")
        audit = bsg.verify_cover(cover, A, B, S)
        return None if audit.passed else audit.to_dict()


def _first_difference(expected, got) -> Optional[Dict[str, object]]:
    if len(expected) != len(got):
        return {'kind': 'length', 'expected': len(expected), 'got': len(got)}
    for k, (want, have) in enumerate(zip(expected, got)):
        if want != have:
            return {'index': k, 'expected': want, 'got': have}
    return None
