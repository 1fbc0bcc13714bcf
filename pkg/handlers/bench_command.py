"""
Bench command handler: work and wall-time scaling over a size ladder
"""
import logging
from numbers import Real

from sumset_toolkit.services.core_model import InstanceKind, WorkCounter, gen_threesum_instance
from sumset_toolkit.services.metrics import BenchRecord
from sumset_toolkit.services.solvers import monotone_exponents

from .base import BaseHandler

logger = logging.getLogger(__name__)

PARAM_KEYS = ('ell', 'alpha', 'P')


def tuned_params(stats) -> dict:
    """Numeric solve parameters a run actually used"""
    return {key: float(stats[key]) for key in PARAM_KEYS if isinstance(stats.get(key), Real)}


class BenchCommandHandler(BaseHandler):
    """Handler for bench: one JSON record per run, then the log-log fit"""

    def handle(self, args) -> int:
        solver = self.services['solver_service']
        metrics = self.services['metrics_service']
        UtilityService = self.services['UtilityService']

        sizes = sorted(set(args.sizes or self.constants['DEFAULT_BENCH_SIZES']))
        if len(sizes) < self.constants['MIN_BENCH_SIZES']:
            raise ValueError(f"bench needs at least {self.constants['MIN_BENCH_SIZES']} distinct sizes, got {len(sizes)}")
        if args.problem not in solver.problems:
            raise ValueError(f"unknown problem {args.problem!r}; choose from {sorted(solver.problems)}")
        solve = solver.problems[args.problem]
        d = 1 if args.problem == '3sum-fft' else args.d

        records = []
        for n in sizes:
            for rep in range(args.reps):
                seed = args.seed + rep
                A, B, S = gen_threesum_instance(InstanceKind.MONOTONE, n, seed, d=d)
                run_id = UtilityService.new_run_id()
                work = WorkCounter()
                metrics.start_timer(args.problem, run_id)
                result = solve(A, B, S, work=work)
                seconds = metrics.end_timer(args.problem, run_id)
                verified = None
                if args.verify:
                    verified = result.hits == solver.threesum_brute(A, B, S).hits
                    if not verified:
                        logger.error(f"bench {args.problem} n={n} rep={rep}: hits differ from brute force")
                record = BenchRecord(n, args.problem, seed, rep, seconds, work.to_dict(), len(result.hits),
                                     params=tuned_params(result.stats), verified=verified)
                records.append(record)
                self.write(record.to_json())
                logger.info(f"bench {args.problem} n={n} rep={rep}: work {UtilityService.format_count(work.total)} "
                            f"in {UtilityService.format_duration(seconds)}")

        summary = metrics.summarize_bench(records, reference_exponent=round(monotone_exponents(d)[2], 3))
        summary['problem'] = args.problem
        summary['d'] = d
        self.emit({'summary': summary})
        if summary['verified'] is False:
            return self.constants['EXIT_MISMATCH']
        return self.constants['EXIT_OK']
