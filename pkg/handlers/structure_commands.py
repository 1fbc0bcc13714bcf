"""
Structure command handlers: bsg, hash-family, online, universe
"""
import logging

from sumset_toolkit.services.core_model import WorkCounter
from sumset_toolkit.services.sumset_fft import SumsetService

from .base import BaseHandler

logger = logging.getLogger(__name__)


class BsgCommandHandler(BaseHandler):
    """Handler for bsg: print a biclique cover of A x B against S and its audit"""

    def handle(self, args) -> int:
        bsg = self.services['bsg_service']
        A, B, S = self.load_set(args.A), self.load_set(args.B), self.load_set(args.S)
        cover = bsg.bsg_cover(A, B, S, args.alpha, args.variant, verify=args.verify)
        self.write(cover.describe())

        audit = bsg.verify_cover(cover, A, B, S)
        self.emit({'audit': audit.to_dict(), 'k': cover.k, 'remainder': len(cover.remainder), **cover.stats})
        if not audit.passed:
            logger.error(f"Cover audit failed: {audit.failures}")
            return self.constants['EXIT_MISMATCH']
        return self.constants['EXIT_OK']


class HashFamilyCommandHandler(BaseHandler):
    """Handler for hash-family: build a pseudo-perfect family for T"""

    def handle(self, args) -> int:
        settings = self.services['settings']
        sumset = self.services['sumset_service']
        if args.constant is not None or args.levels is not None:
            sumset = SumsetService(settings.with_overrides(prime_constant=args.constant, hash_levels=args.levels))

        T = self.load_set(args.T)
        family = sumset.build_family(T, args.mode, levels=args.levels)
        self.write(family.describe())
        if args.table:
            self.write(family.witness_table())

        audit = sumset.audit_family(family, T, args.levels)
        additive = all(sumset.check_pseudo_additive(fn, T.universe, samples=args.samples) for fn in family.fns)
        self.emit({'audit': audit.to_dict(), 'pseudo_additive': additive, **family.stats})
        if not (audit.passed and additive):
            logger.error(f"Family audit failed: {audit.to_dict()}")
            return self.constants['EXIT_MISMATCH']
        return self.constants['EXIT_OK']


class OnlineCommandHandler(BaseHandler):
    """Handler for online: build once from A and B, then answer one point per input line"""

    def handle(self, args) -> int:
        online = self.services['online_service']
        A, B = self.load_set(args.A), self.load_set(args.B)
        struct = online.build_online(A, B, ell=args.ell, P=args.P, delta=args.delta)
        if args.audit:
            report = online.audit_online(struct)
            self.emit({'audit': report, **struct.stats})
            if report['missing'] or report['spurious']:
                return self.constants['EXIT_MISMATCH']

        work = WorkCounter()
        for point in self.query_lines(args.queries):
            self.write("true" if online.query_online(struct, point, work) else "false")
        logger.info(f"Online queries answered, branches {dict(work.branches)}, pair probes {work.pair_ops}")
        return self.constants['EXIT_OK']


class UniverseCommandHandler(BaseHandler):
    """Handler for universe: preprocess A0, B0 (and S0), then solve one subset triple"""

    def handle(self, args) -> int:
        online = self.services['online_service']
        A0, B0 = self.load_set(args.A0), self.load_set(args.B0)
        if args.S0:
            pu = online.preproc_universe(A0, B0, self.load_set(args.S0), alpha=args.alpha,
                                         deterministic=args.deterministic or None)
        else:
            pu = online.preproc_universe_no_S(A0, B0, t=args.t, alpha=args.alpha,
                                              deterministic=args.deterministic or None)
        A, B, S = self.load_set(args.A), self.load_set(args.B), self.load_set(args.S)
        result = online.query_universe(pu, A, B, S, witnesses=args.witnesses)

        record = {'universe': pu.describe(), **result.record(), 'hits_list': self.as_points(result.hits)}
        if result.witnesses is not None:
            record['witnesses'] = [[list(s), list(a), list(b)] for s, (a, b) in result.witnesses.items()]
        self.emit(record)
        return self.constants['EXIT_OK']
