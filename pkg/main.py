import argparse
import logging
import os
import sys

# Run from a checkout without installing shared/
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'shared'))

from sumset_toolkit import __version__
from sumset_toolkit.services.utility import UtilityService, set_run_context, clear_run_context
from app.initialization import ServiceContainer

logger = logging.getLogger("sumset_toolkit.cli")

PROBLEMS = ['3sum-brute', '3sum-fft', '3sum-monotone', '3sum-monotone-offline', '3sum-clustered', '3sum-one-clustered']
VERIFY_PROBLEMS = PROBLEMS + ['minplus', 'minplus-differences', 'hist', 'hist-offline', 'hist-online',
                              'online', 'universe', 'bsg-cover']
KINDS = ['monotone-d', 'clustered', 'bounded-monotone-seq', 'string']


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, default=None, help='Seed for instances and randomized algorithms')
    parser.add_argument('--deterministic', action='store_true', help='Deterministic hash families and covers')
    parser.add_argument('--debug', action='store_true', help='Per-step DEBUG logs')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sumset', description='Sumsets, BSG covers and 3SUM+ solvers')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen', help='Generate a seeded instance')
    _common(p)
    p.add_argument('--kind', choices=KINDS, default='monotone-d')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--d', type=int, default=2)
    p.add_argument('--K', type=int)
    p.add_argument('--L', type=int)
    p.add_argument('--c', type=int, default=2)
    p.add_argument('--alphabet', type=int, default=2)
    p.add_argument('--density', type=float, default=0.5)
    p.add_argument('--triple', action='store_true', help='Write an (A, B, S) 3SUM+ instance')
    p.add_argument('--out', help='Output file (stdout when absent)')
    p.add_argument('--out-dir', dest='out_dir', help='Directory for A.txt, B.txt, S.txt with --triple')

    p = sub.add_parser('solve', help='Run one 3SUM+ solver')
    _common(p)
    p.add_argument('--problem', choices=PROBLEMS, required=True)
    p.add_argument('--A', required=True)
    p.add_argument('--B', required=True)
    p.add_argument('--S', required=True)
    p.add_argument('--K', type=int, help='Cluster count (inferred when absent)')
    p.add_argument('--L', type=int, help='Cluster interval length')
    p.add_argument('--ell', type=int, help='Grid side (tuned from n when absent)')
    p.add_argument('--alpha', type=float, help='Biclique density parameter in (0, 1]')
    p.add_argument('--recurse', type=int, help='Recursion depth on remainder cell pairs')
    p.add_argument('--brute-cutoff', dest='brute_cutoff', type=int, help='Grid side at or below which recursion stops')
    p.add_argument('--witnesses', action='store_true')
    p.add_argument('--out', help='Write the hit set as a point-set file')

    p = sub.add_parser('verify', help='Compare a solver with its oracle')
    _common(p)
    p.add_argument('--problem', choices=VERIFY_PROBLEMS, default='3sum-monotone')
    p.add_argument('--seeds', type=int, default=50)
    p.add_argument('--n', type=int, default=128)
    p.add_argument('--d', type=int, default=2)
    p.add_argument('--K', type=int)
    p.add_argument('--L', type=int)
    p.add_argument('--c', type=int, default=2)
    p.add_argument('--alphabet', type=int, default=2)
    p.add_argument('--alpha', type=float, default=0.25)
    p.add_argument('--variant', choices=['det', 'rand'], default='rand')
    p.add_argument('--ell', type=int)
    p.add_argument('--P', type=float)
    p.add_argument('--A')
    p.add_argument('--B')
    p.add_argument('--S')
    p.add_argument('--result', help='Hit set to check against the brute-force oracle on --A --B --S')

    p = sub.add_parser('bench', help='Work and time scaling over a size ladder')
    _common(p)
    p.add_argument('--problem', choices=PROBLEMS[:4], default='3sum-monotone')
    p.add_argument('--sizes', type=int, nargs='+')
    p.add_argument('--reps', type=int, default=3)
    p.add_argument('--d', type=int, default=2)
    p.add_argument('--verify', action='store_true', help='Check every run against brute force')

    p = sub.add_parser('bsg', help='Biclique cover of A x B against S')
    _common(p)
    p.add_argument('--A', required=True)
    p.add_argument('--B', required=True)
    p.add_argument('--S', required=True)
    p.add_argument('--alpha', type=float, default=0.25)
    p.add_argument('--variant', choices=['det', 'rand'], default='rand')
    p.add_argument('--verify', action='store_true', help='Retry randomized covers until the audit passes')

    p = sub.add_parser('hash-family', help='Pseudo-perfect hash family for a target set')
    _common(p)
    p.add_argument('--T', required=True)
    p.add_argument('--mode', choices=['rand', 'det', 'randomized', 'deterministic'], default='rand')
    p.add_argument('--levels', type=int)
    p.add_argument('--constant', type=float)
    p.add_argument('--samples', type=int, default=10_000)
    p.add_argument('--table', action='store_true', help='Print the witness table')

    p = sub.add_parser('hist', help='Histogram indexing queries on a string')
    _common(p)
    p.add_argument('--string', required=True)
    p.add_argument('--mode', choices=['binary', 'offline', 'online'])
    p.add_argument('--queries', help='Query file (stdin when absent)')
    p.add_argument('--delta', type=float)

    p = sub.add_parser('minplus', help='(min,+) convolution of two sequences')
    _common(p)
    p.add_argument('--a', required=True)
    p.add_argument('--b', required=True)
    p.add_argument('--differences', type=int, help='Inputs have consecutive differences bounded by this value')
    p.add_argument('--out')

    p = sub.add_parser('online', help='Online sumset membership')
    _common(p)
    p.add_argument('--A', required=True)
    p.add_argument('--B', required=True)
    p.add_argument('--ell', type=int)
    p.add_argument('--P', type=float)
    p.add_argument('--delta', type=float)
    p.add_argument('--queries', help='Query file (stdin when absent)')
    p.add_argument('--audit', action='store_true')

    p = sub.add_parser('universe', help='3SUM+ on subsets of preprocessed universes')
    _common(p)
    p.add_argument('--A0', required=True)
    p.add_argument('--B0', required=True)
    p.add_argument('--S0')
    p.add_argument('--A', required=True)
    p.add_argument('--B', required=True)
    p.add_argument('--S', required=True)
    p.add_argument('--alpha', type=float)
    p.add_argument('--t', type=float)
    p.add_argument('--witnesses', action='store_true')
    return parser


def main(argv=None, container: ServiceContainer = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    UtilityService.setup_logging(component_name="sumset-cli")
    run_id = UtilityService.new_run_id()
    set_run_context(run_id=run_id, command=args.command)

    container = container or ServiceContainer()
    try:
        container.initialize(seed=args.seed, deterministic=args.deterministic or None, debug=args.debug or None)
        if args.seed is None:
            args.seed = container.settings.seed
        code = container.command_router.route(args)
        return container.EXIT_USAGE if code is None else code
    except (ValueError, KeyError, OSError, OverflowError, RuntimeError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=args.debug)
        print(f"error: {e}", file=sys.stderr)
        return container.EXIT_USAGE
    finally:
        clear_run_context()


if __name__ == '__main__':
    sys.exit(main())
