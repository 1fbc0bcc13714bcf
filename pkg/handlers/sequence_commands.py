"""
Sequence command handlers: hist and minplus
"""
import logging

from sumset_toolkit.services.core_model import format_sequence, parse_sequence, parse_string, read_text, write_text

from .base import BaseHandler

logger = logging.getLogger(__name__)

HIST_MODES = ('binary', 'offline', 'online')


class HistCommandHandler(BaseHandler):
    """Handler for hist: build an index over a string, answer 'true'/'false' per query line"""

    def handle(self, args) -> int:
        text, alphabet = parse_string(read_text(args.string))
        minplus = self.services['minplus_service']
        queries = list(self.query_lines(args.queries))
        mode = args.mode or ('binary' if alphabet == 2 else 'offline')

        if mode == 'binary':
            if alphabet != 2:
                raise ValueError("binary mode needs a string over {0, 1}")
            index = minplus.histindex_build_binary(text)
            answers = []
            for q in queries:
                if len(q) != 2:
                    raise ValueError(f"binary queries are 'zeros ones' pairs, got {q}")
                answers.append(minplus.histindex_query(index, q[0], q[1]))
        elif mode == 'offline':
            answers = minplus.hist_offline_queries(text, queries, alphabet)
        else:
            histogram = self.services['online_service'].hist_online(text, alphabet, delta=args.delta)
            answers = [histogram.query(q) for q in queries]

        for answer in answers:
            self.write("true" if answer else "false")
        logger.info(f"Answered {len(answers)} {mode} histogram queries on a string of length {len(text)}")
        return self.constants['EXIT_OK']


class MinPlusCommandHandler(BaseHandler):
    """Handler for minplus: (min,+) convolution of two sequence files"""

    def handle(self, args) -> int:
        minplus = self.services['minplus_service']
        a, c_a = parse_sequence(read_text(args.a))
        b, c_b = parse_sequence(read_text(args.b))

        if args.differences is not None:
            result = minplus.minplus_bounded_differences(a, b, args.differences)
            c = args.differences
        else:
            c = max(c_a, c_b)
            result = minplus.minplus_bounded_monotone(a, b, c)

        text = format_sequence(result, c)
        if args.out:
            write_text(args.out, text)
            logger.info(f"Wrote {len(result)} convolution entries to {args.out}")
        else:
            self.write(text)
        return self.constants['EXIT_OK']
