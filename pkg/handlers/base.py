"""
Base handler class for command handlers
"""

import json
import sys
from typing import Any, Dict, Iterable, List, Optional

from sumset_toolkit.services.core_model import PointSet, parse_point_set, read_text


class BaseHandler:
    """Base class for all command handlers"""

    def __init__(self, services, constants):
        """
        Initialize handler with services and constants

        Args:
            services: Dict containing service instances (solver_service, metrics_service, etc.)
            constants: Dict containing constants (EXIT_OK, DEFAULT_BENCH_SIZES, etc.)
        """
        self.services = services
        self.constants = constants
        self.out = services.get('stdout') or sys.stdout

    def handle(self, args) -> int:
        """
        Handle the command

        Args:
            args: argparse namespace of the subcommand

        Returns:
            Process exit code
        """
        raise NotImplementedError("Subclasses must implement handle method")

    # ---------- shared IO ----------

    def emit(self, record: Any) -> None:
        """One JSON object per line on stdout"""
        self.out.write(json.dumps(record, sort_keys=True, default=_json_default) + "\n")

    def write(self, text: str) -> None:
        self.out.write(text if text.endswith("\n") else text + "\n")

    @staticmethod
    def load_set(path: Optional[str]) -> Optional[PointSet]:
        return parse_point_set(read_text(path)) if path else None

    @staticmethod
    def query_lines(path: Optional[str]) -> Iterable[List[int]]:
        """Integer vectors, one per non-empty line, from a file or stdin"""
        stream = open(path) if path else sys.stdin
        try:
            for line in stream:
                line = line.strip()
                if line:
                    try:
                        yield [int(t) for t in line.split()]
                    except ValueError as e:
                        raise ValueError(f"malformed query line {line!r}") from e
        finally:
            if path:
                stream.close()

    @staticmethod
    def as_points(s: PointSet) -> List[List[int]]:
        return s.array.tolist()


def _json_default(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    return str(value)
