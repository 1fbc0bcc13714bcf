"""
Utility Service - Logging setup, run context and small formatting helpers
"""

import logging
import uuid
from datetime import datetime

import pytz


# Run context for correlating all records of one CLI invocation
_run_context = {}


def set_run_context(run_id=None, command=None):
    """Set run context for the current invocation. All log records will include these fields."""
    if run_id is not None:
        _run_context['run_id'] = run_id
    if command is not None:
        _run_context['command'] = command


def get_run_id():
    """Return current run_id ('' before set_run_context)."""
    return _run_context.get('run_id', '')


def clear_run_context():
    _run_context.clear()


class _RunContextFilter(logging.Filter):
    """Injects run_id and command into every log record."""
    def filter(self, record):
        record.run_id = _run_context.get('run_id', '')
        record.command = _run_context.get('command', '')
        return True


class UtilityService:
    """Service for general utility functions"""

    @staticmethod
    def setup_logging(component_name="sumset-toolkit", stream=None):
        """Configure structured JSON logging on stderr.

        Respects LOG_LEVEL environment variable:
        - DEBUG: per-step solver detail (cover sizes, crossover decisions)
        - INFO: one summary per solve (default)
        - WARNING: retries and anomalies only
        - ERROR: errors only

        stdout is left alone; it carries command results.
        """
        import sys
        import os

        logger = logging.getLogger()

        # Remove existing handlers
        for handler in logger.handlers[:]:
            logger.removeHandler(handler)

        handler = logging.StreamHandler(stream or sys.stderr)

        try:
            # v3+: pythonjsonlogger.json; legacy: pythonjsonlogger.jsonlogger
            try:
                from pythonjsonlogger.json import JsonFormatter as _BaseJsonFormatter
            except ImportError:
                from pythonjsonlogger.jsonlogger import JsonFormatter as _BaseJsonFormatter

            class ToolkitJsonFormatter(_BaseJsonFormatter):
                def add_fields(self, log_record, record, message_dict):
                    super(ToolkitJsonFormatter, self).add_fields(log_record, record, message_dict)

                    if not log_record.get('severity'):
                        log_record['severity'] = record.levelname

                    if not log_record.get('timestamp'):
                        log_record['timestamp'] = UtilityService.utc_timestamp()

                    if not log_record.get('component'):
                        log_record['component'] = component_name

            formatter = ToolkitJsonFormatter('%(timestamp)s %(severity)s %(name)s %(message)s %(component)s %(run_id)s %(command)s')
        except ImportError:
            # Fallback to standard logging if python-json-logger not installed
            formatter = logging.Formatter(
                f'%(asctime)s [%(levelname)s] [{component_name}] %(name)s: %(message)s'
            )

        handler.setFormatter(formatter)
        handler.addFilter(_RunContextFilter())
        logger.handlers = [handler]

        log_level_str = os.environ.get('LOG_LEVEL', 'INFO').upper()
        log_level = getattr(logging, log_level_str, logging.INFO)
        logger.setLevel(log_level)

        logging.getLogger('sympy').setLevel(logging.WARNING)

    @staticmethod
    def new_run_id():
        """Short random id for one invocation"""
        return uuid.uuid4().hex[:12]

    @staticmethod
    def utc_timestamp():
        """Current UTC time as ISO-8601"""
        return datetime.now(pytz.utc).isoformat()

    @staticmethod
    def format_duration(seconds):
        """Format seconds into HH:MM:SS.mmm format"""
        millis = int((seconds - int(seconds)) * 1000)
        m, s = divmod(int(seconds), 60)
        h, m = divmod(m, 60)
        return f"{int(h):02d}:{int(m):02d}:{int(s):02d}.{millis:03d}"

    @staticmethod
    def format_count(value):
        """Format a work count with a metric suffix"""
        if value < 10 ** 3:
            return f"{value}"
        elif value < 10 ** 6:
            return f"{value / 10 ** 3:.1f}k"
        elif value < 10 ** 9:
            return f"{value / 10 ** 6:.1f}M"
        else:
            return f"{value / 10 ** 9:.2f}G"
