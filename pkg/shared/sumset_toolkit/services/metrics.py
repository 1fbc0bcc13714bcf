"""
Metrics Service - Timers, bench records and log-log scaling fits
"""
import json
import logging
import statistics
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .utility import UtilityService

# Monotone 3SUM+ exponent z for d = 2, the root of 6z^2 - 9z - 4; bench passes the value for its own d
REFERENCE_EXPONENT = 1.859


@dataclass
class BenchRecord:
    """One timed solve inside a bench run"""
    size: int
    algorithm: str
    seed: int
    rep: int
    seconds: float
    work: Dict[str, int]
    hits: int
    params: Dict[str, float] = field(default_factory=dict)
    verified: Optional[bool] = None
    timestamp: str = field(default_factory=UtilityService.utc_timestamp)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class LogLogFit:
    """Least-squares line through (log2 x, log2 y)"""
    slope: float
    intercept: float
    r_squared: float
    points: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'slope': round(self.slope, 4),
            'intercept': round(self.intercept, 4),
            'r_squared': round(self.r_squared, 4),
            'points': self.points,
        }


class MetricsService:
    """Service for timing solver stages and summarising bench runs"""

    def __init__(self):
        self.metrics_cache = defaultdict(list)
        self.active_timers = {}

    def start_timer(self, metric_name: str, run_id: str) -> float:
        """Start a timer for a specific metric"""
        start_time = time.perf_counter()
        self.active_timers[f"{metric_name}:{run_id}"] = start_time
        return start_time

    def end_timer(self, metric_name: str, run_id: str) -> Optional[float]:
        """End a timer and record the duration"""
        timer_key = f"{metric_name}:{run_id}"
        start_time = self.active_timers.pop(timer_key, None)

        if start_time is None:
            logging.warning(f"No timer found for {timer_key}")
            return None

        duration = time.perf_counter() - start_time
        self.metrics_cache[metric_name].append(duration)
        return duration

    def summary(self, metric_name: str) -> Dict[str, float]:
        """Count, mean, median and p95 of the recorded durations"""
        durations = self.metrics_cache.get(metric_name, [])
        if not durations:
            return {'count': 0}
        return {
            'count': len(durations),
            'avg_duration': statistics.mean(durations),
            'median_duration': statistics.median(durations),
            'p95_duration': self._percentile(durations, 95) if len(durations) > 1 else durations[0],
        }

    def fit_loglog(self, xs: Sequence[float], ys: Sequence[float]) -> LogLogFit:
        """Fit log2 y = slope * log2 x + intercept; non-positive pairs are skipped"""
        pairs = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
        if len(pairs) < 2:
            raise ValueError("a log-log fit needs at least two positive points")
        lx = np.log2(np.array([p[0] for p in pairs], dtype=float))
        ly = np.log2(np.array([p[1] for p in pairs], dtype=float))
        slope, intercept = np.polyfit(lx, ly, 1)
        residual = ly - (slope * lx + intercept)
        spread = float(((ly - ly.mean()) ** 2).sum())
        r_squared = 1.0 - float((residual ** 2).sum()) / spread if spread > 0 else 1.0
        return LogLogFit(float(slope), float(intercept), r_squared, len(pairs))

    def summarize_bench(self, records: List[BenchRecord],
                        reference_exponent: float = REFERENCE_EXPONENT) -> Dict[str, Any]:
        """Median work and time per size, and the fitted exponents of both"""
        by_size = defaultdict(list)
        for record in records:
            by_size[record.size].append(record)
        sizes = sorted(by_size)
        work = [statistics.median(r.work['total'] for r in by_size[s]) for s in sizes]
        seconds = [statistics.median(r.seconds for r in by_size[s]) for s in sizes]
        return {
            'sizes': sizes,
            'median_work': work,
            'median_seconds': seconds,
            'work_fit': self.fit_loglog(sizes, work).to_dict(),
            'time_fit': self.fit_loglog(sizes, seconds).to_dict(),
            'p95_seconds': self._percentile([r.seconds for r in records], 95),
            'reference_exponent': reference_exponent,
            'verified': self._verified(records),
        }

    @staticmethod
    def _verified(records: List[BenchRecord]) -> Optional[bool]:
        """None when no run was checked, else whether every checked run matched"""
        checked = [r.verified for r in records if r.verified is not None]
        return all(checked) if checked else None

    def _percentile(self, data: List[float], percentile: int) -> float:
        """Calculate percentile of a list of values"""
        size = len(data)
        sorted_data = sorted(data)
        index = int(size * percentile / 100)
        if index >= size:
            index = size - 1
        return sorted_data[index]
