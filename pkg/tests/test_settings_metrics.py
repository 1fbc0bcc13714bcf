"""
Tests for settings, bench metrics and structured logging
Run with: python -m pytest tests/test_settings_metrics.py -v
"""
import io
import json
import logging

import pytest
from pydantic import ValidationError

from sumset_toolkit.settings import Settings
from sumset_toolkit.services.metrics import REFERENCE_EXPONENT, BenchRecord, MetricsService
from sumset_toolkit.services.solvers import monotone_exponents
from sumset_toolkit.services.utility import UtilityService, clear_run_context, get_run_id, set_run_context


# ============== Settings Tests ==============
class TestSettings:
    """Defaults, environment and overrides"""

    def test_defaults(self):
        settings = Settings()
        assert settings.dense_cap == 2 ** 22
        assert settings.seed is None
        assert not settings.deterministic

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv('SUMSET_SEED', '42')
        monkeypatch.setenv('SUMSET_DETERMINISTIC', 'true')
        monkeypatch.setenv('SUMSET_HASH_LEVELS', '3')
        settings = Settings.from_env()
        assert settings.seed == 42
        assert settings.deterministic
        assert settings.hash_levels == 3

    def test_overrides_win_over_env(self, monkeypatch):
        monkeypatch.setenv('SUMSET_SEED', '42')
        assert Settings.from_env(seed=5).seed == 5

    def test_with_overrides_skips_none(self):
        settings = Settings(seed=3).with_overrides(seed=None, debug=True)
        assert settings.seed == 3
        assert settings.debug

    def test_frozen(self):
        with pytest.raises(ValidationError):
            Settings().seed = 4

    def test_validation(self):
        with pytest.raises(ValidationError):
            Settings(hash_levels=0)
        with pytest.raises(ValidationError):
            Settings(seed=-1)
        with pytest.raises(ValidationError):
            Settings.from_env({'SUMSET_DENSE_CAP': 'lots'})


# ============== Metrics Tests ==============
class TestMetrics:
    """Timers, log-log fits and bench summaries"""

    def test_fit_recovers_exponent(self):
        metrics = MetricsService()
        sizes = [2 ** k for k in range(6, 12)]
        fit = metrics.fit_loglog(sizes, [3 * n ** 1.5 for n in sizes])
        assert fit.slope == pytest.approx(1.5, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.points == 6

    def test_fit_needs_two_points(self):
        with pytest.raises(ValueError):
            MetricsService().fit_loglog([4], [16])

    def test_timer(self):
        metrics = MetricsService()
        metrics.start_timer('solve', 'r1')
        assert metrics.end_timer('solve', 'r1') >= 0
        assert metrics.end_timer('solve', 'r1') is None
        assert metrics.summary('solve')['count'] == 1

    def test_summarize_bench(self):
        records = [BenchRecord(n, '3sum-brute', 0, rep, 0.001 * n, {'total': n * n}, 0)
                   for n in (16, 32, 64, 128) for rep in range(2)]
        summary = MetricsService().summarize_bench(records)
        assert summary['sizes'] == [16, 32, 64, 128]
        assert summary['work_fit']['slope'] == pytest.approx(2.0)
        assert summary['time_fit']['slope'] == pytest.approx(1.0)
        assert summary['reference_exponent'] == REFERENCE_EXPONENT

    def test_record_json(self):
        record = json.loads(BenchRecord(8, 'x', 1, 0, 0.5, {'total': 3}, 2).to_json())
        assert record['size'] == 8
        assert 'timestamp' in record
        assert record['params'] == {}
        assert record['verified'] is None

    def test_record_carries_params_and_status(self):
        record = BenchRecord(8, '3sum-monotone', 1, 0, 0.5, {'total': 3}, 2,
                             params={'ell': 4.0, 'alpha': 0.5}, verified=True)
        loaded = json.loads(record.to_json())
        assert loaded['params'] == {'ell': 4.0, 'alpha': 0.5}
        assert loaded['verified'] is True

    def test_summary_verification_status(self):
        """None when unchecked, False as soon as one checked run disagrees"""
        metrics = MetricsService()

        def records(*statuses):
            return [BenchRecord(n, 'x', 0, 0, 0.01 * n, {'total': n}, 0, verified=status)
                    for n, status in zip((16, 32, 64, 128), statuses)]

        assert metrics.summarize_bench(records(None, None, None, None))['verified'] is None
        assert metrics.summarize_bench(records(True, True, None, True))['verified'] is True
        assert metrics.summarize_bench(records(True, False, True, True))['verified'] is False

    def test_reference_exponent_is_planar_root(self):
        """6z^2 - 9z - 4 = 0 at the stored value, and bench can pass another d's root"""
        z = REFERENCE_EXPONENT
        assert abs(6 * z * z - 9 * z - 4) < 0.01
        assert REFERENCE_EXPONENT == round(monotone_exponents(2)[2], 3)
        records = [BenchRecord(n, 'x', 0, 0, 1.0, {'total': n}, 0) for n in (16, 32)]
        assert MetricsService().summarize_bench(records, reference_exponent=1.5)['reference_exponent'] == 1.5


# ============== Logging Tests ==============
class TestLogging:
    """JSON log lines carry the run context"""

    def test_json_fields(self):
        stream = io.StringIO()
        UtilityService.setup_logging(component_name="sumset-test", stream=stream)
        set_run_context(run_id="abc123", command="solve")
        try:
            logging.getLogger("sumset_toolkit.test").info("solved")
        finally:
            clear_run_context()
        line = json.loads(stream.getvalue().strip().splitlines()[-1])
        assert line['message'] == "solved"
        assert line['severity'] == "INFO"
        assert line['component'] == "sumset-test"
        assert line['run_id'] == "abc123"
        assert line['command'] == "solve"

    def test_run_context_cleared(self):
        set_run_context(run_id="r")
        clear_run_context()
        assert get_run_id() == ''

    def test_formatting_helpers(self):
        assert UtilityService.format_duration(61.5) == "00:01:01.500"
        assert UtilityService.format_count(1500) == "1.5k"
        assert len(UtilityService.new_run_id()) == 12
