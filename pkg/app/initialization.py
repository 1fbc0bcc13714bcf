"""
Service initialization module for the sumset toolkit CLI
"""

import logging
import sys
from typing import Any, Dict, Optional

import numpy as np

from sumset_toolkit.settings import Settings
from sumset_toolkit.services.utility import UtilityService
from sumset_toolkit.services.metrics import MetricsService
from sumset_toolkit.services.sumset_fft import SumsetService
from sumset_toolkit.services.bsg import BSGService
from sumset_toolkit.services.solvers import SolverService
from sumset_toolkit.services.minplus_hist import MinPlusService
from sumset_toolkit.services.online_preproc import OnlineService

# Import handlers
from handlers import CommandRouter


class ServiceContainer:
    """Container for all initialized services"""

    def __init__(self, settings: Optional[Settings] = None, stdout=None):
        self.settings: Optional[Settings] = settings
        self.stdout = stdout or sys.stdout

        self.sumset_service: Optional[SumsetService] = None
        self.bsg_service: Optional[BSGService] = None
        self.solver_service: Optional[SolverService] = None
        self.minplus_service: Optional[MinPlusService] = None
        self.online_service: Optional[OnlineService] = None
        self.metrics_service: Optional[MetricsService] = None
        self.command_router: Optional[CommandRouter] = None

        self.initialized = False

        # Constants
        self.EXIT_OK = 0
        self.EXIT_MISMATCH = 1
        self.EXIT_USAGE = 2
        self.DEFAULT_BENCH_SIZES = [2 ** k for k in range(9, 15)]
        self.MIN_BENCH_SIZES = 4

    def initialize(self, **overrides: Any) -> bool:
        """Load settings, then build every service from one seeded generator"""
        if self.initialized:
            return True

        base = self.settings or Settings.from_env()
        self.settings = base.with_overrides(**overrides)
        if self.settings.seed is None:
            chosen = int(np.random.SeedSequence().entropy % 2 ** 32)
            self.settings = self.settings.with_overrides(seed=chosen)
            logging.info(f"No seed given, drew seed {chosen} from OS entropy")
        if self.settings.debug:
            logging.getLogger().setLevel(logging.DEBUG)

        rng = np.random.default_rng(self.settings.seed)
        self.sumset_service = SumsetService(self.settings, rng)
        self.bsg_service = BSGService(self.settings, rng)
        self.solver_service = SolverService(self.settings, self.sumset_service, self.bsg_service)
        self.minplus_service = MinPlusService(self.solver_service)
        self.online_service = OnlineService(self.settings, self.solver_service)
        self.metrics_service = MetricsService()

        self.command_router = CommandRouter(self._create_services_dict(), self._create_constants_dict())
        self.initialized = True
        logging.info(f"Services initialized (seed={self.settings.seed}, deterministic={self.settings.deterministic})")
        return True

    def _create_services_dict(self) -> Dict[str, Any]:
        """Create services dictionary for command handlers"""
        return {
            'settings': self.settings,
            'sumset_service': self.sumset_service,
            'bsg_service': self.bsg_service,
            'solver_service': self.solver_service,
            'minplus_service': self.minplus_service,
            'online_service': self.online_service,
            'metrics_service': self.metrics_service,
            'UtilityService': UtilityService,
            'stdout': self.stdout,
        }

    def _create_constants_dict(self) -> Dict[str, Any]:
        """Create constants dictionary for command handlers"""
        return {
            'EXIT_OK': self.EXIT_OK,
            'EXIT_MISMATCH': self.EXIT_MISMATCH,
            'EXIT_USAGE': self.EXIT_USAGE,
            'DEFAULT_BENCH_SIZES': self.DEFAULT_BENCH_SIZES,
            'MIN_BENCH_SIZES': self.MIN_BENCH_SIZES,
        }
