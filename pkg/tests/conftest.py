"""
Shared fixtures for the sumset toolkit tests
"""
import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, 'shared'))
sys.path.insert(0, ROOT)

import numpy as np
import pytest

from sumset_toolkit.settings import Settings
from sumset_toolkit.services.sumset_fft import SumsetService
from sumset_toolkit.services.bsg import BSGService
from sumset_toolkit.services.solvers import SolverService
from sumset_toolkit.services.minplus_hist import MinPlusService
from sumset_toolkit.services.online_preproc import OnlineService


@pytest.fixture
def settings():
    """Seeded default settings"""
    return Settings(seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sumset_service(settings):
    return SumsetService(settings)


@pytest.fixture
def bsg_service(settings):
    return BSGService(settings)


@pytest.fixture
def solver(settings):
    """Solver wired to seeded sumset and BSG services"""
    return SolverService(settings)


@pytest.fixture
def fft_solver():
    """Solver whose cost model always prefers the FFT path on bicliques"""
    return SolverService(Settings(seed=7, fft_cost_factor=1e-6))


@pytest.fixture
def minplus_service(solver):
    return MinPlusService(solver)


@pytest.fixture
def online_service(settings, solver):
    return OnlineService(settings, solver)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    """Keep SUMSET_* variables from the caller's shell out of every test"""
    for name in list(os.environ):
        if name.startswith('SUMSET_'):
            monkeypatch.delenv(name, raising=False)
