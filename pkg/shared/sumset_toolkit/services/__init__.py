"""
Services module for the sumset toolkit
One service per problem family, plus logging and bench metrics
"""
from .utility import UtilityService, set_run_context, get_run_id, clear_run_context
from .metrics import MetricsService, BenchRecord, LogLogFit, REFERENCE_EXPONENT
from .core_model import PointSet, GridConfig, ClusterDesc, WorkCounter, InstanceKind
from .sumset_fft import SumsetService, PseudoAdditiveFn, HashFamily, FamilyAudit
from .bsg import BSGService, BipartiteGraph, BSGCover, CoverAudit
from .solvers import SolverService, SolveParams, ThreeSumResult
from .minplus_hist import MinPlusService, HistIndex, SumsetBoundary, minplus_naive
from .online_preproc import OnlineService, OnlineStruct, OnlineParams, PreprocUniverse, OnlineHistogram

__all__ = [
    # Ambient services
    'UtilityService', 'set_run_context', 'get_run_id', 'clear_run_context',
    'MetricsService', 'BenchRecord', 'LogLogFit', 'REFERENCE_EXPONENT',
    # Model
    'PointSet', 'GridConfig', 'ClusterDesc', 'WorkCounter', 'InstanceKind',
    # Algorithms
    'SumsetService', 'PseudoAdditiveFn', 'HashFamily', 'FamilyAudit',
    'BSGService', 'BipartiteGraph', 'BSGCover', 'CoverAudit',
    'SolverService', 'SolveParams', 'ThreeSumResult',
    'MinPlusService', 'HistIndex', 'SumsetBoundary', 'minplus_naive',
    'OnlineService', 'OnlineStruct', 'OnlineParams', 'PreprocUniverse', 'OnlineHistogram',
]
