"""
Building blocks: traces, hazard estimation, HRO labeling, features and the GBDT model.
"""

from hrcache_sim.core.config import GbdtParams, SyntheticConfig, WindowConfig
from hrcache_sim.core.errors import HrCacheError
from hrcache_sim.core.features import FeatureTable, FeatureVector
from hrcache_sim.core.hazard import HazardTable, KernelHazardEstimator, ClosedFormHazard
from hrcache_sim.core.model import GbdtModel, TrainingSet
from hrcache_sim.core.oracle import HroMode, SamplePlan
from hrcache_sim.core.trace import Request, Trace

__all__ = [
    'GbdtParams',
    'SyntheticConfig',
    'WindowConfig',
    'HrCacheError',
    'FeatureTable',
    'FeatureVector',
    'HazardTable',
    'KernelHazardEstimator',
    'ClosedFormHazard',
    'GbdtModel',
    'TrainingSet',
    'HroMode',
    'SamplePlan',
    'Request',
    'Trace',
]
