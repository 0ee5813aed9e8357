"""Simulation lab for file-bundle caching: online/offline eviction
policies, workload generators, a virtual-cache distributed reduction and
competitive-ratio bounds."""

from .core import CacheState, MissLog, Trace, apply_update, is_miss, is_miss_distributed
from .policies import PolicyKind, run_policy

__all__ = ["CacheState", "MissLog", "Trace", "apply_update", "is_miss",
           "is_miss_distributed", "PolicyKind", "run_policy"]
__version__ = "0.1.0"
