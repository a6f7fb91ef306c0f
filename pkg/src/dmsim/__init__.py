"""Deterministic-memory cache/DRAM simulator and WCET analysis toolkit."""

from .addrspace import BankPolicy, DmRegionSet, PageAllocator, PageTable
from .cache import BYPASS, CLS_BE, CLS_DM, HIT, MISS, CacheConfig, DmCache, PrivateCache
from .dram import DramConfig, DramController, Grant
from .engine import (
    L1Config,
    SimConfig,
    SimReport,
    export_rta,
    gen_trace,
    read_trace,
    run,
    write_trace,
)
from .errors import PageFaultError, SimulationError, ValidationError
from .geometry import Geometry, MemoryRequest
from .rta import PlatformParams, TaskParams, response_times

__version__ = "0.1.0"

__all__ = [
    "BankPolicy",
    "DmRegionSet",
    "PageAllocator",
    "PageTable",
    "BYPASS",
    "CLS_BE",
    "CLS_DM",
    "HIT",
    "MISS",
    "CacheConfig",
    "DmCache",
    "PrivateCache",
    "DramConfig",
    "DramController",
    "Grant",
    "L1Config",
    "SimConfig",
    "SimReport",
    "export_rta",
    "gen_trace",
    "read_trace",
    "run",
    "write_trace",
    "PageFaultError",
    "SimulationError",
    "ValidationError",
    "Geometry",
    "MemoryRequest",
    "PlatformParams",
    "TaskParams",
    "response_times",
    "__version__",
]
