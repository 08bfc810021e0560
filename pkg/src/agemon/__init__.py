"""Simulated software-based self-testing for microcontroller ageing monitoring.

Models temperature- and ageing-dependent propagation delays, executes
self-test payloads at controlled clock frequencies, locates the maximum
error-free frequency by bisection, and computes degradation metrics across
temperature campaigns.
"""

from .physics import (
    AgeingState,
    GateLoad,
    MobilityModel,
    TransistorParams,
)
from .device import (
    CriticalPath,
    DeviceConfig,
    FlashBuffering,
    SimulatedDevice,
    Subsystem,
)
from .memory import FaultKind, FaultableMemory, MemoryFault
from .payloads import (
    DEFAULT_PAYLOADS,
    ErrorTransitionModel,
    Payload,
    PayloadName,
    PayloadOutcome,
    Status,
)
from .controller import (
    FrequencyResult,
    SearchConfig,
    SearchOutcome,
    find_mef,
    run_at_frequency,
    sweep,
)
from .analytics import CampaignReport, MefSeries, PayloadScore
from .campaign import CampaignConfig, run_campaign, validate_config

__version__ = "0.1.0"

__all__ = [
    "AgeingState",
    "CampaignConfig",
    "CampaignReport",
    "CriticalPath",
    "DEFAULT_PAYLOADS",
    "DeviceConfig",
    "ErrorTransitionModel",
    "FaultKind",
    "FaultableMemory",
    "FlashBuffering",
    "FrequencyResult",
    "GateLoad",
    "MefSeries",
    "MemoryFault",
    "MobilityModel",
    "Payload",
    "PayloadName",
    "PayloadOutcome",
    "PayloadScore",
    "SearchConfig",
    "SearchOutcome",
    "SimulatedDevice",
    "Status",
    "Subsystem",
    "TransistorParams",
    "find_mef",
    "run_at_frequency",
    "run_campaign",
    "sweep",
    "validate_config",
]
