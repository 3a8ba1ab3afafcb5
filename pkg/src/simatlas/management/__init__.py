"""Central broker and orchestrator.

Probe and SIM inventories, exclusive circuit allocation with
country-switch cooldown, job scheduling, event-log persistence with
replay, and a live event stream for the dashboard.
"""

from .state import (
    ProbeRecord,
    CircuitRecord,
    SimRecord,
    JobRecord,
    CooldownPolicy,
    ProbeStatus,
    BrokerError,
    SimBusy,
    ProbeBusy,
    ProbeOffline,
    UnknownSim,
    UnknownProbe,
    UnknownJob,
    UnknownCircuit,
    CooldownActive,
    ValidationError,
)
from .events import EventLog, CorruptLine
from .broker import Broker, Subscription
from .service import ManagementService

__all__ = [
    "ProbeRecord",
    "CircuitRecord",
    "SimRecord",
    "JobRecord",
    "CooldownPolicy",
    "ProbeStatus",
    "BrokerError",
    "SimBusy",
    "ProbeBusy",
    "ProbeOffline",
    "UnknownSim",
    "UnknownProbe",
    "UnknownJob",
    "UnknownCircuit",
    "CooldownActive",
    "ValidationError",
    "EventLog",
    "CorruptLine",
    "Broker",
    "Subscription",
    "ManagementService",
]
