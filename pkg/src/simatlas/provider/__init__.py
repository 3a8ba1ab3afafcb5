"""SIM-provider daemon.

Registry of SIM backends, per-SIM circuit serving over the tunnel
protocol, APDU logging with jsonl/GSMTAP export, capacity limits, and
an admin HTTP API.
"""

from .registry import SimRegistry, RegistryEntry, DuplicateImsi, RegistrySimBusy, UnknownSim
from .apdulog import ApduLogRecord, Direction, log_to_jsonl
from .service import ProviderService, UnknownCircuit

__all__ = [
    "SimRegistry",
    "RegistryEntry",
    "DuplicateImsi",
    "RegistrySimBusy",
    "UnknownSim",
    "ApduLogRecord",
    "Direction",
    "log_to_jsonl",
    "ProviderService",
    "UnknownCircuit",
]
