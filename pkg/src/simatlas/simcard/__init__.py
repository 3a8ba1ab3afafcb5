"""Software SIM cards.

A file-system-backed simulated SIM, a trace-replay SIM, a deterministic
authentication stub, and proactive (SIM-initiated) events such as
binary SMS.
"""

from .profile import SimProfile, ProactiveEvent, ProfileError, load_profile, save_profile
from .auth import authenticate_stub, LengthError
from .backend import (
    SimBackend,
    SimulatedSim,
    TraceReplaySim,
    TraceExhausted,
    simulated_sim,
    trace_replay_sim,
)

__all__ = [
    "SimProfile",
    "ProactiveEvent",
    "ProfileError",
    "load_profile",
    "save_profile",
    "authenticate_stub",
    "LengthError",
    "SimBackend",
    "SimulatedSim",
    "TraceReplaySim",
    "TraceExhausted",
    "simulated_sim",
    "trace_replay_sim",
]
