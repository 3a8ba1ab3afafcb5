"""Remote measurement node.

A simulated modem that initializes against a tunneled SIM and attaches
to a simulated operator, an isolated measurement executor with packet
attribution, quota checking, and capture export.
"""

from .isolation import IsolationBoundary, IsolationBreach, PacketRecord
from .operator_sim import SimulatedOperator, AuthFailure
from .modem import ModemSim, ModemState, AttachReport, WaitingTimeExpired, CircuitLost
from .quota import QuotaSnapshot, check_quota
from .jobs import MeasurementJob, MeasurementResult, JobStatus, Scenario, run_measurement, ScenarioFailure
from .agent import ProbeAgent, ProbeTransport, HttpProbeTransport

__all__ = [
    "IsolationBoundary",
    "IsolationBreach",
    "PacketRecord",
    "SimulatedOperator",
    "AuthFailure",
    "ModemSim",
    "ModemState",
    "AttachReport",
    "WaitingTimeExpired",
    "CircuitLost",
    "QuotaSnapshot",
    "check_quota",
    "MeasurementJob",
    "MeasurementResult",
    "JobStatus",
    "Scenario",
    "run_measurement",
    "ScenarioFailure",
    "ProbeAgent",
    "ProbeTransport",
    "HttpProbeTransport",
]
