"""Broker records and error vocabulary."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

from ..errors import AtlasError

HEARTBEAT_INTERVAL_S = 15.0
DEFAULT_COOLDOWN_S = 1800.0

SCENARIOS = ("dns_metering", "zero_rating_freeride", "ip_config", "tone_capture", "custom")


class BrokerError(AtlasError):
    code = "BrokerError"


class SimBusy(BrokerError):
    code = "SimBusy"


class ProbeBusy(BrokerError):
    code = "ProbeBusy"


class ProbeOffline(BrokerError):
    code = "ProbeOffline"


class UnknownSim(BrokerError):
    code = "UnknownSim"


class UnknownProbe(BrokerError):
    code = "UnknownProbe"


class UnknownJob(BrokerError):
    code = "UnknownJob"


class UnknownCircuit(BrokerError):
    code = "UnknownCircuit"


class ValidationError(BrokerError):
    code = "ValidationError"


class CooldownActive(BrokerError):
    code = "CooldownActive"

    def __init__(self, message: str = "", retry_after: float = 0.0):
        super().__init__(message, retry_after=retry_after)
        self.retry_after = retry_after


class ProbeStatus(Enum):
    ONLINE = "Online"
    STALE = "Stale"
    OFFLINE = "Offline"


class JobStatus(Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


@dataclass
class CooldownPolicy:
    min_gap_s: float = DEFAULT_COOLDOWN_S

    def __post_init__(self):
        if self.min_gap_s < 0:
            raise ValidationError("cooldown gap must be >= 0")


@dataclass
class ProbeRecord:
    probe_id: str
    country: str
    last_heartbeat: float = 0.0
    current_circuit: Optional[str] = None

    def status(self, now_wall: float, interval_s: float = HEARTBEAT_INTERVAL_S) -> ProbeStatus:
        age = now_wall - self.last_heartbeat
        if age <= 2 * interval_s:
            return ProbeStatus.ONLINE
        if age <= 3 * interval_s:
            return ProbeStatus.STALE
        return ProbeStatus.OFFLINE

    def as_dict(self, now_wall: float, interval_s: float = HEARTBEAT_INTERVAL_S) -> dict:
        return {
            "probe_id": self.probe_id,
            "country": self.country,
            "last_heartbeat": self.last_heartbeat,
            "heartbeat_age_s": max(0.0, now_wall - self.last_heartbeat),
            "status": self.status(now_wall, interval_s).value,
            "current_circuit": self.current_circuit,
        }


@dataclass
class SimRecord:
    imsi: str
    iccid: str = ""
    home_country: str = ""
    label: str = ""
    provider_url: str = ""
    online: bool = True
    current_circuit: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "imsi": self.imsi,
            "iccid": self.iccid,
            "home_country": self.home_country,
            "label": self.label,
            "provider_url": self.provider_url,
            "online": self.online,
            "current_circuit": self.current_circuit,
        }


@dataclass
class CircuitRecord:
    circuit_id: str
    imsi: str
    probe_id: str
    token: str
    country: str
    created_wall: float
    closed_wall: Optional[float] = None
    close_reason: Optional[str] = None

    @property
    def open(self) -> bool:
        return self.closed_wall is None

    def as_dict(self) -> dict:
        return {
            "circuit_id": self.circuit_id,
            "imsi": self.imsi,
            "probe_id": self.probe_id,
            "country": self.country,
            "created_wall": self.created_wall,
            "closed_wall": self.closed_wall,
            "close_reason": self.close_reason,
        }


@dataclass
class JobRecord:
    job_id: str
    scenario: str
    params: Dict[str, str]
    imsi: str
    probe_id: str
    status: JobStatus = JobStatus.PENDING
    submitted_wall: float = 0.0
    started_wall: Optional[float] = None
    ended_wall: Optional[float] = None
    circuit_id: Optional[str] = None
    summary: Optional[dict] = None
    artifacts: Dict[str, str] = field(default_factory=dict)
    error: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "scenario": self.scenario,
            "params": dict(self.params),
            "imsi": self.imsi,
            "probe_id": self.probe_id,
            "status": self.status.value,
            "submitted_wall": self.submitted_wall,
            "started_wall": self.started_wall,
            "ended_wall": self.ended_wall,
            "circuit_id": self.circuit_id,
            "summary": self.summary,
            "artifacts": dict(self.artifacts),
            "error": self.error,
        }
