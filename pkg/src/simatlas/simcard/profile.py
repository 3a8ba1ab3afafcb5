"""SIM identity profiles and their JSON on-disk form.

A profile bundles the subscriber identity (IMSI, ICCID, Ki), a simple
MF/DF/EF file system, and an optional script of proactive events.  Byte
contents are hex-encoded in the JSON form.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from ..analytics.bcd import encode_iccid, encode_imsi, luhn_valid
from ..analytics.mcc import KNOWN_MCCS
from ..errors import AtlasError

EF_ICCID_PATH = "3F00/2FE2"
EF_IMSI_PATH = "3F00/7F20/6F07"
EF_SPN_PATH = "3F00/7F20/6F46"
EF_AD_PATH = "3F00/7F20/6FAD"
EF_LOCI_PATH = "3F00/7F20/6F7E"

_PATH_RE = re.compile(r"^[0-9A-F]{4}(/[0-9A-F]{4}){1,2}$")

TRIGGER_AFTER_COMMANDS = "after_commands"
TRIGGER_ON_AUTHENTICATE = "on_authenticate"
KIND_SEND_BINARY_SMS = "send_binary_sms"
KIND_NOOP = "noop"


class ProfileError(AtlasError):
    code = "ProfileError"


@dataclass(frozen=True)
class ProactiveEvent:
    """SIM-initiated action armed by a trigger condition."""

    trigger: str
    kind: str
    after_n: int = 0
    payload: bytes = b""

    def __post_init__(self):
        if self.trigger not in (TRIGGER_AFTER_COMMANDS, TRIGGER_ON_AUTHENTICATE):
            raise ProfileError(f"unknown trigger {self.trigger!r}")
        if self.kind not in (KIND_SEND_BINARY_SMS, KIND_NOOP):
            raise ProfileError(f"unknown proactive kind {self.kind!r}")
        if self.after_n < 0:
            raise ProfileError("after_n must be >= 0")
        if len(self.payload) > 255:
            raise ProfileError("proactive payload capped at 255 bytes")

    def as_dict(self) -> dict:
        return {
            "trigger": self.trigger,
            "kind": self.kind,
            "after_n": self.after_n,
            "payload": self.payload.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProactiveEvent":
        return cls(
            trigger=d["trigger"],
            kind=d["kind"],
            after_n=int(d.get("after_n", 0)),
            payload=bytes.fromhex(d.get("payload", "")),
        )


@dataclass
class SimProfile:
    imsi: str
    iccid: str
    ki: bytes
    home_country: str
    msisdn: Optional[str] = None
    label: str = ""
    files: Dict[str, bytes] = field(default_factory=dict)
    proactive_script: List[ProactiveEvent] = field(default_factory=list)
    # fault injection: probability that an attach to this SIM fails,
    # mimicking unreliable physical readers
    flaky_attach_probability: float = 0.0

    def __post_init__(self):
        if not (self.imsi.isdigit() and 6 <= len(self.imsi) <= 15):
            raise ProfileError(f"IMSI must be 6-15 digits, got {self.imsi!r}")
        if self.imsi[:3] not in KNOWN_MCCS:
            raise ProfileError(f"IMSI {self.imsi} does not start with a known MCC")
        if not (self.iccid.isdigit() and 19 <= len(self.iccid) <= 20):
            raise ProfileError(f"ICCID must be 19-20 digits, got {self.iccid!r}")
        if not luhn_valid(self.iccid):
            raise ProfileError(f"ICCID {self.iccid} fails the Luhn check")
        if len(self.ki) != 16:
            raise ProfileError(f"Ki must be 16 bytes, got {len(self.ki)}")
        if not re.fullmatch(r"[A-Z]{2}", self.home_country):
            raise ProfileError(f"home_country must be ISO alpha-2, got {self.home_country!r}")
        if not 0.0 <= self.flaky_attach_probability <= 1.0:
            raise ProfileError("flaky_attach_probability must be within [0, 1]")
        for path in self.files:
            if not _PATH_RE.fullmatch(path):
                raise ProfileError(f"bad file path {path!r}")
        self._install_identity_files()

    def _install_identity_files(self):
        """EF_ICCID/EF_IMSI always mirror the profile identity; other
        standard files get defaults unless the profile overrides them."""
        self.files[EF_ICCID_PATH] = encode_iccid(self.iccid)
        self.files[EF_IMSI_PATH] = encode_imsi(self.imsi)
        self.files.setdefault(EF_SPN_PATH, (self.label or "simatlas").encode()[:16].ljust(17, b"\xff"))
        self.files.setdefault(EF_AD_PATH, bytes.fromhex("00000002"))
        self.files.setdefault(EF_LOCI_PATH, bytes(11))

    def as_dict(self) -> dict:
        return {
            "imsi": self.imsi,
            "iccid": self.iccid,
            "ki": self.ki.hex(),
            "home_country": self.home_country,
            "msisdn": self.msisdn,
            "label": self.label,
            "files": {p: c.hex() for p, c in sorted(self.files.items())},
            "proactive_script": [e.as_dict() for e in self.proactive_script],
            "flaky_attach_probability": self.flaky_attach_probability,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimProfile":
        return cls(
            imsi=d["imsi"],
            iccid=d["iccid"],
            ki=bytes.fromhex(d["ki"]),
            home_country=d["home_country"],
            msisdn=d.get("msisdn"),
            label=d.get("label", ""),
            files={p: bytes.fromhex(c) for p, c in d.get("files", {}).items()},
            proactive_script=[ProactiveEvent.from_dict(e) for e in d.get("proactive_script", [])],
            flaky_attach_probability=float(d.get("flaky_attach_probability", 0.0)),
        )


def save_profile(profile: SimProfile, path) -> None:
    Path(path).write_text(json.dumps(profile.as_dict(), indent=2, sort_keys=True) + "\n")


def load_profile(path) -> SimProfile:
    try:
        return SimProfile.from_dict(json.loads(Path(path).read_text()))
    except (KeyError, ValueError) as exc:
        raise ProfileError(f"cannot load profile {path}: {exc}") from exc
