"""SIM registry: IMSI -> backend plus metadata.

Entries can be simulated profiles or trace replays; a directory of
profile JSON files can be loaded at boot and hot-reloaded.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from ..errors import AtlasError
from ..simcard import SimProfile, load_profile, simulated_sim
from ..simcard.backend import SimBackend

logger = logging.getLogger(__name__)


class DuplicateImsi(AtlasError):
    code = "DuplicateImsi"


class RegistrySimBusy(AtlasError):
    code = "SimBusy"


class UnknownSim(AtlasError):
    code = "UnknownImsi"


@dataclass
class RegistryEntry:
    imsi: str
    backend: SimBackend
    iccid: str = ""
    home_country: str = ""
    label: str = ""
    online: bool = True
    flaky_attach_probability: float = 0.0
    circuit_id: Optional[str] = None

    @property
    def circuited(self) -> bool:
        return self.circuit_id is not None

    def as_dict(self) -> dict:
        return {
            "imsi": self.imsi,
            "iccid": self.iccid,
            "home_country": self.home_country,
            "label": self.label,
            "online": self.online,
            "circuit_id": self.circuit_id,
        }


class SimRegistry:
    """Single-writer-locked registry; reads take the same lock (cheap
    at desk scale)."""

    def __init__(self):
        self._lock = threading.RLock()
        self._entries: Dict[str, RegistryEntry] = {}

    def register_profile(self, profile: SimProfile) -> str:
        entry = RegistryEntry(
            imsi=profile.imsi,
            backend=simulated_sim(profile),
            iccid=profile.iccid,
            home_country=profile.home_country,
            label=profile.label,
            flaky_attach_probability=profile.flaky_attach_probability,
        )
        return self.register_entry(entry)

    def register_entry(self, entry: RegistryEntry) -> str:
        with self._lock:
            if entry.imsi in self._entries:
                raise DuplicateImsi(f"IMSI {entry.imsi} already registered")
            self._entries[entry.imsi] = entry
            return entry.imsi

    def unregister(self, imsi: str) -> None:
        with self._lock:
            entry = self._entries.get(imsi)
            if entry is None:
                raise UnknownSim(f"IMSI {imsi} not registered")
            if entry.circuited:
                raise RegistrySimBusy(f"IMSI {imsi} has an open circuit")
            del self._entries[imsi]

    def get(self, imsi: str) -> RegistryEntry:
        with self._lock:
            entry = self._entries.get(imsi)
            if entry is None:
                raise UnknownSim(f"IMSI {imsi} not registered")
            return entry

    def entries(self) -> List[RegistryEntry]:
        with self._lock:
            return list(self._entries.values())

    def __contains__(self, imsi: str) -> bool:
        with self._lock:
            return imsi in self._entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    def load_directory(self, path) -> int:
        """Load every *.json profile under path; already-registered
        IMSIs are skipped.  Returns the number of newly added SIMs."""
        added = 0
        for file in sorted(Path(path).glob("*.json")):
            try:
                profile = load_profile(file)
            except AtlasError as exc:
                logger.warning("skipping %s: %s", file, exc)
                continue
            with self._lock:
                if profile.imsi in self._entries:
                    continue
                self.register_profile(profile)
                added += 1
        return added
