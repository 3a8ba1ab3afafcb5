"""APDU exchange log records and the jsonl export format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List


class Direction(Enum):
    TO_SIM = "ToSim"
    FROM_SIM = "FromSim"


@dataclass(frozen=True)
class ApduLogRecord:
    circuit_id: str
    imsi: str
    direction: Direction
    raw: bytes
    ts_mono: float
    ts_wall: float

    def as_dict(self) -> dict:
        return {
            "circuit_id": self.circuit_id,
            "imsi": self.imsi,
            "direction": self.direction.value,
            "raw": self.raw.hex(),
            "ts_mono": self.ts_mono,
            "ts_wall": self.ts_wall,
        }


def log_to_jsonl(records: Iterable[ApduLogRecord]) -> bytes:
    lines = [json.dumps(r.as_dict(), sort_keys=True) for r in records]
    return ("\n".join(lines) + "\n").encode() if lines else b""


def jsonl_to_log(data: bytes) -> List[ApduLogRecord]:
    records = []
    for line in data.decode().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        records.append(
            ApduLogRecord(
                circuit_id=d["circuit_id"],
                imsi=d["imsi"],
                direction=Direction(d["direction"]),
                raw=bytes.fromhex(d["raw"]),
                ts_mono=d["ts_mono"],
                ts_wall=d["ts_wall"],
            )
        )
    return records
