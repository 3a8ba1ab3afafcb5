"""Append-only JSON-line event log with snapshots.

Every broker mutation is one event line; cold-starting replays the log
and must reproduce byte-identical state.  Corrupt lines (torn writes)
are skipped and reported, never silently dropped.  A state snapshot is
written every SNAPSHOT_EVERY events so long logs replay from the last
checkpoint.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple

logger = logging.getLogger(__name__)

SNAPSHOT_EVERY = 1000
LOG_NAME = "events.jsonl"
SNAPSHOT_GLOB = "snapshot-*.json"


@dataclass(frozen=True)
class CorruptLine:
    line_no: int
    reason: str
    raw: str


class EventLog:
    """Directory-backed log: events.jsonl plus snapshot-<seq>.json."""

    def __init__(self, data_dir: Optional[str] = None):
        self.dir = Path(data_dir) if data_dir else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)
        self._fh = None
        self.corruption: List[CorruptLine] = []

    @property
    def log_path(self) -> Optional[Path]:
        return self.dir / LOG_NAME if self.dir else None

    def append(self, event: dict) -> None:
        if not self.dir:
            return
        if self._fh is None:
            self._fh = open(self.log_path, "a", encoding="utf-8")
        self._fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None

    def write_snapshot(self, seq: int, state: dict) -> None:
        if not self.dir:
            return
        path = self.dir / f"snapshot-{seq:012d}.json"
        path.write_text(json.dumps({"seq": seq, "state": state}, sort_keys=True))

    def latest_snapshot(self) -> Optional[Tuple[int, dict]]:
        if not self.dir:
            return None
        candidates = sorted(self.dir.glob(SNAPSHOT_GLOB))
        if not candidates:
            return None
        doc = json.loads(candidates[-1].read_text())
        return int(doc["seq"]), doc["state"]

    def read_events(self, after_seq: int = 0) -> List[dict]:
        """Events with seq > after_seq; corrupt lines are recorded in
        self.corruption and skipped."""
        self.corruption = []
        if not self.dir or not self.log_path.exists():
            return []
        events = []
        for line_no, line in enumerate(self.log_path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
                seq = int(event["seq"])
                event["type"]
            except (ValueError, KeyError, TypeError) as exc:
                self.corruption.append(CorruptLine(line_no, f"{type(exc).__name__}: {exc}", line[:200]))
                logger.warning("skipping corrupt event line %d: %s", line_no, exc)
                continue
            if seq > after_seq:
                events.append(event)
        return events
