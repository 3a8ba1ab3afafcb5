"""Injectable time source.

Every timed component (WTX emission, relay deadlines, CDR posting,
heartbeat liveness, cooldown windows) takes a clock so tests can run on
a manually advanced clock instead of wall time.  Threads waiting on a
deadline must wake when a ManualClock jumps, so all waiting goes through
one condition variable owned by the clock.
"""

from __future__ import annotations

import threading
import time
from typing import Callable


class Clock:
    """Monotonic clock with notification-based waiting."""

    def __init__(self):
        self._cond = threading.Condition()

    def now(self) -> float:
        raise NotImplementedError

    def wall(self) -> float:
        """Wall-clock epoch seconds (for log timestamps)."""
        raise NotImplementedError

    def sleep(self, seconds: float) -> None:
        self.wait_until(lambda: False, seconds)

    def notify(self) -> None:
        """Wake all waiters so they can re-check their predicates."""
        with self._cond:
            self._cond.notify_all()

    def wait_until(self, predicate: Callable[[], bool], timeout: float | None) -> bool:
        """Block until predicate() is true or the deadline passes.

        Returns the final predicate value.  A None timeout waits forever.
        """
        deadline = None if timeout is None else self.now() + timeout
        return self.wait_until_at(predicate, deadline)

    def wait_until_at(self, predicate: Callable[[], bool], deadline_at: float | None) -> bool:
        """wait_until against an absolute deadline on this clock.

        Callers that must pin the deadline before other threads can
        move a ManualClock use this form.
        """
        with self._cond:
            while not predicate():
                if deadline_at is not None and self.now() >= deadline_at:
                    return predicate()
                self._wait_step(deadline_at)
            return True

    def _wait_step(self, deadline: float | None) -> None:
        raise NotImplementedError

    def event(self) -> "ClockEvent":
        return ClockEvent(self)


class SystemClock(Clock):
    """Real time, backed by time.monotonic."""

    def now(self) -> float:
        return time.monotonic()

    def wall(self) -> float:
        return time.time()

    def _wait_step(self, deadline: float | None) -> None:
        if deadline is None:
            self._cond.wait(0.5)
        else:
            remaining = deadline - self.now()
            if remaining > 0:
                self._cond.wait(min(remaining, 0.5))


class ManualClock(Clock):
    """Deterministic clock advanced explicitly by the test."""

    def __init__(self, start: float = 0.0, wall_start: float = 1_600_000_000.0):
        super().__init__()
        self._t = start
        self._wall0 = wall_start - start

    def now(self) -> float:
        with self._cond:
            return self._t

    def wall(self) -> float:
        with self._cond:
            return self._wall0 + self._t

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot move a ManualClock backwards")
        with self._cond:
            self._t += seconds
            self._cond.notify_all()

    def _wait_step(self, deadline: float | None) -> None:
        # Real 50 ms cap so waiters also observe predicate changes made
        # by other threads without an explicit notify.
        self._cond.wait(0.05)


class ClockEvent:
    """threading.Event lookalike whose wait() honors the owning clock."""

    def __init__(self, clock: Clock):
        self._clock = clock
        self._flag = False

    def is_set(self) -> bool:
        return self._flag

    def set(self) -> None:
        self._flag = True
        self._clock.notify()

    def clear(self) -> None:
        self._flag = False

    def wait(self, timeout: float | None = None) -> bool:
        return self._clock.wait_until(lambda: self._flag, timeout)

    def wait_at(self, deadline_at: float | None) -> bool:
        return self._clock.wait_until_at(lambda: self._flag, deadline_at)
