"""Clock abstraction.

The simulated chain and the demo driver advance a manual clock explicitly,
which keeps scenario runs reproducible; the server uses the system clock.
Timestamps are integer unix seconds (UTC) throughout.
"""

from __future__ import annotations

import time


class SystemClock:
    def now(self) -> int:
        return int(time.time())


class ManualClock:
    """Logical clock advanced explicitly by tests and scenario scripts."""

    def __init__(self, start: int = 1_700_000_000):
        self._now = start

    def now(self) -> int:
        return self._now

    def tick(self, seconds: int = 1) -> int:
        if seconds < 0:
            raise ValueError("clock cannot move backwards")
        self._now += seconds
        return self._now
