"""Injectable clocks. Manual mode keeps runs reproducible end to end."""

from __future__ import annotations

import time


class SystemClock:
    mode = "system"

    def now(self) -> int:
        return int(time.time() * 1000)


class ManualClock:
    mode = "manual"

    def __init__(self, start_millis: int = 0):
        self._now = start_millis

    def now(self) -> int:
        return self._now

    def set(self, millis: int) -> None:
        if millis < self._now:
            raise ValueError(f"manual clock cannot go backwards ({millis} < {self._now})")
        self._now = millis

    def advance(self, delta_millis: int) -> None:
        self.set(self._now + delta_millis)
