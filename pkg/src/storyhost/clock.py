"""Injectable clocks: wall time for the live service, virtual time for tests
and compressed simulations."""
from __future__ import annotations

import time
from typing import Protocol


class Clock(Protocol):
    def now(self) -> float: ...

    def set(self, t: float) -> None: ...


class WallClock:
    def now(self) -> float:
        return time.time()

    def set(self, t: float) -> None:
        raise RuntimeError("wall clock cannot be set")


class VirtualClock:
    """Manually advanced clock. ``set`` never moves time backwards."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def set(self, t: float) -> None:
        if t > self._now:
            self._now = float(t)
