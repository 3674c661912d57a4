"""Millisecond time sources injected into the endorser, orderer and committer."""

from __future__ import annotations

import time
from typing import Callable

Clock = Callable[[], float]


class WallClock:
    """Monotonic wall clock in ms, measured from construction."""

    def __init__(self) -> None:
        self._origin = time.perf_counter()

    def __call__(self) -> float:
        return (time.perf_counter() - self._origin) * 1000.0


class SimClock:
    """Manually advanced clock for tests."""

    def __init__(self, start: float = 0.0) -> None:
        self.now = float(start)

    def __call__(self) -> float:
        return self.now

    def advance(self, ms: float) -> float:
        if ms < 0:
            raise ValueError("cannot move a clock backwards")
        self.now += ms
        return self.now

    def set(self, ms: float) -> None:
        if ms < self.now:
            raise ValueError("cannot move a clock backwards")
        self.now = float(ms)
