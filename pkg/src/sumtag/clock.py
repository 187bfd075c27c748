"""Monotonic and simulated clocks for latency measurement.

Rate math never touches wall-clock time: the real clock wraps
``time.perf_counter_ns`` (monotonic, nanosecond resolution where the
platform provides it), and the simulated clock advances only when told
to, letting latency models run at any time scale instantly.
"""

from __future__ import annotations

import time
from typing import Protocol


class Clock(Protocol):
    def now(self) -> float:
        """Current time in seconds; only differences are meaningful."""
        ...


class MonotonicClock:
    def now(self) -> float:
        return time.perf_counter_ns() / 1e9


class SimulatedClock:
    """A clock that moves only via :meth:`advance`."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError(f"cannot advance a clock by {seconds}")
        self._now += seconds


MONOTONIC = MonotonicClock()
