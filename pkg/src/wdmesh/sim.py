"""Minimal deterministic discrete-event kernel.

Events run in (time, insertion sequence) order.  Processes are generators
that yield timed phases (the process resumes when the phase ends) or
zero-time messages.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

from .errors import SchedulingError


@dataclass(order=True, frozen=True)
class Event:
    time_s: float
    sequence: int
    action: Callable[[], None] = field(compare=False)
    label: str = field(compare=False, default="")


@dataclass(frozen=True)
class TraceRecord:
    time_s: float
    sequence: int
    kind: str  # "phase" | "message" | "event"
    name: str
    duration_s: float = 0.0
    energy_j: float = 0.0

    def render(self) -> str:
        return f"{self.time_s!r}\t{self.sequence}\t{self.kind}\t{self.name}\t{self.duration_s!r}\t{self.energy_j!r}"


class Simulator:
    def __init__(self, world=None):
        self.world = world
        self.now = 0.0
        self.trace: list[TraceRecord] = []
        self._queue: list[Event] = []
        self._seq = itertools.count()
        self._trace_seq = itertools.count()

    def __len__(self) -> int:
        return len(self._queue)

    def schedule_at(self, time_s: float, action: Callable[[], None], label: str = "") -> Event:
        if time_s < self.now:
            raise SchedulingError(f"cannot schedule {label or 'event'} at {time_s} < now {self.now}")
        ev = Event(float(time_s), next(self._seq), action, label)
        heapq.heappush(self._queue, ev)
        return ev

    def schedule(self, delay_s: float, action: Callable[[], None], label: str = "") -> Event:
        if delay_s < 0:
            raise SchedulingError(f"negative delay {delay_s}")
        return self.schedule_at(self.now + delay_s, action, label)

    def record(self, kind: str, name: str, duration_s: float = 0.0, energy_j: float = 0.0) -> None:
        self.trace.append(TraceRecord(self.now, next(self._trace_seq), kind, name, duration_s, energy_j))

    def step(self) -> bool:
        if not self._queue:
            return False
        ev = heapq.heappop(self._queue)
        self.now = ev.time_s
        if self.world is not None:
            self.world.clock = self.now
        if ev.label:
            self.record("event", ev.label)
        ev.action()
        return True

    def run_until_idle(self) -> list[TraceRecord]:
        while self.step():
            pass
        return self.trace

    def spawn(self, gen: Iterator, name: str = "") -> "Process":
        proc = Process(self, gen, name)
        self.schedule(0.0, proc._resume)
        return proc

    def render_trace(self) -> str:
        return "".join(r.render() + "\n" for r in self.trace)


def run_until_idle(sim: Simulator):
    """Drain ``sim``'s queue; return the (possibly mutated) world and the trace."""
    trace = sim.run_until_idle()
    return sim.world, trace


class Process:
    """Drives a generator: timed items (with ``duration_s``) advance the clock."""

    def __init__(self, sim: Simulator, gen: Iterator, name: str = ""):
        self.sim = sim
        self.gen = gen
        self.name = name
        self.items: list[tuple[float, Any]] = []
        self.result: Any = None
        self.error: BaseException | None = None
        self.done = False
        self.on_done: list[Callable[["Process"], None]] = []

    def _resume(self) -> None:
        try:
            item = next(self.gen)
        except StopIteration as stop:
            self.result = stop.value
            self._finish()
            return
        except Exception as exc:
            self.error = exc
            self._finish()
            raise
        self.items.append((self.sim.now, item))
        duration = getattr(item, "duration_s", None)
        if duration is None:
            self.sim.record("message", str(item))
            self.sim.schedule(0.0, self._resume)
        else:
            self.sim.record("phase", str(item.name), item.duration_s, item.energy_j)
            self.sim.schedule(duration, self._resume)

    def _finish(self) -> None:
        self.done = True
        for cb in self.on_done:
            cb(self)
