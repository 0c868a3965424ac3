"""Transport interface and the in-process simulated network.

The simulator runs on a logical clock. ``send`` schedules a message for
delivery ``delay`` ticks in the future (0 = immediately receivable);
``step`` advances the clock by one tick and lets every attached node
process its inbox. Drops and delays come from caller-supplied rules, so
timeout paths are deterministic in tests.
"""

from __future__ import annotations

import threading
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Protocol


class Transport(Protocol):
    """A node's view of the network: at-most-once, unordered across peers."""

    def send(self, to: str, data: bytes) -> None: ...

    def receive(self) -> tuple[str, bytes] | None: ...


class Steppable(Protocol):
    def poll(self) -> None: ...


Rule = Callable[[str, str, bytes], int]


@dataclass
class PhaseCost:
    messages: int = 0
    bytes: int = 0


@dataclass
class Delivery:
    phase: str
    sender: str
    to: str
    data: bytes
    dropped: bool = False


@dataclass
class SimulatedNetwork:
    """Shared medium for every endpoint of one simulation.

    ``drop(sender, to, data)`` returning truthy discards a message;
    ``delay(sender, to, data)`` gives its delivery lag in ticks. Every sent
    message is counted under the current ``phase`` and kept in ``traffic``.
    """

    drop: Rule | None = None
    delay: Rule | None = None
    phase: str = "default"
    tick: int = 0
    costs: dict[str, PhaseCost] = field(default_factory=lambda: defaultdict(PhaseCost))
    traffic: list[Delivery] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()
        self._queues: dict[str, deque[tuple[int, str, bytes]]] = {}
        self._nodes: list[Steppable] = []

    def endpoint(self, gid: str) -> "Endpoint":
        with self._lock:
            if gid in self._queues:
                raise ValueError(f"endpoint {gid!r} already registered")
            self._queues[gid] = deque()
        return Endpoint(self, gid)

    def attach(self, node: Steppable) -> None:
        self._nodes.append(node)

    def _send(self, sender: str, to: str, data: bytes) -> None:
        with self._lock:
            if to not in self._queues:
                raise KeyError(f"unknown destination {to!r}")
            cost = self.costs[self.phase]
            cost.messages += 1
            cost.bytes += len(data)
            dropped = bool(self.drop and self.drop(sender, to, data))
            self.traffic.append(Delivery(self.phase, sender, to, data, dropped))
            if dropped:
                return
            lag = self.delay(sender, to, data) if self.delay else 0
            self._queues[to].append((self.tick + lag, sender, data))

    def _receive(self, gid: str) -> tuple[str, bytes] | None:
        with self._lock:
            queue = self._queues[gid]
            for i, (due, sender, data) in enumerate(queue):
                if due <= self.tick:
                    del queue[i]
                    return sender, data
        return None

    def pending(self) -> int:
        with self._lock:
            return sum(len(q) for q in self._queues.values())

    def step(self) -> None:
        with self._lock:
            self.tick += 1
        for node in list(self._nodes):
            node.poll()

    def set_phase(self, phase: str) -> None:
        self.phase = phase

    def cost(self, phase: str) -> PhaseCost:
        return self.costs.get(phase, PhaseCost())


@dataclass
class Endpoint:
    network: SimulatedNetwork
    gid: str

    def send(self, to: str, data: bytes) -> None:
        self.network._send(self.gid, to, data)

    def receive(self) -> tuple[str, bytes] | None:
        return self.network._receive(self.gid)
