"""Realizations of the marked Poisson point process on edges x [0, beta).

Each edge carries an independent Poisson process of total intensity 1; every
event is marked "cross" with probability u and "bar" otherwise.  Event lists
are immutable values with strictly increasing times; mutation helpers return
new lists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lattice import Graph

CROSS = "cross"
BAR = "bar"


class EventError(ValueError):
    pass


class Event(NamedTuple):
    edge: int
    time: float
    kind: str


@dataclass(frozen=True)
class EventList:
    beta: float
    u: float
    items: tuple[Event, ...] = ()

    def __post_init__(self):
        if self.beta <= 0:
            raise EventError("beta must be positive")
        if not (0.0 <= self.u <= 1.0):
            raise EventError("u must lie in [0, 1]")
        last = -1.0
        for ev in self.items:
            if not (0.0 <= ev.time < self.beta):
                raise EventError(f"event time {ev.time} outside [0, beta)")
            if ev.time <= last:
                raise EventError("event times must be strictly increasing")
            if ev.kind not in (CROSS, BAR):
                raise EventError(f"unknown event kind {ev.kind!r}")
            last = ev.time

    def __len__(self) -> int:
        return len(self.items)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(edge_idx, time, is_cross) arrays sorted by time."""
        n = len(self.items)
        edge = np.fromiter((e.edge for e in self.items), dtype=np.int64, count=n)
        time = np.fromiter((e.time for e in self.items), dtype=np.float64, count=n)
        cross = np.fromiter((1 if e.kind == CROSS else 0 for e in self.items),
                            dtype=np.uint8, count=n)
        return edge, time, cross

    def to_json(self) -> str:
        return json.dumps({
            "beta": self.beta,
            "u": self.u,
            "items": [[e.edge, e.time, e.kind] for e in self.items],
        })

    @classmethod
    def from_json(cls, text: str) -> "EventList":
        d = json.loads(text)
        items = tuple(Event(int(e), float(t), str(k)) for e, t, k in d["items"])
        return cls(float(d["beta"]), float(d["u"]), items)


def events_from_arrays(beta, u, edge, time, cross) -> EventList:
    items = tuple(Event(int(e), float(t), CROSS if c else BAR)
                  for e, t, c in zip(edge, time, cross))
    return EventList(float(beta), float(u), items)


def _dedupe_times(times: np.ndarray, rng, beta: float) -> np.ndarray:
    # Ties have probability zero in exact arithmetic; resample the later draw.
    times = np.sort(times)
    while times.size > 1:
        dup = np.nonzero(np.diff(times) == 0.0)[0]
        if dup.size == 0:
            break
        times[dup + 1] = rng.uniform(0.0, beta, size=dup.size)
        times = np.sort(times)
    return times


def sample_raw(graph: Graph, beta: float, u: float, rng: np.random.Generator):
    """One realization as raw arrays (edge, time, is_cross), time-sorted."""
    n = rng.poisson(graph.n_edges * beta)
    times = _dedupe_times(rng.uniform(0.0, beta, size=n), rng, beta)
    order_edges = rng.integers(0, graph.n_edges, size=n) if n else np.zeros(0, np.int64)
    cross = (rng.random(n) < u).astype(np.uint8)
    return order_edges.astype(np.int64), times, cross


def sample_events(graph: Graph, beta: float, u: float,
                  rng: np.random.Generator) -> EventList:
    """Sample a realization of the marked Poisson process on graph edges.

    Total event count is Poisson(|E| * beta); edges are uniform, times
    uniform on [0, beta), and marks are cross with probability u.
    """
    if beta <= 0:
        raise EventError("beta must be positive")
    if not (0.0 <= u <= 1.0):
        raise EventError("u must lie in [0, 1]")
    if graph.n_edges == 0:
        return EventList(beta, u)
    edge, time, cross = sample_raw(graph, beta, u, rng)
    return events_from_arrays(beta, u, edge, time, cross)


def insert_event(omega: EventList, edge: int, time: float, kind: str) -> EventList:
    """Return a copy of omega with one extra event, sort order maintained."""
    if not (0.0 <= time < omega.beta):
        raise EventError(f"time {time} outside [0, beta)")
    if any(e.time == time for e in omega.items):
        raise EventError(f"duplicate event time {time}")
    items = list(omega.items)
    pos = sum(1 for e in items if e.time < time)
    items.insert(pos, Event(int(edge), float(time), kind))
    return EventList(omega.beta, omega.u, tuple(items))


def remove_event(omega: EventList, index: int) -> EventList:
    """Return a copy of omega with the event at index removed."""
    if not (0 <= index < len(omega.items)):
        raise EventError(f"event index {index} out of range")
    items = omega.items[:index] + omega.items[index + 1:]
    return EventList(omega.beta, omega.u, items)
