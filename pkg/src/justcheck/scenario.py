"""Enumerate read outcomes of a fixed invocation/response schedule on one register.

A script lists start and finish events in real-time order.  Order actions of
the register are internal: any number of them may occur between two scripted
events.  Each ``finish_read`` carries a placeholder name; every value the
register allows there is tried, and the result is the set of value tuples
over all completions of the script.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from .lts import Kind
from .registers import RegisterConfig, RegisterKind, RegisterStatus, register_successors


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    kind: Kind
    thread: int
    value: Any = None  # the written value, or the placeholder of a read result


def sr(t: int) -> Event:
    return Event(Kind.START_READ, t)


def fr(t: int, name: str) -> Event:
    return Event(Kind.FINISH_READ, t, name)


def sw(t: int, v: Any) -> Event:
    return Event(Kind.START_WRITE, t, v)


def fw(t: int) -> Event:
    return Event(Kind.FINISH_WRITE, t)


# w1: x <- 0 by thread 0, then r1 (thread 1) and r2 (thread 2) in isolation;
# r3 overlaps the start of w2: x <- 2; r4 and r5 start after r3 ends, during w2
OVERLAP_SCRIPT = (
    sw(0, 0), fw(0),
    sr(1), fr(1, "a"),
    sr(2), fr(2, "b"),
    sr(1),
    sw(0, 2),
    fr(1, "c"),
    sr(2),
    sr(1),
    fr(1, "d"),
    fr(2, "e"),
    fw(0),
)
OVERLAP_DOMAIN = (0, 1, 2)
OVERLAP_NAMES = ("a", "b", "c", "d", "e")


def validate_script(script: Sequence[Event]) -> int:
    """Check that each thread alternates start and finish of one operation; return thread count."""
    active: dict[int, Kind] = {}
    names = set()
    for k, e in enumerate(script):
        if e.kind in (Kind.START_READ, Kind.START_WRITE):
            if e.thread in active:
                raise ScriptError(f"event {k}: thread {e.thread} starts a second operation")
            active[e.thread] = e.kind
        elif e.kind in (Kind.FINISH_READ, Kind.FINISH_WRITE):
            want = Kind.START_READ if e.kind is Kind.FINISH_READ else Kind.START_WRITE
            if active.get(e.thread) is not want:
                raise ScriptError(f"event {k}: {e.kind.value} by thread {e.thread} "
                                  "without a matching start")
            del active[e.thread]
            if e.kind is Kind.FINISH_READ:
                if e.value in names:
                    raise ScriptError(f"event {k}: placeholder {e.value!r} used twice")
                names.add(e.value)
        else:
            raise ScriptError(f"event {k}: scripts contain start and finish events only")
    return max((e.thread for e in script), default=-1) + 1


def run_scenario(script: Sequence[Event], kind: RegisterKind | str,
                 domain: Sequence[Any] = OVERLAP_DOMAIN, initial: Any = None,
                 threads: int | None = None) -> set[tuple]:
    """All tuples of read results (in placeholder order) the register permits."""
    n = validate_script(script)
    threads = max(n, threads or 0)
    kind = RegisterKind(kind)
    config = RegisterConfig("x", tuple(domain), initial, kind)
    cache: dict = {}

    def moves(st):
        if st not in cache:
            cache[st] = list(register_successors(config, st, threads))
        return cache[st]

    def closure(states):
        seen, stack = set(states), list(states)
        while stack:
            for a, t in moves(stack.pop()):
                if a.kind in (Kind.ORDER_READ, Kind.ORDER_WRITE) and t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    frontier = {(RegisterStatus.initial(config.initial, threads), ())}
    for e in script:
        nxt = set()
        for st, vals in {(s2, v) for s, v in frontier for s2 in closure([s])}:
            for a, t in moves(st):
                if a.kind is not e.kind or a.thread != e.thread:
                    continue
                if e.kind is Kind.FINISH_READ:
                    nxt.add((t, vals + (a.value,)))
                elif e.kind is not Kind.START_WRITE or a.value == e.value:
                    nxt.add((t, vals))
        frontier = nxt
    return {vals for _, vals in frontier}


def overlap_example(kind: RegisterKind | str) -> set[tuple]:
    """Outcomes ``(a, b, c, d, e)`` of the three-thread example schedule."""
    return run_scenario(OVERLAP_SCRIPT, kind)
