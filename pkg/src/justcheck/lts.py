"""Labelled transition systems, action labels and CSP-style parallel composition.

States of an :class:`Lts` are numbered ``0..n-1`` in BFS discovery order, with
``0`` the initial state.  The original state objects (register statuses,
thread control states, product vectors) are kept in ``Lts.states`` so that
per-component information remains addressable after composition.
"""

from __future__ import annotations

import enum
import itertools
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_MAX_TRANSITIONS = 10**8


class Kind(str, enum.Enum):
    START_READ = "start_read"
    FINISH_READ = "finish_read"
    START_WRITE = "start_write"
    FINISH_WRITE = "finish_write"
    ORDER_READ = "order_read"
    ORDER_WRITE = "order_write"
    CRIT = "crit"
    NONCRIT = "noncrit"


_VALUED = {Kind.FINISH_READ, Kind.START_WRITE}
_LOCAL = {Kind.CRIT, Kind.NONCRIT}
START_KINDS = frozenset({Kind.START_READ, Kind.START_WRITE})


def render_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


@dataclass(frozen=True, slots=True)
class ActionLabel:
    """An action: kind, acting thread, register (``None`` for crit/noncrit) and value."""

    kind: Kind
    thread: int
    register: str | None = None
    value: Any = None

    def __post_init__(self):
        if self.kind in _LOCAL:
            if self.register is not None or self.value is not None:
                raise ValueError(f"{self.kind.value} carries neither register nor value")
            return
        if self.register is None:
            raise ValueError(f"{self.kind.value} needs a register")
        if (self.value is None) == (self.kind in _VALUED):
            raise ValueError(f"value presence wrong for {self.kind.value}")

    def __str__(self) -> str:
        parts = [f"t={self.thread}"]
        if self.register is not None:
            parts.append(f"r={self.register}")
        if self.value is not None:
            parts.append(f"v={render_value(self.value)}")
        return f"{self.kind.value}({','.join(parts)})"

    @property
    def is_start(self) -> bool:
        return self.kind in START_KINDS


def start_read(t: int, r: str) -> ActionLabel:
    return ActionLabel(Kind.START_READ, t, r)


def finish_read(t: int, r: str, d: Any) -> ActionLabel:
    return ActionLabel(Kind.FINISH_READ, t, r, d)


def start_write(t: int, r: str, d: Any) -> ActionLabel:
    return ActionLabel(Kind.START_WRITE, t, r, d)


def finish_write(t: int, r: str) -> ActionLabel:
    return ActionLabel(Kind.FINISH_WRITE, t, r)


def order_read(t: int, r: str) -> ActionLabel:
    return ActionLabel(Kind.ORDER_READ, t, r)


def order_write(t: int, r: str) -> ActionLabel:
    return ActionLabel(Kind.ORDER_WRITE, t, r)


def crit(t: int) -> ActionLabel:
    return ActionLabel(Kind.CRIT, t)


def noncrit(t: int) -> ActionLabel:
    return ActionLabel(Kind.NONCRIT, t)


def parse_label(text: str) -> ActionLabel:
    """Inverse of ``str(label)`` for values that are booleans or integers."""
    kind, _, rest = text.partition("(")
    fields = dict(p.split("=", 1) for p in rest.rstrip(")").split(",") if p)
    value = fields.get("v")
    if value is not None:
        value = {"true": True, "false": False}.get(value, value)
        if isinstance(value, str):
            value = int(value)
    return ActionLabel(Kind(kind), int(fields["t"]), fields.get("r"), value)


class StateSpaceExceeded(RuntimeError):
    """Raised when exploration passes the configured state/transition cap or deadline."""


@dataclass
class Budget:
    """Resource limits shared by exploration and fixpoint loops."""

    max_transitions: int = DEFAULT_MAX_TRANSITIONS
    max_states: int | None = None
    deadline: float | None = None  # absolute time.monotonic() value

    @classmethod
    def with_timeout(cls, seconds: float | None, **kw) -> "Budget":
        return cls(deadline=None if seconds is None else time.monotonic() + seconds, **kw)

    def check(self, states: int = 0, transitions: int = 0) -> None:
        if transitions > self.max_transitions:
            raise StateSpaceExceeded(f"transition cap {self.max_transitions} exceeded")
        if self.max_states is not None and states > self.max_states:
            raise StateSpaceExceeded(f"state cap {self.max_states} exceeded")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise StateSpaceExceeded("time budget exceeded")


class Lts:
    """Finite LTS with integer states and interned labels.

    Transitions are stored as numpy arrays sorted by source, with CSR offsets,
    so that both Python-level successor queries and vectorised sweeps are cheap.
    """

    def __init__(
        self,
        states: Sequence[Hashable],
        labels: Sequence[ActionLabel],
        transitions: Iterable[tuple[int, int, int]],
        alphabet: Iterable[ActionLabel] | None = None,
        initial: int = 0,
    ):
        self.states = list(states)
        self.labels = list(labels)
        self.label_index = {a: i for i, a in enumerate(self.labels)}
        self.alphabet = frozenset(self.labels if alphabet is None else alphabet)
        missing = set(self.labels) - self.alphabet
        if missing:
            raise ValueError(f"labels outside the alphabet: {sorted(map(str, missing))}")
        self.initial = initial
        arr = np.array(list(transitions), dtype=np.int64).reshape(-1, 3)
        n = len(self.states)
        if not 0 <= initial < max(n, 1):
            raise ValueError("initial state out of range")
        if arr.size and (arr[:, [0, 2]].min() < 0 or arr[:, [0, 2]].max() >= n):
            raise ValueError("transition endpoint out of range")
        order = np.lexsort((arr[:, 2], arr[:, 1], arr[:, 0]))
        arr = arr[order]
        self.src = arr[:, 0].copy()
        self.act = arr[:, 1].copy()
        self.dst = arr[:, 2].copy()
        self.offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=n), out=self.offsets[1:])
        self._out: list[tuple[tuple[int, int], ...]] | None = None
        self._state_index: dict | None = None

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return len(self.src)

    def out(self, s: int) -> tuple[tuple[int, int], ...]:
        """Outgoing ``(label_id, target)`` pairs of state ``s``."""
        if self._out is None:
            acts, dsts, off = self.act.tolist(), self.dst.tolist(), self.offsets.tolist()
            self._out = [
                tuple(zip(acts[off[i]:off[i + 1]], dsts[off[i]:off[i + 1]]))
                for i in range(self.n_states)
            ]
        return self._out[s]

    def index_of(self, state: Hashable) -> int:
        if self._state_index is None:
            self._state_index = {st: i for i, st in enumerate(self.states)}
        return self._state_index[state]

    def enabled_ids(self, s: int) -> set[int]:
        return {a for a, _ in self.out(s)}

    def has_transition(self, s: int, label: ActionLabel, t: int) -> bool:
        a = self.label_index.get(label)
        return a is not None and (a, t) in self.out(s)

    def transitions(self) -> Iterator[tuple[int, ActionLabel, int]]:
        for s, a, t in zip(self.src.tolist(), self.act.tolist(), self.dst.tolist()):
            yield s, self.labels[a], t

    def dump(self) -> str:
        """Debug edge list, one ``<state-id> <label> <state-id>`` line per transition."""
        return "".join(f"{s} {a} {t}\n" for s, a, t in self.transitions())

    def __repr__(self) -> str:
        return f"Lts(states={self.n_states}, transitions={self.n_transitions})"


def enabled_in(lts: Lts, s: int) -> set[ActionLabel]:
    """Labels with an outgoing transition from ``s``."""
    if not isinstance(s, (int, np.integer)) or not 0 <= s < lts.n_states:
        raise KeyError(f"unknown state {s!r}")
    return {lts.labels[a] for a, _ in lts.out(int(s))}


def explore(
    initial: Hashable,
    successors: Callable[[Hashable], Iterable[tuple[ActionLabel, Hashable]]],
    alphabet: Iterable[ActionLabel] | None = None,
    budget: Budget | None = None,
) -> Lts:
    """Materialise the LTS reachable from ``initial`` under ``successors`` (BFS)."""
    budget = budget or Budget()
    index = {initial: 0}
    states = [initial]
    labels: list[ActionLabel] = []
    label_ids: dict[ActionLabel, int] = {}
    trans = []
    queue = deque([initial])
    while queue:
        st = queue.popleft()
        s = index[st]
        for label, nxt in successors(st):
            a = label_ids.get(label)
            if a is None:
                a = label_ids[label] = len(labels)
                labels.append(label)
            t = index.get(nxt)
            if t is None:
                t = index[nxt] = len(states)
                states.append(nxt)
                queue.append(nxt)
            trans.append((s, a, t))
        if len(states) & 0xFFF == 0:
            budget.check(len(states), len(trans))
    budget.check(len(states), len(trans))
    lts = Lts(states, labels, trans, alphabet if alphabet is not None else labels)
    lts._state_index = index
    return lts


def compose_parallel(components: Sequence[Lts], budget: Budget | None = None) -> Lts:
    """CSP parallel composition: shared labels need every owning component.

    Product states are tuples of component state ids.  Only the part reachable
    from the vector of initial states is built.
    """
    if not components:
        raise ValueError("need at least one component")
    budget = budget or Budget()
    alphabet = sorted(set().union(*(c.alphabet for c in components)), key=_label_key)
    gid = {a: i for i, a in enumerate(alphabet)}
    owners: list[list[int]] = [[] for _ in alphabet]
    for i, c in enumerate(components):
        for a in c.alphabet:
            owners[gid[a]].append(i)
    # per component, per local state: {global label id: targets}
    grouped = []
    for c in components:
        remap = [gid[a] for a in c.labels]
        per_state = []
        for s in range(c.n_states):
            d: dict[int, list[int]] = {}
            for a, t in c.out(s):
                d.setdefault(remap[a], []).append(t)
            per_state.append(d)
        grouped.append(per_state)

    # fire each label from its first owner, then consult the other owners
    firing = []
    for i, per_state in enumerate(grouped):
        rows = []
        for d in per_state:
            rows.append(tuple((g, tuple(ts), tuple(owners[g][1:]))
                              for g, ts in sorted(d.items()) if owners[g][0] == i))
        firing.append(rows)

    init = tuple(c.initial for c in components)
    index = {init: 0}
    states = [init]
    trans = []
    queue = deque([init])
    k = len(components)
    while queue:
        vec = queue.popleft()
        s = index[vec]
        for i in range(k):
            for g, targets, others in firing[i][vec[i]]:
                choices = [targets]
                for j in others:
                    tj = grouped[j][vec[j]].get(g)
                    if tj is None:
                        break
                    choices.append(tj)
                else:
                    positions = (i, *others)
                    for combo in itertools.product(*choices):
                        nxt = list(vec)
                        for p, v in zip(positions, combo):
                            nxt[p] = v
                        nxt = tuple(nxt)
                        t = index.get(nxt)
                        if t is None:
                            t = index[nxt] = len(states)
                            states.append(nxt)
                            queue.append(nxt)
                        trans.append((s, g, t))
        if s & 0x3FFF == 0:
            budget.check(len(states), len(trans))
    budget.check(len(states), len(trans))
    log.debug("composed %d components: %d states, %d transitions", k, len(states), len(trans))
    lts = Lts(states, alphabet, trans, alphabet)
    lts._state_index = index
    return lts


def _label_key(a: ActionLabel):
    return (a.thread, a.register or "", a.kind.value, repr(a.value))


@dataclass
class Lasso:
    """Finite representation ``prefix . cycle^omega`` of an infinite path.

    ``prefix_states[-1] == cycle_states[0] == cycle_states[-1]``.  An empty
    ``cycle_actions`` denotes a finite maximal path ending in the last prefix
    state.  Actions are label ids of the owning LTS.
    """

    prefix_states: list[int]
    prefix_actions: list[int]
    cycle_states: list[int]
    cycle_actions: list[int]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.prefix_states) != len(self.prefix_actions) + 1:
            raise ValueError("prefix must alternate states and actions")
        if len(self.cycle_states) != len(self.cycle_actions) + 1:
            raise ValueError("cycle must alternate states and actions")
        if self.cycle_states[0] != self.prefix_states[-1]:
            raise ValueError("cycle must start at the end of the prefix")
        if self.cycle_states[-1] != self.cycle_states[0]:
            raise ValueError("cycle must return to its first state")

    @property
    def is_finite(self) -> bool:
        return not self.cycle_actions

    def steps(self) -> Iterator[tuple[int, int, int]]:
        for seq_s, seq_a in ((self.prefix_states, self.prefix_actions),
                             (self.cycle_states, self.cycle_actions)):
            for i, a in enumerate(seq_a):
                yield seq_s[i], a, seq_s[i + 1]

    def replays(self, lts: Lts) -> bool:
        if self.prefix_states[0] != lts.initial:
            return False
        return all((a, t) in lts.out(s) for s, a, t in self.steps())

    def render(self, lts: Lts) -> str:
        lines = [f"{k}: {lts.labels[a]}" for k, a in enumerate(self.prefix_actions)]
        lines.append("--- cycle ---")
        base = len(self.prefix_actions)
        lines += [f"{base + k}: {lts.labels[a]}" for k, a in enumerate(self.cycle_actions)]
        return "\n".join(lines) + "\n"

    def to_json(self, lts: Lts) -> dict:
        return {
            "prefix": [str(lts.labels[a]) for a in self.prefix_actions],
            "cycle": [str(lts.labels[a]) for a in self.cycle_actions],
            **self.meta,
        }


def shortest_path(lts: Lts, targets: Iterable[int] | np.ndarray, source: int | None = None):
    """BFS from ``source`` (default initial) to the nearest state in ``targets``.

    Returns ``(states, actions)`` or ``None`` when no target is reachable.
    """
    mask = np.zeros(lts.n_states, dtype=bool)
    if isinstance(targets, np.ndarray) and targets.dtype == bool:
        mask |= targets
    else:
        mask[list(targets)] = True
    start = lts.initial if source is None else source
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if mask[s]:
            states, actions = [s], []
            while parent[s] is not None:
                p, a = parent[s]
                states.append(p)
                actions.append(a)
                s = p
            return states[::-1], actions[::-1]
        for a, t in lts.out(s):
            if t not in parent:
                parent[t] = (s, a)
                queue.append(t)
    return None
