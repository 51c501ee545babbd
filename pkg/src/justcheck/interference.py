"""Concurrency relations T, S, I, A and the thread-consistency check.

``interferes(mode, a, b)`` is the complement of the concurrency relation:
it holds when an occurrence of ``b`` may disable or postpone ``a``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .lts import ActionLabel, Kind


class Mode(str, enum.Enum):
    T = "T"
    S = "S"
    I = "I"  # noqa: E741
    A = "A"


MODES = (Mode.T, Mode.S, Mode.I, Mode.A)

_SR, _SW = Kind.START_READ, Kind.START_WRITE


def _register_interferers(mode: Mode, kind: Kind) -> frozenset:
    """Kinds of other threads' actions on the same register that interfere with ``kind``."""
    if mode is Mode.T or kind not in (_SR, _SW):
        return frozenset()
    out = {_SW}
    if mode in (Mode.I, Mode.A) and kind is _SW:
        out.add(_SR)
    if mode is Mode.A and kind is _SR:
        out.add(_SR)
    return frozenset(out)


def interferes(mode: Mode | str, a: ActionLabel, b: ActionLabel) -> bool:
    mode = Mode(mode)
    if a.thread == b.thread:
        return True
    if a.register is None or a.register != b.register:
        return False
    return b.kind in _register_interferers(mode, a.kind)


def concurrent(mode: Mode | str, a: ActionLabel, b: ActionLabel) -> bool:
    """The concurrency relation itself: ``b`` cannot affect ``a``."""
    return not interferes(mode, a, b)


@dataclass(frozen=True)
class InterfererClass:
    """Finite description of ``{b | interferes(mode, a, b)}``.

    Matches ``b`` when ``b.thread == thread`` or ``b`` acts on ``register`` with
    a kind in ``kinds``.
    """

    thread: int
    register: str | None = None
    kinds: tuple = ()

    def matches(self, b: ActionLabel) -> bool:
        if b.thread == self.thread:
            return True
        return self.register is not None and b.register == self.register and b.kind in self.kinds

    def sort_key(self) -> tuple:
        return self.thread, self.register or "", tuple(k.value for k in self.kinds)

    def __str__(self) -> str:
        s = f"thr={self.thread}"
        if self.register is not None:
            s += f" | {'/'.join(k.value for k in self.kinds)} on {self.register}"
        return s


def interferer_class(mode: Mode | str, a: ActionLabel) -> InterfererClass:
    kinds = _register_interferers(Mode(mode), a.kind)
    if not kinds:
        return InterfererClass(a.thread)
    return InterfererClass(a.thread, a.register, tuple(sorted(kinds, key=lambda k: k.value)))


def is_blockable(a: ActionLabel) -> bool:
    """Members of the blockable set: a thread may stay in its non-critical section."""
    return a.kind is Kind.NONCRIT


def blockable_set(labels: Iterable[ActionLabel]) -> frozenset[ActionLabel]:
    return frozenset(a for a in labels if is_blockable(a))


def check_thread_consistency(model, thread_of=None):
    """Return ``None`` if consistent, else the first ``(s, a, b, s')`` violation.

    Consistency: whenever ``a`` is enabled at ``s`` and ``s --b--> s'`` with
    ``b`` by another thread, ``a`` is still enabled at ``s'``.
    """
    lts = model.lts if hasattr(model, "lts") else model
    thread_of = thread_of or (lambda lab: lab.thread)
    labels = lts.labels
    enabled = [frozenset(a for a, _ in lts.out(s)) for s in range(lts.n_states)]
    for s in range(lts.n_states):
        for b, t in lts.out(s):
            tb = thread_of(labels[b])
            lost = enabled[s] - enabled[t]
            for a in sorted(lost):
                if thread_of(labels[a]) != tb:
                    return s, labels[a], labels[b], t
    return None
