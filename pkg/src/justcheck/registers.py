"""Safe, regular and atomic multi-writer multi-reader registers.

A register is an LTS over :class:`RegisterStatus` values.  The status object
records the stored value, the active readers and writers, the threads whose
operation has not yet taken effect (``pend``), a remembered value per thread
(``rec``), whether a thread's operation overlapped a write (``ovrl``) and the
values a regular read may still return (``posv``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Any, Iterator, Sequence

from .lts import (ActionLabel, Budget, Kind, Lts, explore, finish_read, finish_write,
                  order_read, order_write, start_read, start_write)


class RegisterKind(str, enum.Enum):
    SAFE = "safe"
    REGULAR = "regular"
    ATOMIC = "atomic"
    BLOCKING_A = "blocking_a"
    BLOCKING_I = "blocking_i"
    BLOCKING_S = "blocking_s"

    @property
    def is_blocking(self) -> bool:
        return self in _BLOCKING

    @property
    def base(self) -> "RegisterKind":
        """Kind whose finish/order summands this kind uses."""
        return RegisterKind.ATOMIC if self.is_blocking else self


_BLOCKING = {RegisterKind.BLOCKING_A, RegisterKind.BLOCKING_I, RegisterKind.BLOCKING_S}


@dataclass(frozen=True)
class RegisterConfig:
    id: str
    domain: tuple
    initial: Any = None
    kind: RegisterKind = RegisterKind.ATOMIC

    def __post_init__(self):
        domain = tuple(self.domain)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "kind", RegisterKind(self.kind))
        if not domain:
            raise ValueError(f"register {self.id}: empty domain")
        if len(set(domain)) != len(domain):
            raise ValueError(f"register {self.id}: duplicate domain values")
        if self.initial is None:
            object.__setattr__(self, "initial", domain[0])
        elif self.initial not in domain:
            raise ValueError(f"register {self.id}: initial value {self.initial!r} not in domain")

    def with_kind(self, kind: RegisterKind | str) -> "RegisterConfig":
        return replace(self, kind=RegisterKind(kind))


@dataclass(frozen=True)
class RegisterStatus:
    stor: Any
    rds: frozenset
    wrts: frozenset
    pend: frozenset
    rec: tuple
    ovrl: tuple
    posv: tuple

    @classmethod
    def initial(cls, value: Any, threads: int) -> "RegisterStatus":
        empty = frozenset()
        return cls(value, empty, empty, empty, (value,) * threads, (False,) * threads,
                   (empty,) * threads)

    @property
    def active(self) -> frozenset:
        return self.rds | self.wrts


class GuardError(ValueError):
    """An action was applied to a status where its guard does not hold."""


def _set(tup: tuple, i: int, v) -> tuple:
    return tup[:i] + (v,) + tup[i + 1:]


# update functions, one per register action

def u_sr(s: RegisterStatus, t: int) -> RegisterStatus:
    posv = frozenset({s.stor} | {s.rec[w] for w in s.wrts})
    return replace(s, rds=s.rds | {t}, pend=s.pend | {t},
                   ovrl=_set(s.ovrl, t, bool(s.wrts)), posv=_set(s.posv, t, posv))


def u_fr(s: RegisterStatus, t: int) -> RegisterStatus:
    return replace(s, rds=s.rds - {t})


def u_sw(s: RegisterStatus, t: int, d: Any) -> RegisterStatus:
    n = len(s.rec)
    ovrl = tuple(bool(s.wrts) if u == t else True for u in range(n))
    posv = tuple(p if u == t else p | {d} for u, p in enumerate(s.posv))
    return replace(s, wrts=s.wrts | {t}, pend=s.pend | {t}, rec=_set(s.rec, t, d),
                   ovrl=ovrl, posv=posv)


def u_fw(s: RegisterStatus, t: int, d: Any) -> RegisterStatus:
    return replace(s, stor=d, wrts=s.wrts - {t})


def u_or(s: RegisterStatus, t: int) -> RegisterStatus:
    return replace(s, pend=s.pend - {t}, rec=_set(s.rec, t, s.stor))


def u_ow(s: RegisterStatus, t: int, d: Any) -> RegisterStatus:
    return replace(s, stor=d, pend=s.pend - {t})


def _start_guard(kind: RegisterKind, s: RegisterStatus, t: int, write: bool) -> str | None:
    """Return a description of the violated start guard, or None."""
    if kind is RegisterKind.BLOCKING_A or (kind is RegisterKind.BLOCKING_I and write):
        return None if not s.active else "rds ∪ wrts = ∅"
    if kind in (RegisterKind.BLOCKING_I, RegisterKind.BLOCKING_S):
        if t in s.active:
            return f"{t} ∉ rds ∪ wrts"
        return None if not s.wrts else "wrts = ∅"
    return None if t not in s.active else f"{t} ∉ rds ∪ wrts"


def _internal_steps(kind: RegisterKind, s: RegisterStatus, t: int, domain: Sequence
                    ) -> Iterator[tuple[Kind, Any, RegisterStatus]]:
    """Finish and order summands for thread ``t``: ``(kind, value, status')``.

    ``value`` is the returned value for finish_read and the stored value for
    finish_write; ``None`` for order actions.
    """
    base = kind.base
    if t in s.rds:
        if base is RegisterKind.SAFE:
            for d in (domain if s.ovrl[t] else (s.stor,)):
                yield Kind.FINISH_READ, d, u_fr(s, t)
        elif base is RegisterKind.REGULAR:
            for d in domain:
                if d in s.posv[t]:
                    yield Kind.FINISH_READ, d, u_fr(s, t)
        elif t in s.pend:
            yield Kind.ORDER_READ, None, u_or(s, t)
        else:
            yield Kind.FINISH_READ, s.rec[t], u_fr(s, t)
    elif t in s.wrts:
        if base is RegisterKind.SAFE:
            for d in (domain if s.ovrl[t] else (s.rec[t],)):
                yield Kind.FINISH_WRITE, d, u_fw(s, t, d)
        elif t in s.pend:
            yield Kind.ORDER_WRITE, None, u_ow(s, t, s.rec[t])
        else:
            yield Kind.FINISH_WRITE, s.stor, u_fw(s, t, s.stor)


def update_status(s: RegisterStatus, a: ActionLabel, kind: RegisterKind | str,
                  domain: Sequence | None = None, written: Any = None) -> RegisterStatus:
    """Apply ``a`` to ``s`` after checking the guard of ``kind``.

    For a safe finish_write that overlapped another write the stored value is
    arbitrary; ``written`` selects it.  ``domain`` is needed only to validate
    such choices and arbitrary safe reads.
    """
    kind = RegisterKind(kind)
    t = a.thread
    if not 0 <= t < len(s.rec):
        raise GuardError(f"thread {t} unknown to this register")
    if a.kind in (Kind.START_READ, Kind.START_WRITE):
        violated = _start_guard(kind, s, t, a.kind is Kind.START_WRITE)
        if violated:
            raise GuardError(f"{a}: guard {violated} is false")
        return u_sr(s, t) if a.kind is Kind.START_READ else u_sw(s, t, a.value)
    if a.kind in (Kind.CRIT, Kind.NONCRIT):
        raise GuardError(f"{a} is not a register action")
    dom = tuple(domain) if domain is not None else tuple(sorted({s.stor, *s.rec, a.value} - {None}, key=repr))
    options = [(v, nxt) for k, v, nxt in _internal_steps(kind, s, t, dom) if k is a.kind]
    if a.kind is Kind.FINISH_READ:
        options = [(v, nxt) for v, nxt in options if v == a.value]
    elif a.kind is Kind.FINISH_WRITE and len(options) > 1:
        options = [(v, nxt) for v, nxt in options if v == written]
    if not options:
        raise GuardError(f"{a}: not enabled for thread {t} at this status ({_describe(s, t)})")
    return options[0][1]


def _describe(s: RegisterStatus, t: int) -> str:
    where = "reading" if t in s.rds else "writing" if t in s.wrts else "idle"
    return f"thread {where}, pending={t in s.pend}, ovrl={s.ovrl[t]}"


def normalize(s: RegisterStatus, kind: RegisterKind, default: Any) -> RegisterStatus:
    """Reset fields that cannot influence future behaviour to fixed defaults.

    Every reset field is overwritten by the thread's next start action before
    it is consulted, so the reduced LTS is bisimilar to the unreduced one.
    """
    base = kind.base
    n = len(s.rec)
    rec, ovrl, posv = list(s.rec), list(s.ovrl), list(s.posv)
    empty = frozenset()
    for t in range(n):
        if t not in s.rds and t not in s.wrts:
            rec[t], ovrl[t], posv[t] = default, False, empty
            continue
        if base is not RegisterKind.SAFE:
            ovrl[t] = False
        if base is not RegisterKind.REGULAR or t in s.wrts:
            posv[t] = empty
        if base is RegisterKind.SAFE:
            if t in s.rds or ovrl[t]:
                rec[t] = default
        elif base is RegisterKind.ATOMIC:
            if (t in s.rds) == (t in s.pend):
                # reader before its order point, or writer after it
                rec[t] = default
        elif t in s.rds:
            rec[t] = default
    # pend only matters for order actions: none for safe, none for regular reads
    if base is RegisterKind.SAFE:
        pend = frozenset()
    elif base is RegisterKind.REGULAR:
        pend = s.pend & s.wrts
    else:
        pend = s.pend
    return RegisterStatus(s.stor, s.rds, s.wrts, pend, tuple(rec), tuple(ovrl), tuple(posv))


def register_successors(config: RegisterConfig, s: RegisterStatus, threads: int,
                        reduce: bool = True) -> Iterator[tuple[ActionLabel, RegisterStatus]]:
    kind, r, dom = config.kind, config.id, config.domain
    norm = (lambda x: normalize(x, kind, config.initial)) if reduce else (lambda x: x)
    for t in range(threads):
        if _start_guard(kind, s, t, False) is None:
            yield start_read(t, r), norm(u_sr(s, t))
        if _start_guard(kind, s, t, True) is None:
            for d in dom:
                yield start_write(t, r, d), norm(u_sw(s, t, d))
        for k, v, nxt in _internal_steps(kind, s, t, dom):
            if k is Kind.FINISH_READ:
                label = finish_read(t, r, v)
            elif k is Kind.FINISH_WRITE:
                label = finish_write(t, r)
            elif k is Kind.ORDER_READ:
                label = order_read(t, r)
            else:
                label = order_write(t, r)
            yield label, norm(nxt)


def register_alphabet(config: RegisterConfig, threads: int) -> set[ActionLabel]:
    """Interface actions of a register; order actions only for kinds that have them."""
    r, base = config.id, config.kind.base
    out = set()
    for t in range(threads):
        out.add(start_read(t, r))
        out.add(finish_write(t, r))
        for d in config.domain:
            out.add(finish_read(t, r, d))
            out.add(start_write(t, r, d))
        if base is not RegisterKind.SAFE:
            out.add(order_write(t, r))
        if base is RegisterKind.ATOMIC:
            out.add(order_read(t, r))
    return out


def register_lts(config: RegisterConfig, threads: int, budget: Budget | None = None,
                 reduce: bool = True) -> Lts:
    """LTS of a safe, regular or atomic register shared by ``threads`` threads."""
    if config.kind.is_blocking:
        raise ValueError("use blocking_variant_lts for blocking kinds")
    return _build(config, threads, budget, reduce)


def blocking_variant_lts(config: RegisterConfig, threads: int, budget: Budget | None = None,
                         reduce: bool = True) -> Lts:
    """Atomic register whose start actions wait for conflicting operations."""
    if not config.kind.is_blocking:
        raise ValueError("blocking_variant_lts needs a blocking kind")
    return _build(config, threads, budget, reduce)


def _build(config, threads, budget, reduce) -> Lts:
    init = RegisterStatus.initial(config.initial, threads)
    return explore(init, lambda s: register_successors(config, s, threads, reduce),
                   register_alphabet(config, threads), budget)


def any_register_lts(config: RegisterConfig, threads: int, budget: Budget | None = None) -> Lts:
    return _build(config, threads, budget, True)
