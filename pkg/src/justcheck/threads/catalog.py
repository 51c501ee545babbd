"""Built-in mutual exclusion algorithms.

Each builder takes the thread id ``i`` and thread count ``n`` and returns the
statement list of thread ``i``'s entry protocol, critical section and exit
protocol.  ``j`` is the other thread for two-thread algorithms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..registers import RegisterConfig
from .ir import (Assign, Await, Crit, For, Goto, If, Label, Reg, RepeatUntil, ThreadProgram,
                 Var, While, Write, add, and_, call, eq, ge, gt, lt, mod, ne, not_, or_, read)

BOOL = (False, True)


@dataclass
class AlgorithmSpec:
    name: str
    variant: str
    threads: int
    registers: dict[str, RegisterConfig]
    programs: list[ThreadProgram]
    title: str = ""

    def __post_init__(self):
        if len(self.programs) != self.threads:
            raise ValueError("one program per thread is required")


class UnknownAlgorithm(KeyError):
    pass


def _bools(base: str, n: int, initial=False) -> list[RegisterConfig]:
    return [RegisterConfig(f"{base}{t}", BOOL, initial) for t in range(n)]


def _ints(base: str, n: int, values, initial=0, indexed=True) -> list[RegisterConfig]:
    if not indexed:
        return [RegisterConfig(base, tuple(values), initial)]
    return [RegisterConfig(f"{base}{t}", tuple(values), initial) for t in range(n)]


def _write_if_changed(base: str, value) -> If:
    """Read the register first and write only when the value would change."""
    return If(ne(Reg(base), value), [Write(base, None, value)])


# Peterson

def peterson(i: int, n: int, variant: str) -> list:
    j = 1 - i
    return [
        Write("flag", i, True),
        Write("turn", None, i),
        Await(or_(eq(Reg("flag", j), False), eq(Reg("turn"), j))),
        Crit(),
        Write("flag", i, False),
    ]


def peterson_registers(n: int):
    return _bools("flag", n) + _ints("turn", n, range(n), indexed=False)


# Dekker

def dekker(i: int, n: int, variant: str) -> list:
    j = 1 - i
    if variant == "rw_safe":
        wait = Await(or_(eq(Reg("turn"), i), eq(Reg("flag", j), False)))
    else:
        wait = Await(eq(Reg("turn"), i))
    exit_turn = Write("turn", None, j) if variant == "base" else _write_if_changed("turn", j)
    return [
        Write("flag", i, True),
        While(eq(Reg("flag", j), True), [
            If(eq(Reg("turn"), j), [
                Write("flag", i, False),
                wait,
                Write("flag", i, True),
            ]),
        ]),
        Crit(),
        exit_turn,
        Write("flag", i, False),
    ]


# Aravind BLRU

def aravind(i: int, n: int, variant: str) -> list:
    others = [j for j in range(n) if j != i]

    def passes(j):
        later = lt(Reg("date", i), Reg("date", j))
        if variant == "alt":
            later = and_(later, eq(Reg("stage", j), False))
        return or_(eq(Reg("flag", j), False), later)

    return [
        Write("flag", i, True),
        RepeatUntil([
            Write("stage", i, False),
            *[Await(passes(j)) for j in others],
            Write("stage", i, True),
        ], and_(*[eq(Reg("stage", j), False) for j in others])),
        Crit(),
        Assign("d", add(call(max, *[Reg("date", j) for j in range(n)]), 1)),
        Write("date", i, Var("d")),
        If(ge(Var("d"), 2 * n - 1), [Write("date", j, j) for j in range(n)]),
        Write("stage", i, False),
        Write("flag", i, False),
    ]


def aravind_registers(n: int):
    dates = [RegisterConfig(f"date{t}", tuple(range(2 * n)), t) for t in range(n)]
    return _bools("flag", n) + _bools("stage", n) + dates


# Anderson (asymmetric, two threads)

def anderson(i: int, n: int, variant: str) -> list:
    j = 1 - i
    if i == 0:
        x = [read("x", "t", j)]
        wait_true, wait_false = [Write("p", i, True), Await(eq(Reg("p", j), True))], \
                                [Write("q", i, True), Await(eq(Reg("q", j), True))]
    else:
        x = [Assign("x", not_(Reg("t", j)))]
        wait_true, wait_false = [Write("q", i, True), Await(eq(Reg("p", j), True))], \
                                [Write("p", i, True), Await(eq(Reg("q", j), True))]
    return [
        Write("p", i, False),
        Write("q", i, False),
        *x,
        Write("t", i, Var("x")),
        If(eq(Var("x"), True), wait_true, wait_false),
        Crit(),
        Write("p", i, True),
        Write("q", i, True),
    ]


def anderson_registers(n: int):
    return _bools("p", n, True) + _bools("q", n, True) + _bools("t", n, True)


# Attiya-Welch

def attiya_welch(i: int, n: int, variant: str) -> list:
    j = 1 - i
    flag_free = eq(Reg("flag", j), False)
    exit_turn = _write_if_changed("turn", i) if variant.endswith("alt") else Write("turn", None, i)
    if variant in ("orig", "orig_alt"):
        entry = [
            Label("L1"),
            Write("flag", i, False),
            Await(or_(flag_free, eq(Reg("turn"), j))),
            Write("flag", i, True),
            If(eq(Reg("turn"), i),
               [If(eq(Reg("flag", j), True), [Goto("L1")])],
               [Await(flag_free)]),
        ]
    elif variant == "var":
        entry = [
            RepeatUntil([
                Write("flag", i, False),
                Await(or_(flag_free, eq(Reg("turn"), j))),
                Write("flag", i, True),
            ], or_(eq(Reg("turn"), j), flag_free)),
            If(eq(Reg("turn"), j), [Await(flag_free)]),
        ]
    else:  # var_alt: one read of turn serves both tests
        entry = [
            RepeatUntil([
                Write("flag", i, False),
                Await(or_(flag_free, eq(Reg("turn"), j))),
                Write("flag", i, True),
                read("tv", "turn"),
            ], or_(eq(Var("tv"), j), flag_free)),
            If(eq(Var("tv"), j), [Await(flag_free)]),
        ]
    return [*entry, Crit(), exit_turn, Write("flag", i, False)]


# Burns-Lynch

def burns_lynch(i: int, n: int, variant: str) -> list:
    lower = range(i)
    return [
        RepeatUntil([
            Write("flag", i, False),
            *[Await(eq(Reg("flag", j), False)) for j in lower],
            Write("flag", i, True),
        ], and_(*[eq(Reg("flag", j), False) for j in lower])),
        *[Await(eq(Reg("flag", j), False)) for j in range(i + 1, n)],
        Crit(),
        Write("flag", i, False),
    ]


# Lamport 1-bit

def lamport_1bit_parts(i: int, n: int, flag: str = "flag") -> tuple[list, list]:
    entry = [Label("lamport_l"), Write(flag, i, True)]
    for j in range(i):
        entry.append(If(eq(Reg(flag, j), True), [
            Write(flag, i, False),
            Await(eq(Reg(flag, j), False)),
            Goto("lamport_l"),
        ]))
    entry += [Await(eq(Reg(flag, j), False)) for j in range(i + 1, n)]
    return entry, [Write(flag, i, False)]


def lamport_1bit(i: int, n: int, variant: str) -> list:
    entry, exit_ = lamport_1bit_parts(i, n)
    return [*entry, Crit(), *exit_]


# Dekker RW-safe split into entry/exit for the wrapper

def dekker_parts(i: int, n: int, variant: str) -> tuple[list, list]:
    body = dekker(i, n, variant)
    k = next(p for p, s in enumerate(body) if isinstance(s, Crit))
    return body[:k], body[k + 1:]


# Deadlock freedom to starvation freedom wrapper

def dftosf(inner: Callable[[int, int], tuple[list, list]]):
    def build(i: int, n: int, variant: str) -> list:
        entry, exit_ = inner(i, n)
        return [
            Write("sf_flag", i, True),
            RepeatUntil([read("tmp", "sf_turn")],
                        or_(eq(Var("tmp"), i), eq(Reg("sf_flag", Var("tmp")), False))),
            *entry,
            Crit(),
            Write("sf_flag", i, False),
            read("tmp", "sf_turn"),
            If(eq(Reg("sf_flag", Var("tmp")), False),
               [Write("sf_turn", None, mod(add(Var("tmp"), 1), n))]),
            *exit_,
        ]
    return build


def dftosf_registers(n: int):
    return _bools("sf_flag", n) + _ints("sf_turn", n, range(n), indexed=False)


# Dijkstra

def dijkstra(i: int, n: int, variant: str) -> list:
    return [
        Write("b", i, False),
        Label("L1"),
        If(ne(Reg("k"), i), [
            Write("c", i, True),
            If(eq(Reg("b", Reg("k")), True), [Write("k", None, i)]),
            Goto("L1"),
        ], [
            Write("c", i, False),
            *[If(eq(Reg("c", j), False), [Goto("L1")]) for j in range(n) if j != i],
        ]),
        Crit(),
        Write("c", i, True),
        Write("b", i, True),
    ]


def dijkstra_registers(n: int):
    return _bools("b", n, True) + _bools("c", n, True) + _ints("k", n, range(n), indexed=False)


# Kessels: thread i owns q[j] and r[j]

def kessels(i: int, n: int, variant: str) -> list:
    j = 1 - i
    return [
        Write("q", j, True),
        Write("r", j, mod(add(Reg("r", i), j), 2)),
        Await(or_(eq(Reg("q", i), False), ne(Reg("r", j), mod(add(Reg("r", i), j), 2)))),
        Crit(),
        Write("q", j, False),
    ]


def kessels_registers(n: int):
    return _bools("q", n) + _ints("r", n, range(2))


# Knuth

def knuth(i: int, n: int, variant: str) -> list:
    def scan(start):
        return For("j", start, 0, [
            If(eq(Var("j"), i), [Goto("L2")]),
            If(ne(Reg("control", Var("j")), 0), [Goto("L1")]),
        ], step=-1)

    return [
        Label("L0"),
        Write("control", i, 1),
        Label("L1"),
        scan(Reg("k")),
        scan(n - 1),
        Label("L2"),
        Write("control", i, 2),
        *[If(eq(Reg("control", j), 2), [Goto("L0")]) for j in range(n - 1, -1, -1) if j != i],
        Write("k", None, i),
        Crit(),
        Write("k", None, n - 1 if i == 0 else i - 1),
        Write("control", i, 0),
    ]


def knuth_registers(n: int):
    return _ints("control", n, range(3)) + _ints("k", n, range(n), indexed=False)


# Lamport 3-bit

def _ord_true(*ys) -> tuple:
    return tuple(j for j, y in enumerate(ys) if y)


def _first_cg(gamma: tuple, zeta: tuple, own: int) -> int:
    """gamma(min{h | CG(zeta, h)}) with 1-based positions as in the definition.

    CG has a solution for every non-empty snapshot.  An empty ``gamma`` needs a
    read of the thread's own y as false after writing true; the thread LTS
    explores that branch but no composed model performs it, so ``own`` is
    returned there.
    """
    m = len(zeta)
    if not m:
        return own
    for h in range(m):
        expected = zeta[m - 1] if h == 0 else not zeta[h - 1]
        if zeta[h] == expected:
            return gamma[h]
    raise AssertionError("CG has no solution")  # unreachable for any snapshot


def lamport_3bit(i: int, n: int, variant: str) -> list:
    step = lambda v: mod(add(v, 1), n)  # noqa: E731
    snapshot = [
        Assign("zeta", ()),
        Assign("h", 0),
        While(lt(Var("h"), call(len, Var("gamma"))), [
            Assign("zeta", call(lambda z, b: z + (b,), Var("zeta"),
                                Reg("z", call(lambda g, h: g[h], Var("gamma"), Var("h"))),
                                name="append")),
            Assign("h", add(Var("h"), 1)),
        ]),
    ]
    return [
        Write("y", i, True),
        Label("L1"),
        Write("x", i, True),
        Label("L2"),
        Assign("gamma", call(_ord_true, *[Reg("y", j) for j in range(n)])),
        *snapshot,
        Assign("f", call(_first_cg, Var("gamma"), Var("zeta"), i)),
        Assign("j", Var("f")),
        While(ne(Var("j"), i), [
            If(eq(Reg("y", Var("j")), True), [
                If(eq(Reg("x", i), True), [Write("x", i, False)]),
                Goto("L2"),
            ]),
            Assign("j", step(Var("j"))),
        ]),
        If(eq(Reg("x", i), False), [Goto("L1")]),
        Assign("j", (i + 1) % n),
        While(ne(Var("j"), Var("f")), [
            If(eq(Reg("x", Var("j")), True), [Goto("L2")]),
            Assign("j", step(Var("j"))),
        ]),
        Crit(),
        If(eq(Reg("z", i), True), [Write("z", i, False)], [Write("z", i, True)]),
        Write("x", i, False),
        Write("y", i, False),
    ]


def lamport_3bit_registers(n: int):
    return _bools("x", n) + _bools("y", n) + _bools("z", n)


# Szymanski flag

def szymanski_flag_int(i: int, n: int, variant: str) -> list:
    flag = lambda j: Reg("flag", j)  # noqa: E731
    return [
        Write("flag", i, 1),
        *[Await(lt(flag(j), 3)) for j in range(n)],
        Write("flag", i, 3),
        If(or_(*[eq(flag(j), 1) for j in range(n)]), [
            Write("flag", i, 2),
            Await(or_(*[eq(flag(j), 4) for j in range(n)])),
        ]),
        Write("flag", i, 4),
        *[Await(lt(flag(j), 2)) for j in range(i)],
        Crit(),
        *[Await(or_(lt(flag(j), 2), gt(flag(j), 3))) for j in range(i + 1, n)],
        Write("flag", i, 0),
    ]


def szymanski_flag_bit(i: int, n: int, variant: str) -> list:
    intent = lambda j: Reg("intent", j)  # noqa: E731
    din = lambda j: Reg("door_in", j)  # noqa: E731
    dout = lambda j: Reg("door_out", j)  # noqa: E731
    if variant == "bit_alt":
        exit_ = [Write("door_out", i, False), Write("intent", i, False), Write("door_in", i, False)]
    else:
        exit_ = [Write("intent", i, False), Write("door_in", i, False), Write("door_out", i, False)]
    return [
        Write("intent", i, True),
        *[Await(or_(eq(intent(j), False), eq(din(j), False))) for j in range(n)],
        Write("door_in", i, True),
        If(or_(*[and_(eq(intent(j), True), eq(din(j), False)) for j in range(n)]), [
            Write("intent", i, False),
            Await(or_(*[eq(dout(j), True) for j in range(n)])),
        ]),
        If(eq(intent(i), False), [Write("intent", i, True)]),
        Write("door_out", i, True),
        *[Await(eq(din(j), False)) for j in range(i)],
        Crit(),
        *[Await(or_(eq(din(j), False), eq(dout(j), True))) for j in range(i + 1, n)],
        *exit_,
    ]


def szymanski_flag(i: int, n: int, variant: str) -> list:
    return (szymanski_flag_int if variant == "int" else szymanski_flag_bit)(i, n, variant)


def szymanski_flag_registers(n: int, variant: str):
    if variant == "int":
        return _ints("flag", n, range(5))
    return _bools("intent", n) + _bools("door_in", n) + _bools("door_out", n)


# Szymanski 3-bit linear wait

def szymanski_3bit(i: int, n: int, variant: str) -> list:
    j = Var("j")
    inc = Assign("j", add(j, 1))
    count_a = [Assign("j", 0), While(and_(lt(j, n), eq(Reg("a", j), False)), [inc])]
    if variant == "alt":
        line18 = or_(eq(Reg("s", j), False), eq(Reg("w", j), True))
    else:
        line18 = or_(eq(Reg("w", j), True), eq(Reg("s", j), False))
    return [
        Write("a", i, True),
        *[Await(eq(Reg("s", k), False)) for k in range(n)],
        Write("w", i, True),
        Write("a", i, False),
        While(eq(Reg("s", i), False), [
            *count_a,
            If(eq(j, n), [
                Write("s", i, True),
                *count_a,
                If(lt(j, n), [Write("s", i, False)], [
                    Write("w", i, False),
                    *[Await(eq(Reg("w", k), False)) for k in range(n)],
                ]),
            ]),
            If(lt(j, n), [
                Assign("j", 0),
                While(and_(lt(j, n), line18), [inc]),
            ]),
            If(and_(ne(j, i), lt(j, n)), [
                Write("s", i, True),
                Write("w", i, False),
            ]),
        ]),
        *[Await(eq(Reg("s", k), False)) for k in range(i)],
        Crit(),
        Write("s", i, False),
    ]


def szymanski_3bit_registers(n: int):
    return _bools("a", n) + _bools("w", n) + _bools("s", n)


@dataclass(frozen=True)
class Entry:
    build: Callable[[int, int, str], list]
    registers: Callable[[int], list]
    threads: tuple[int, ...]
    title: str
    table_threads: int | None = None  # thread count of the reference results row
    programs: Callable | None = field(default=None)


def _dftosf_lamport(i, n):
    return lamport_1bit_parts(i, n)


def _dftosf_dekker(i, n):
    return dekker_parts(i, n, "rw_safe")


_ANY = (2, 3)

CATALOG: dict[tuple[str, str], Entry] = {
    ("anderson", "base"): Entry(anderson, anderson_registers, (2,), "Anderson", 2),
    ("aravind_blru", "base"): Entry(aravind, aravind_registers, _ANY, "Aravind BLRU", 3),
    ("aravind_blru", "alt"): Entry(aravind, aravind_registers, _ANY, "Aravind BLRU (alt.)", 3),
    ("attiya_welch", "orig"): Entry(attiya_welch, peterson_registers, (2,), "Attiya-Welch (orig.)", 2),
    ("attiya_welch", "orig_alt"): Entry(attiya_welch, peterson_registers, (2,),
                                        "Attiya-Welch (orig. alt.)", 2),
    ("attiya_welch", "var"): Entry(attiya_welch, peterson_registers, (2,), "Attiya-Welch (var.)", 2),
    ("attiya_welch", "var_alt"): Entry(attiya_welch, peterson_registers, (2,),
                                       "Attiya-Welch (var. alt.)", 2),
    ("burns_lynch", "base"): Entry(burns_lynch, lambda n: _bools("flag", n), _ANY, "Burns-Lynch", 3),
    ("dekker", "base"): Entry(dekker, peterson_registers, (2,), "Dekker", 2),
    ("dekker", "alt"): Entry(dekker, peterson_registers, (2,), "Dekker (alt.)", 2),
    ("dekker", "rw_safe"): Entry(dekker, peterson_registers, (2,), "Dekker (RW-safe)", 2),
    ("dftosf", "dekker_rw_safe"): Entry(
        dftosf(_dftosf_dekker), lambda n: peterson_registers(n) + dftosf_registers(n), (2,),
        "Dekker (RW-safe, DFtoSF)", 2),
    ("dijkstra", "base"): Entry(dijkstra, dijkstra_registers, _ANY, "Dijkstra", 3),
    ("kessels", "base"): Entry(kessels, kessels_registers, (2,), "Kessels", 2),
    ("knuth", "base"): Entry(knuth, knuth_registers, _ANY, "Knuth", 3),
    ("lamport_1bit", "base"): Entry(lamport_1bit, lambda n: _bools("flag", n), _ANY,
                                    "Lamport 1-bit", 3),
    ("dftosf", "lamport1bit"): Entry(
        dftosf(_dftosf_lamport), lambda n: _bools("flag", n) + dftosf_registers(n), _ANY,
        "Lamport 1-bit (DFtoSF)", 3),
    ("lamport_3bit", "base"): Entry(lamport_3bit, lamport_3bit_registers, _ANY, "Lamport 3-bit", 3),
    ("peterson", "base"): Entry(peterson, peterson_registers, (2,), "Peterson", 2),
    ("szymanski_flag", "int"): Entry(szymanski_flag, lambda n: szymanski_flag_registers(n, "int"),
                                     _ANY, "Szymanski flag (int.)", 3),
    ("szymanski_flag", "bit"): Entry(szymanski_flag, lambda n: szymanski_flag_registers(n, "bit"),
                                     _ANY, "Szymanski flag (bit)", 3),
    ("szymanski_flag", "bit_alt"): Entry(szymanski_flag,
                                         lambda n: szymanski_flag_registers(n, "bit"),
                                         _ANY, "Szymanski flag (bit, alt. exit)"),
    ("szymanski_3bit", "base"): Entry(szymanski_3bit, szymanski_3bit_registers, _ANY,
                                      "Szymanski 3-bit lin. wait", 3),
    ("szymanski_3bit", "alt"): Entry(szymanski_3bit, szymanski_3bit_registers, _ANY,
                                     "Szymanski 3-bit lin. wait (alt.)", 2),
}


def algorithm_catalog(name: str, variant: str = "base", threads: int | None = None
                      ) -> AlgorithmSpec:
    """Look up an algorithm and instantiate it for ``threads`` threads."""
    entry = CATALOG.get((name, variant))
    if entry is None:
        raise UnknownAlgorithm(f"unknown algorithm {name!r} variant {variant!r}")
    n = threads if threads is not None else (entry.table_threads or entry.threads[0])
    if n not in entry.threads:
        raise UnknownAlgorithm(f"{name}/{variant} supports {entry.threads} threads, not {n}")
    regs = {cfg.id: cfg for cfg in entry.registers(n)}
    programs = [ThreadProgram(i, entry.build(i, n, variant), f"{name}/{variant}#{i}")
                for i in range(n)]
    return AlgorithmSpec(name, variant, n, regs, programs, entry.title)


def list_algorithms() -> list[tuple[str, str, tuple[int, ...], str, int | None]]:
    return [(name, variant, e.threads, e.title, e.table_threads)
            for (name, variant), e in CATALOG.items()]
