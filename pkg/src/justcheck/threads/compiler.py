"""Compile a :class:`ThreadProgram` to a thread LTS.

The structured program is lowered to a flat instruction list.  Register reads
inside conditions become explicit read instructions into fresh temporaries, so
each register occurrence costs one start_read/finish_read pair.  Exploration
then runs local instructions eagerly: a thread LTS state is an instruction
that performs an action, the values of the live locals, and a phase (before
the start action or waiting for the matching finish).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Mapping

from ..lts import (ActionLabel, Budget, Kind, Lts, crit, explore, finish_read, finish_write,
                   noncrit, start_read, start_write)
from ..registers import RegisterConfig
from .ir import (And, Assign, Await, Const, Crit, For, Goto, If, Label, Not, Op, Or, Reg,
                 RepeatUntil, ThreadProgram, Var, While, Write, lift)


class CompileError(ValueError):
    pass


def register_id(base: str, index: Any) -> str:
    return base if index is None else f"{base}{index}"


# flat instructions

@dataclass(frozen=True)
class IRead:
    dest: str
    base: str
    index: Any  # local-only expression or None


@dataclass(frozen=True)
class IWrite:
    base: str
    index: Any
    value: Any


@dataclass(frozen=True)
class IAssign:
    dest: str
    expr: Any


@dataclass(frozen=True)
class IBranch:
    cond: Any
    on_true: int
    on_false: int


@dataclass(frozen=True)
class IJump:
    target: int


@dataclass(frozen=True)
class ICrit:
    pass


@dataclass(frozen=True)
class INonCrit:
    pass


ACTION_INSTRUCTIONS = (IRead, IWrite, ICrit, INonCrit)


class _Lowerer:
    def __init__(self):
        self.code: list = []
        self.fixups: list[tuple[int, str, str]] = []  # (pc, field, label)
        self.labels: dict[str, int] = {}
        self.fresh = itertools.count()

    def new_label(self) -> str:
        return f"@{next(self.fresh)}"

    def place(self, label: str) -> None:
        if label in self.labels:
            raise CompileError(f"duplicate label {label!r}")
        self.labels[label] = len(self.code)

    def emit(self, instr) -> int:
        self.code.append(instr)
        return len(self.code) - 1

    def jump(self, label: str) -> None:
        pc = self.emit(IJump(-1))
        self.fixups.append((pc, "target", label))

    def branch(self, cond, t: str, f: str) -> None:
        pc = self.emit(IBranch(cond, -1, -1))
        self.fixups.append((pc, "on_true", t))
        self.fixups.append((pc, "on_false", f))

    def temp(self) -> str:
        return f"_t{next(self.fresh)}"

    # expressions

    def reads(self, e):
        """Emit the reads in ``e`` (left to right); return a local-only expression."""
        e = lift(e)
        if isinstance(e, (Const, Var)):
            return e
        if isinstance(e, Reg):
            index = None if e.index is None else self.reads(e.index)
            tmp = self.temp()
            self.emit(IRead(tmp, e.base, index))
            return Var(tmp)
        if isinstance(e, Op):
            return Op(e.fn, tuple(self.reads(a) for a in e.args), e.name)
        if isinstance(e, (And, Or)):
            return type(e)(tuple(self.reads(a) for a in e.args))
        if isinstance(e, Not):
            return Not(self.reads(e.arg))
        raise CompileError(f"unsupported expression {e!r}")

    def cond(self, e, t: str, f: str) -> None:
        e = lift(e)
        if isinstance(e, (And, Or)):
            for sub in e.args[:-1]:
                nxt = self.new_label()
                if isinstance(e, And):
                    self.cond(sub, nxt, f)
                else:
                    self.cond(sub, t, nxt)
                self.place(nxt)
            self.cond(e.args[-1], t, f)
        elif isinstance(e, Not):
            self.cond(e.arg, f, t)
        else:
            self.branch(self.reads(e), t, f)

    # statements

    def block(self, stmts) -> None:
        for s in stmts:
            self.stmt(s)

    def stmt(self, s) -> None:
        if isinstance(s, list):
            self.block(s)
        elif isinstance(s, Write):
            index = None if s.index is None else self.reads(s.index)
            value = self.reads(s.value)
            self.emit(IWrite(s.base, index, value))
        elif isinstance(s, Assign):
            e = lift(s.expr)
            if isinstance(e, Reg):
                index = None if e.index is None else self.reads(e.index)
                self.emit(IRead(s.local, e.base, index))
            else:
                self.emit(IAssign(s.local, self.reads(e)))
        elif isinstance(s, Await):
            top, done = self.new_label(), self.new_label()
            self.place(top)
            self.cond(s.cond, done, top)
            self.place(done)
        elif isinstance(s, If):
            t, f, end = self.new_label(), self.new_label(), self.new_label()
            self.cond(s.cond, t, f)
            self.place(t)
            self.block(s.then)
            self.jump(end)
            self.place(f)
            self.block(s.orelse)
            self.place(end)
        elif isinstance(s, While):
            top, body, done = self.new_label(), self.new_label(), self.new_label()
            self.place(top)
            self.cond(s.cond, body, done)
            self.place(body)
            self.block(s.body)
            self.jump(top)
            self.place(done)
        elif isinstance(s, RepeatUntil):
            top, done = self.new_label(), self.new_label()
            self.place(top)
            self.block(s.body)
            self.cond(s.cond, done, top)
            self.place(done)
        elif isinstance(s, For):
            if s.step not in (1, -1):
                raise CompileError("for-loops step by +1 or -1")
            self.emit(IAssign(s.local, self.reads(s.start)))
            stop = self.reads(s.stop)
            if not isinstance(stop, Const):
                bound = self.temp()
                self.emit(IAssign(bound, stop))
                stop = Var(bound)
            top, body, done = self.new_label(), self.new_label(), self.new_label()
            self.place(top)
            cmp = Op((lambda a, b: a <= b) if s.step > 0 else (lambda a, b: a >= b),
                     (Var(s.local), stop), "<=" if s.step > 0 else ">=")
            self.branch(cmp, body, done)
            self.place(body)
            self.block(s.body)
            self.emit(IAssign(s.local, Op(lambda a, k=s.step: a + k, (Var(s.local),), "step")))
            self.jump(top)
            self.place(done)
        elif isinstance(s, Label):
            self.place(s.name)
        elif isinstance(s, Goto):
            self.jump(s.name)
        elif isinstance(s, Crit):
            self.emit(ICrit())
        else:
            raise CompileError(f"unsupported statement {s!r}")

    def finish(self) -> list:
        code = list(self.code)
        for pc, attr, label in self.fixups:
            if label not in self.labels:
                raise CompileError(f"goto to unknown label {label!r}")
            target = self.labels[label]
            instr = code[pc]
            code[pc] = type(instr)(**{**instr.__dict__, attr: target})
        return code


def _count_crit(stmts) -> int:
    n = 0
    for s in stmts:
        if isinstance(s, Crit):
            n += 1
        elif isinstance(s, list):
            n += _count_crit(s)
        elif isinstance(s, If):
            n += _count_crit(s.then) + _count_crit(s.orelse)
        elif isinstance(s, (While, RepeatUntil, For)):
            n += _count_crit(s.body)
    return n


def lower(program: ThreadProgram) -> list:
    """Flat instruction list: noncrit, the protocol, then a jump back to the start."""
    if _count_crit(program.body) != 1:
        raise CompileError("the critical section must appear exactly once")
    lw = _Lowerer()
    lw.emit(INonCrit())
    lw.block(program.body)
    lw.emit(IJump(0))
    return lw.finish()


# evaluation of local-only expressions

def evaluate(e, env: Mapping[str, Any]):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise CompileError(f"local {e.name!r} read before assignment") from None
    if isinstance(e, Op):
        return e.fn(*(evaluate(a, env) for a in e.args))
    if isinstance(e, And):
        return all(evaluate(a, env) for a in e.args)
    if isinstance(e, Or):
        return any(evaluate(a, env) for a in e.args)
    if isinstance(e, Not):
        return not evaluate(e.arg, env)
    raise CompileError(f"register read left in local expression: {e!r}")


def _uses(e) -> set[str]:
    if e is None or isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Op):
        return set().union(*map(_uses, e.args)) if e.args else set()
    if isinstance(e, (And, Or)):
        return set().union(*map(_uses, e.args))
    if isinstance(e, Not):
        return _uses(e.arg)
    return set()


def _successors(code, pc):
    ins = code[pc]
    if isinstance(ins, IJump):
        return [ins.target]
    if isinstance(ins, IBranch):
        return [ins.on_true, ins.on_false]
    return [pc + 1]


def liveness(code: list) -> list[frozenset]:
    """Live-in local names per instruction (standard backward dataflow)."""
    uses, defs = [], []
    for ins in code:
        if isinstance(ins, IRead):
            uses.append(_uses(ins.index)); defs.append({ins.dest})
        elif isinstance(ins, IWrite):
            uses.append(_uses(ins.index) | _uses(ins.value)); defs.append(set())
        elif isinstance(ins, IAssign):
            uses.append(_uses(ins.expr)); defs.append({ins.dest})
        elif isinstance(ins, IBranch):
            uses.append(_uses(ins.cond)); defs.append(set())
        else:
            uses.append(set()); defs.append(set())
    live = [set() for _ in code]
    preds = [[] for _ in code]
    for pc in range(len(code)):
        for q in _successors(code, pc):
            preds[q].append(pc)
    work = list(range(len(code)))
    while work:
        pc = work.pop()
        out = set().union(*(live[q] for q in _successors(code, pc)))
        new = uses[pc] | (out - defs[pc])
        if new != live[pc]:
            live[pc] = new
            work.extend(preds[pc])
    return [frozenset(x) for x in live]


@dataclass(frozen=True)
class ControlState:
    pc: int
    env: tuple  # sorted (name, value) pairs of live locals
    waiting: bool = False  # start action done, finish pending

    def __str__(self):
        locals_ = ",".join(f"{k}={v}" for k, v in self.env)
        return f"pc{self.pc}{'*' if self.waiting else ''}[{locals_}]"


def thread_alphabet(thread: int, registers: Mapping[str, RegisterConfig]) -> set[ActionLabel]:
    out = {crit(thread), noncrit(thread)}
    for r, cfg in registers.items():
        out.add(start_read(thread, r))
        out.add(finish_write(thread, r))
        for d in cfg.domain:
            out.add(finish_read(thread, r, d))
            out.add(start_write(thread, r, d))
    return out


class _Explorer:
    def __init__(self, program: ThreadProgram, registers: Mapping[str, RegisterConfig]):
        self.t = program.thread
        self.registers = registers
        self.code = lower(program)
        self.live = liveness(self.code)

    def settle(self, pc: int, env: dict) -> ControlState:
        seen = set()
        code = self.code
        while not isinstance(code[pc], ACTION_INSTRUCTIONS):
            key = (pc, tuple(sorted((k, env[k]) for k in self.live[pc] if k in env)))
            if key in seen:
                raise CompileError(f"thread {self.t}: local loop without register actions at pc {pc}")
            seen.add(key)
            ins = code[pc]
            if isinstance(ins, IAssign):
                env = {**env, ins.dest: evaluate(ins.expr, env)}
                pc += 1
            elif isinstance(ins, IBranch):
                pc = ins.on_true if evaluate(ins.cond, env) else ins.on_false
            else:
                pc = ins.target
        live = self.live[pc]
        return ControlState(pc, tuple(sorted((k, v) for k, v in env.items() if k in live)))

    def register(self, base: str, index, env) -> RegisterConfig:
        idx = None if index is None else evaluate(index, env)
        rid = register_id(base, idx)
        cfg = self.registers.get(rid)
        if cfg is None:
            raise CompileError(f"thread {self.t}: unknown register {rid!r}")
        return cfg

    def successors(self, st: ControlState):
        ins = self.code[st.pc]
        env = dict(st.env)
        t = self.t
        if isinstance(ins, INonCrit):
            yield noncrit(t), self.settle(st.pc + 1, env)
        elif isinstance(ins, ICrit):
            yield crit(t), self.settle(st.pc + 1, env)
        elif isinstance(ins, IRead):
            cfg = self.register(ins.base, ins.index, env)
            if not st.waiting:
                yield start_read(t, cfg.id), ControlState(st.pc, st.env, True)
            else:
                for d in cfg.domain:
                    yield finish_read(t, cfg.id, d), self.settle(st.pc + 1, {**env, ins.dest: d})
        elif isinstance(ins, IWrite):
            cfg = self.register(ins.base, ins.index, env)
            if not st.waiting:
                # an out-of-domain value yields a label no register accepts; whether
                # it is reachable is only known after composition
                v = evaluate(ins.value, env)
                yield start_write(t, cfg.id, v), ControlState(st.pc, st.env, True)
            else:
                yield finish_write(t, cfg.id), self.settle(st.pc + 1, env)


def compile_thread(program: ThreadProgram, registers: Mapping[str, RegisterConfig],
                   budget: Budget | None = None) -> Lts:
    """Thread LTS: noncrit, entry protocol, crit, exit protocol, repeated forever."""
    ex = _Explorer(program, registers)
    init = ex.settle(0, {})
    lts = explore(init, ex.successors, None, budget)
    alphabet = thread_alphabet(program.thread, registers) | set(lts.labels)
    return Lts(lts.states, lts.labels, zip(lts.src.tolist(), lts.act.tolist(), lts.dst.tolist()),
               alphabet)


def domain_overflows(lts: Lts, registers: Mapping[str, RegisterConfig]) -> list[ActionLabel]:
    """Writes of values outside the target register's domain that ``lts`` performs."""
    return sorted((a for a in lts.labels if a.kind is Kind.START_WRITE
                   and a.value not in registers[a.register].domain), key=str)


def validate_thread_lts(lts: Lts) -> list[str]:
    """Check the start/finish shape required of thread LTSs; return violations.

    After start_read(t,r) exactly the finish_read(t,r,d) for every d must be
    enabled, after start_write(t,r,d) exactly finish_write(t,r); finish actions
    may be enabled only in such states.
    """
    problems = []
    threads = {a.thread for a in lts.alphabet}
    if len(threads) > 1:
        problems.append(f"alphabet mixes threads {sorted(threads)}")
    reads: dict[str, set] = {}
    for a in lts.alphabet:
        if a.kind is Kind.FINISH_READ:
            reads.setdefault(a.register, set()).add(a)
    expected: dict[int, set] = {}
    for s, a, t in lts.transitions():
        if a.kind is Kind.START_READ:
            want = reads.get(a.register, set())
        elif a.kind is Kind.START_WRITE:
            want = {finish_write(a.thread, a.register)}
        else:
            continue
        if expected.setdefault(t, want) != want:
            problems.append(f"state {t}: reached by start actions of different operations")
    for s in range(lts.n_states):
        enabled = {lts.labels[a] for a, _ in lts.out(s)}
        if s in expected:
            if enabled != expected[s]:
                extra = sorted(map(str, enabled - expected[s]))
                missing = sorted(map(str, expected[s] - enabled))
                problems.append(f"state {s}: after a start action, extra={extra} missing={missing}")
        else:
            bad = sorted(str(a) for a in enabled if a.kind in (Kind.FINISH_READ, Kind.FINISH_WRITE))
            if bad:
                problems.append(f"state {s}: finish actions {bad} enabled without a pending start")
    return problems
