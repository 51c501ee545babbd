"""Shared test utilities: random tiny thread-register models and lassos."""

from __future__ import annotations

import random

from justcheck.lts import Lasso
from justcheck.model import Model, compose_model
from justcheck.registers import RegisterConfig, register_lts
from justcheck.threads.compiler import compile_thread
from justcheck.threads.ir import Await, Crit, If, Reg, ThreadProgram, While, Write, eq

REG = "r"


def _simple(rng: random.Random) -> list:
    c = rng.choice([False, True])
    kind = rng.randrange(5)
    if kind == 0:
        return [Write(REG, None, c)]
    if kind == 1:
        return [Await(eq(Reg(REG), c))]
    if kind == 2:
        return [If(eq(Reg(REG), c), [Write(REG, None, not c)], [])]
    if kind == 3:
        return [While(eq(Reg(REG), c), [Write(REG, None, rng.choice([False, True]))])]
    return [If(eq(Reg(REG), c), [Await(eq(Reg(REG), not c))], [Write(REG, None, c)])]


def random_program(rng: random.Random, thread: int) -> ThreadProgram:
    before = [s for _ in range(rng.randint(0, 2)) for s in _simple(rng)]
    after = [s for _ in range(rng.randint(0, 2)) for s in _simple(rng)]
    return ThreadProgram(thread, before + [Crit()] + after, f"random#{thread}")


def random_model(rng: random.Random, max_states: int = 200, kind: str | None = None) -> Model:
    """Two random threads sharing one binary register; resampled until small enough."""
    while True:
        k = kind or rng.choice(["safe", "regular", "atomic"])
        cfg = RegisterConfig(REG, (False, True), rng.choice([False, True]), k)
        threads = [compile_thread(random_program(rng, t), {REG: cfg}) for t in range(2)]
        model = compose_model(threads, {REG: register_lts(cfg, 2)}, name=f"random/{k}")
        if model.lts.n_states <= max_states:
            return model


def random_lasso(rng: random.Random, model: Model, max_prefix: int = 12) -> Lasso:
    """A random walk from the initial state closed at its first repeated state.

    Walks that hit a state without successors become finite lassos.  A walk
    longer than the state count must repeat, so the loop always returns.
    """
    lts = model.lts
    states, actions = [lts.initial], []
    for _ in range(rng.randint(0, max_prefix)):
        out = lts.out(states[-1])
        if not out:
            break
        a, t = rng.choice(out)
        states.append(t)
        actions.append(a)
    seen = {states[-1]: len(states) - 1}
    while True:
        out = lts.out(states[-1])
        if not out:
            return Lasso(states, actions, [states[-1]], [])
        a, t = rng.choice(out)
        states.append(t)
        actions.append(a)
        if t in seen:
            k = seen[t]
            return Lasso(states[:k + 1], actions[:k], states[k:], actions[k:])
        seen[t] = len(states) - 1


# published verdict letters, columns as in harness.COLUMN_NAMES
REFERENCE_TWO_THREAD = {
    ("anderson", "base"): "S S S S M M",
    ("attiya_welch", "orig"): "D S S D M M",
    ("attiya_welch", "orig_alt"): "S S S D M M",
    ("attiya_welch", "var"): "M M S D M M",
    ("attiya_welch", "var_alt"): "S S S D M M",
    ("dekker", "base"): "M M S D M M",
    ("dekker", "alt"): "M M S S M M",
    ("dekker", "rw_safe"): "S S S D M M",
    ("dftosf", "dekker_rw_safe"): "S S S S M M",
    ("kessels", "base"): "X X S S M M",
    ("peterson", "base"): "X X S S M M",
    ("szymanski_3bit", "alt"): "S S S S M M",
}

# (algorithm, variant, registers, conc) -> letter, three threads
REFERENCE_THREE_THREAD = {
    ("dijkstra", "base", "safe", "T"): "M",
    ("dijkstra", "base", "regular", "T"): "D",
    ("dijkstra", "base", "atomic", "T"): "D",
    ("dijkstra", "base", "atomic", "S"): "M",
    ("aravind_blru", "base", "atomic", "S"): "M",
    ("aravind_blru", "alt", "atomic", "S"): "S",
    ("lamport_1bit", "base", "atomic", "T"): "D",
    ("dftosf", "lamport1bit", "atomic", "T"): "S",
    ("szymanski_flag", "bit", "atomic", "T"): "X",
}

RANK = {"X": 0, "M": 1, "D": 2, "S": 3}
