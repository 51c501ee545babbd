"""Thread-register models: thread LTSs composed with one LTS per register."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .lts import ActionLabel, Budget, Kind, Lts, compose_parallel
from .registers import RegisterKind, any_register_lts
from .threads import AlgorithmSpec, compile_thread, validate_thread_lts
from .threads.compiler import domain_overflows

log = logging.getLogger(__name__)


class DomainOverflow(ValueError):
    """A reachable write stores a value outside its register's domain."""


@dataclass
class Model:
    """A composed model plus the bookkeeping needed to look inside product states.

    ``lts.states[s]`` is a tuple of component state ids; component ``k`` is
    ``components[k]``.  Threads come first, in thread-id order.
    """

    lts: Lts
    components: list[Lts]
    threads: int
    thread_component: dict[int, int]
    register_component: dict[str, int] = field(default_factory=dict)
    name: str = ""

    def component_state(self, s: int, k: int) -> int:
        return self.lts.states[s][k]

    def thread_state(self, s: int, t: int) -> int:
        return self.lts.states[s][self.thread_component[t]]

    def labels_of(self, kind: Kind) -> list[ActionLabel]:
        return [a for a in self.lts.labels if a.kind is kind]


def compose_model(thread_ltss: Sequence[Lts], register_ltss: dict[str, Lts] | None = None,
                  budget: Budget | None = None, name: str = "") -> Model:
    register_ltss = register_ltss or {}
    components = list(thread_ltss) + list(register_ltss.values())
    lts = compose_parallel(components, budget)
    n = len(thread_ltss)
    return Model(lts, components, n, {t: t for t in range(n)},
                 {r: n + k for k, r in enumerate(register_ltss)}, name)


def build_model(spec: AlgorithmSpec, kind: RegisterKind | str, budget: Budget | None = None,
                validate: bool = True) -> Model:
    """Compile every thread, build the registers with ``kind`` and compose."""
    kind = RegisterKind(kind)
    budget = budget or Budget()
    registers = {r: cfg.with_kind(kind) for r, cfg in spec.registers.items()}
    threads = []
    for p in spec.programs:
        t_lts = compile_thread(p, registers, budget)
        if validate:
            problems = validate_thread_lts(t_lts)
            if problems:
                raise ValueError(f"thread {p.thread} LTS malformed: {problems[:3]}")
        threads.append(t_lts)
    regs = {r: any_register_lts(cfg, spec.threads, budget) for r, cfg in registers.items()}
    model = compose_model(threads, regs, budget, f"{spec.name}/{spec.variant}/{kind.value}")
    used = set(model.lts.act.tolist())
    overflow = [a for a in domain_overflows(model.lts, registers)
                if model.lts.label_index[a] in used]
    if overflow:
        raise DomainOverflow(f"{model.name}: reachable writes outside register domains: "
                             f"{', '.join(map(str, overflow[:5]))}")
    log.info("%s: %d states, %d transitions", model.name, model.lts.n_states,
             model.lts.n_transitions)
    return model
