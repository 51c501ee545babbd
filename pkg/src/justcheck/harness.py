"""Run configurations, the verdict matrix and report rendering.

A verdict letter summarises the three properties for one cell:
``X`` mutual exclusion fails, ``M`` only mutual exclusion holds, ``D`` deadlock
freedom holds as well, ``S`` all three hold.  Checks short-circuit in that
order.  Cells whose budget runs out get ``?``.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable

from .checker import Property, check_liveness, check_mutual_exclusion, witness_is_valid
from .interference import Mode
from .lts import Budget, StateSpaceExceeded
from .model import build_model
from .registers import RegisterKind
from .threads import CATALOG, algorithm_catalog

log = logging.getLogger(__name__)

# (register kind, mode) per column of the verdict table
COLUMNS = (
    ("safe", "T"), ("regular", "T"),
    ("atomic", "T"), ("atomic", "S"), ("atomic", "I"), ("atomic", "A"),
)
COLUMN_NAMES = ("safe", "regular", "atomic-T", "atomic-S", "atomic-I", "atomic-A")
LETTERS = ("X", "M", "D", "S")
UNKNOWN = "?"
SUITES = ("two_thread", "three_thread", "full")

_BLOCKING_MODE = {RegisterKind.BLOCKING_S: Mode.S, RegisterKind.BLOCKING_I: Mode.I,
                  RegisterKind.BLOCKING_A: Mode.A}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    algorithm: str
    variant: str = "base"
    threads: int | None = None
    registers: str = "atomic"
    conc: str = "T"
    properties: tuple[str, ...] = ("mutex", "deadlock", "starvation")
    max_states: int | None = None
    max_transitions: int = 10**8
    timeout: float | None = None
    witness: bool = True
    seed: int = 0

    def __post_init__(self):
        kind = RegisterKind(self.registers)
        mode = Mode(self.conc)
        self.registers, self.conc = kind.value, mode.value
        self.properties = tuple(Property(p).value for p in self.properties)
        if kind in (RegisterKind.SAFE, RegisterKind.REGULAR) and mode is not Mode.T:
            raise ConfigError(f"{kind.value} registers are checked under mode T only")
        if kind.is_blocking and _BLOCKING_MODE[kind] is not mode:
            raise ConfigError(f"{kind.value} registers pair with mode {_BLOCKING_MODE[kind].value}")
        if (self.algorithm, self.variant) not in CATALOG:
            raise ConfigError(f"unknown algorithm {self.algorithm!r} variant {self.variant!r}")
        entry = CATALOG[(self.algorithm, self.variant)]
        if self.threads is None:
            self.threads = entry.table_threads or entry.threads[0]
        if self.threads not in entry.threads:
            raise ConfigError(f"{self.algorithm}/{self.variant} supports {entry.threads} threads")

    def budget(self) -> Budget:
        return Budget.with_timeout(self.timeout, max_transitions=self.max_transitions,
                                   max_states=self.max_states)


@dataclass
class Cell:
    algorithm: str
    variant: str
    threads: int
    registers: str
    conc: str
    verdict_letter: str
    properties: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    witness: dict | None = None
    error: str | None = None

    @property
    def key(self) -> tuple:
        return self.algorithm, self.variant, self.threads, self.registers, self.conc


@dataclass
class Report:
    suite: str
    cells: list[Cell] = field(default_factory=list)

    def cell(self, algorithm, variant, threads, registers, conc) -> Cell | None:
        key = (algorithm, variant, threads, registers, conc)
        return next((c for c in self.cells if c.key == key), None)

    def row(self, algorithm, variant, threads) -> list[str]:
        out = []
        for kind, mode in COLUMNS:
            c = self.cell(algorithm, variant, threads, kind, mode)
            out.append(c.verdict_letter if c else "-")
        return out


def letter(properties: dict) -> str:
    """Verdict letter from per-property outcomes (``None`` means not decided)."""
    if properties.get("mutex") is False:
        return "X"
    if properties.get("mutex") is None:
        return UNKNOWN
    if properties.get("deadlock") is False:
        return "M"
    if properties.get("deadlock") is None:
        return UNKNOWN
    if properties.get("starvation") is False:
        return "D"
    if properties.get("starvation") is None:
        return UNKNOWN
    return "S"


def _evaluate(model, cfg: RunConfig, mutex_verdict=None) -> Cell:
    """Run the requested checks on a built model with the short-circuit order."""
    started = time.perf_counter()
    props: dict = {"mutex": None, "deadlock": None, "starvation": None}
    cell = Cell(cfg.algorithm, cfg.variant, cfg.threads, cfg.registers, cfg.conc, UNKNOWN, props,
                {"states": model.lts.n_states, "transitions": model.lts.n_transitions})
    budget = cfg.budget()
    wanted = set(cfg.properties)
    short = wanted == {"mutex", "deadlock", "starvation"}
    try:
        if "mutex" in wanted:
            v = mutex_verdict or check_mutual_exclusion(model)
            props["mutex"] = v.holds
            if not v.holds and cfg.witness:
                cell.witness = {"property": "mutex", **v.witness.to_json(model.lts)}
        for name in ("deadlock", "starvation"):
            if name not in wanted or (short and False in props.values()):
                continue
            v = check_liveness(model, name, cfg.conc, witness=cfg.witness, budget=budget)
            props[name] = v.holds
            cell.stats[f"{name}_rounds"] = v.stats.get("fixpoint_rounds", 0)
            if not v.holds and cfg.witness:
                cell.stats[f"{name}_witness_valid"] = witness_is_valid(model, v, cfg.conc)
                if cell.witness is None:
                    cell.witness = {"property": name, **v.witness.to_json(model.lts)}
    except StateSpaceExceeded as exc:
        cell.error = str(exc)
    cell.verdict_letter = letter(props)
    cell.stats["seconds"] = round(time.perf_counter() - started, 3)
    return cell


def run_cell(cfg: RunConfig) -> Cell:
    """Build the model and evaluate one cell; budget overruns give ``?``."""
    started = time.perf_counter()
    try:
        model = build_model(algorithm_catalog(cfg.algorithm, cfg.variant, cfg.threads),
                            cfg.registers, cfg.budget())
    except StateSpaceExceeded as exc:
        return Cell(cfg.algorithm, cfg.variant, cfg.threads, cfg.registers, cfg.conc, UNKNOWN,
                    {"mutex": None, "deadlock": None, "starvation": None}, {}, None, str(exc))
    build_s = time.perf_counter() - started
    cell = _evaluate(model, cfg)
    cell.stats["build_seconds"] = round(build_s, 3)
    return cell


def _run_kind(algorithm: str, variant: str, threads: int, kind: str, modes: tuple[str, ...],
              timeout: float | None, max_transitions: int, witness: bool) -> list[Cell]:
    """All cells of one row sharing a register kind, so the model is built once."""
    cfgs = [RunConfig(algorithm, variant, threads, kind, m, timeout=timeout,
                      max_transitions=max_transitions, witness=witness) for m in modes]
    started = time.perf_counter()
    try:
        model = build_model(algorithm_catalog(algorithm, variant, threads), kind, cfgs[0].budget())
    except StateSpaceExceeded as exc:
        return [Cell(c.algorithm, c.variant, c.threads, c.registers, c.conc, UNKNOWN,
                     {"mutex": None, "deadlock": None, "starvation": None}, {}, None, str(exc))
                for c in cfgs]
    build_s = round(time.perf_counter() - started, 3)
    mutex = check_mutual_exclusion(model)
    cells = []
    for cfg in cfgs:
        cell = _evaluate(model, cfg, mutex)
        cell.stats["build_seconds"] = build_s
        cells.append(cell)
    log.info("%s/%s N=%d %s: %s", algorithm, variant, threads, kind,
             " ".join(c.verdict_letter for c in cells))
    return cells


def suite_rows(suite: str) -> list[tuple[str, str, int]]:
    """(algorithm, variant, threads) rows of a suite, in catalog order."""
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}")
    want = {"two_thread": (2,), "three_thread": (3,), "full": (2, 3)}[suite]
    return [(name, variant, e.table_threads) for (name, variant), e in CATALOG.items()
            if e.table_threads in want]


def run_matrix(suite: str | Iterable[tuple[str, str, int]], jobs: int = 1,
               timeout: float | None = None, max_transitions: int = 10**8,
               witness: bool = True) -> Report:
    """Evaluate every column of every row; per-cell failures are recorded, not raised."""
    if isinstance(suite, str):
        name, rows = suite, suite_rows(suite)
    else:
        name, rows = "custom", list(suite)
    tasks = []
    for algorithm, variant, threads in rows:
        for kind in ("safe", "regular", "atomic"):
            modes = tuple(m for k, m in COLUMNS if k == kind)
            tasks.append((algorithm, variant, threads, kind, modes, timeout, max_transitions,
                          witness))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_safe_run_kind, tasks))
    else:
        results = [_safe_run_kind(t) for t in tasks]
    cells = [c for group in results for c in group]
    return Report(name, cells)


def _safe_run_kind(task) -> list[Cell]:
    try:
        return _run_kind(*task)
    except Exception as exc:  # recorded per cell; the matrix run continues
        log.exception("cell group %s failed", task[:4])
        algorithm, variant, threads, kind, modes = task[:5]
        return [Cell(algorithm, variant, threads, kind, m, UNKNOWN,
                     {"mutex": None, "deadlock": None, "starvation": None}, {}, None,
                     f"{type(exc).__name__}: {exc}") for m in modes]


# rendering

def render_report(report: Report, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps({"suite": report.suite, "cells": [asdict(c) for c in report.cells]},
                          indent=2, sort_keys=True, default=str)
    if fmt != "text":
        raise ConfigError(f"unknown format {fmt!r}")
    rows = []
    for c in report.cells:
        key = (c.algorithm, c.variant, c.threads)
        if key not in rows:
            rows.append(key)
    width = max([len(_title(*k)) for k in rows] + [len("algorithm")])
    lines = [f"suite: {report.suite}",
             f"{'algorithm':<{width}}  N  " + " ".join(COLUMN_NAMES)]
    for key in rows:
        lines.append(f"{_title(*key):<{width}}  {key[2]}  {' '.join(report.row(*key))}")
    return "\n".join(lines) + "\n"


def _title(algorithm: str, variant: str, threads: int) -> str:
    entry = CATALOG.get((algorithm, variant))
    return entry.title if entry else f"{algorithm}/{variant}"


def parse_report(text: str) -> Report:
    """Inverse of the JSON rendering."""
    doc = json.loads(text)
    return Report(doc["suite"], [Cell(**c) for c in doc["cells"]])
