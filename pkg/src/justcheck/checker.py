"""Mutual exclusion, deadlock freedom and starvation freedom under justness.

Liveness is decided with a greatest fixpoint.  For a response set ``R`` the
core set ``X`` is the largest set of states such that every non-blockable
action ``a`` enabled at a state of ``X`` can be followed, along an ``R``-free
path, by a transition labelled with an interferer of ``a`` (not in ``R``) that
lands in ``X`` again.  From every state of ``X`` there is a just path that never
performs a response, and vice versa.

The fixpoint is computed by pruning.  Actions are grouped by their
:class:`~justcheck.interference.InterfererClass`, so one backward sweep over
``R``-free edges serves all actions of a class.
"""

from __future__ import annotations

import enum
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .interference import InterfererClass, Mode, interferer_class, is_blockable
from .lts import ActionLabel, Budget, Kind, Lasso, Lts, crit, enabled_in, noncrit, shortest_path

log = logging.getLogger(__name__)


class Property(str, enum.Enum):
    MUTEX = "mutex"
    DEADLOCK = "deadlock"
    STARVATION = "starvation"


@dataclass
class Path:
    """Finite path from the initial state (safety witness)."""

    states: list[int]
    actions: list[int]

    def replays(self, lts: Lts) -> bool:
        return self.states[0] == lts.initial and all(
            (a, self.states[k + 1]) in lts.out(self.states[k]) for k, a in enumerate(self.actions))

    def render(self, lts: Lts) -> str:
        return "".join(f"{k}: {lts.labels[a]}\n" for k, a in enumerate(self.actions))

    def to_json(self, lts: Lts) -> dict:
        return {"path": [str(lts.labels[a]) for a in self.actions]}


@dataclass
class Verdict:
    property: Property
    holds: bool
    witness: Path | Lasso | None = None
    stats: dict = field(default_factory=dict)
    thread: int | None = None


def _lts(model) -> Lts:
    return model.lts if hasattr(model, "lts") else model


def _blockable_mask(labels: list[ActionLabel], blockables) -> np.ndarray:
    if blockables is None:
        return np.array([is_blockable(a) for a in labels], dtype=bool)
    blockables = set(blockables)
    return np.array([a in blockables for a in labels], dtype=bool)


# mutual exclusion

def mutex_violations(model) -> np.ndarray:
    """Boolean mask of states enabling two critical sections of different threads."""
    lts = _lts(model)
    crit_ids = [k for k, a in enumerate(lts.labels) if a.kind is Kind.CRIT]
    count = np.zeros(lts.n_states, dtype=np.int64)
    for k in crit_ids:
        has = np.zeros(lts.n_states, dtype=bool)
        has[lts.src[lts.act == k]] = True
        count += has
    return count >= 2


def check_mutual_exclusion(model) -> Verdict:
    started = time.perf_counter()
    lts = _lts(model)
    bad = mutex_violations(lts)
    stats = {"states": lts.n_states, "transitions": lts.n_transitions}
    if not bad.any():
        stats["seconds"] = time.perf_counter() - started
        return Verdict(Property.MUTEX, True, stats=stats)
    states, actions = shortest_path(lts, bad)
    stats["seconds"] = time.perf_counter() - started
    return Verdict(Property.MUTEX, False, Path(states, actions), stats)


# backward reachability

class _Sweeper:
    """Backward reachability over a fixed subset of edges."""

    def __init__(self, lts: Lts, edge_mask: np.ndarray):
        n = lts.n_states
        src, dst = lts.src[edge_mask], lts.dst[edge_mask]
        order = np.argsort(dst, kind="stable")
        self.cols = src[order].astype(np.int32)
        self.indptr = np.zeros(n + 2, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=n), out=self.indptr[1:n + 1])
        self.n = n

    def reach(self, seeds: np.ndarray) -> np.ndarray:
        """States with a path (over the sweeper's edges) into ``seeds``."""
        out = np.zeros(self.n, dtype=bool)
        seed_ids = np.flatnonzero(seeds).astype(np.int32)
        if not len(seed_ids):
            return out
        indptr = self.indptr.copy()
        indptr[-1] = indptr[-2] + len(seed_ids)
        indices = np.concatenate((self.cols, seed_ids))
        g = csr_matrix((np.ones(len(indices), dtype=np.int8), indices, indptr),
                       shape=(self.n + 1, self.n + 1))
        order = breadth_first_order(g, self.n, directed=True, return_predecessors=False)
        order = order[order < self.n]
        out[order] = True
        return out


@dataclass
class _Classes:
    classes: list[InterfererClass]
    of_label: np.ndarray  # class index per label id, -1 for blockable labels
    enabled: np.ndarray  # states x classes

    @classmethod
    def build(cls, lts: Lts, mode: Mode, blockable: np.ndarray) -> "_Classes":
        descr = {}
        of_label = np.full(len(lts.labels), -1, dtype=np.int64)
        for k, a in enumerate(lts.labels):
            if not blockable[k]:
                c = interferer_class(mode, a)
                of_label[k] = descr.setdefault(c, len(descr))
        classes = sorted(descr, key=descr.get)
        enabled = np.zeros((lts.n_states, len(classes)), dtype=bool)
        nb = of_label[lts.act] >= 0
        enabled[lts.src[nb], of_label[lts.act[nb]]] = True
        return cls(classes, of_label, enabled)


def nu_core(model, response: Iterable[ActionLabel], mode: Mode | str, blockables=None,
            budget: Budget | None = None, stats: dict | None = None,
            within: np.ndarray | None = None) -> np.ndarray:
    """Greatest set of states from which a just, response-free path exists.

    ``within`` bounds the set from above; pruning starts from it instead of
    from all states.
    """
    lts = _lts(model)
    mode = Mode(mode)
    response = set(response)
    resp = np.array([a in response for a in lts.labels], dtype=bool)
    blockable = _blockable_mask(lts.labels, blockables)
    cls = _Classes.build(lts, mode, blockable)
    qualifying = [np.array([c.matches(a) and not resp[k] for k, a in enumerate(lts.labels)],
                           dtype=bool) for c in cls.classes]
    sweeper = _Sweeper(lts, ~resp[lts.act])
    x = np.ones(lts.n_states, dtype=bool) if within is None else within.astype(bool)
    rounds = 0
    while True:
        rounds += 1
        changed = False
        for c in range(len(cls.classes)):
            needy = cls.enabled[:, c] & x
            if not needy.any():
                continue
            q = qualifying[c][lts.act] & x[lts.dst]
            seeds = np.zeros(lts.n_states, dtype=bool)
            seeds[lts.src[q]] = True
            bad = needy & ~sweeper.reach(seeds)
            if bad.any():
                x &= ~bad
                changed = True
        log.debug("nu_core round %d: %d states left", rounds, int(x.sum()))
        if budget is not None:
            budget.check()
        if not changed:
            break
    if stats is not None:
        stats["fixpoint_rounds"] = stats.get("fixpoint_rounds", 0) + rounds
    return x


# witnesses

def _forward_path(lts: Lts, start: int, edge_ok, goal) -> tuple[list[int], list[int]] | None:
    """BFS from ``start`` over edges with ``edge_ok(label_id)``.

    ``goal(label_id, target)`` marks the final edge; it need not satisfy
    ``edge_ok``.  Returns states and actions including the final edge.
    """
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for a, t in lts.out(s):
            if goal(a, t):
                states, actions = [t, s], [a]
                while parent[s] is not None:
                    p, b = parent[s]
                    states.append(p)
                    actions.append(b)
                    s = p
                return states[::-1], actions[::-1]
            if edge_ok(a) and t not in parent:
                parent[t] = (s, a)
                queue.append(t)
    return None


def extract_lasso_witness(model, x: np.ndarray, entry: int, mode: Mode | str, blockables=None,
                          response: Iterable[ActionLabel] = (),
                          prefix: tuple[list[int], list[int]] | None = None) -> Lasso:
    """Just response-free lasso from ``entry`` through ``x``.

    Enabled action classes are discharged round-robin; each discharge is a
    shortest response-free path ending with an interfering transition back
    into ``x``.  The walk is closed into a cycle as soon as a pair
    (state, round-robin pointer) repeats.  ``prefix`` is the path from the
    initial state to ``entry``; a shortest one is used when omitted.
    """
    lts = _lts(model)
    mode = Mode(mode)
    if not x[entry]:
        raise ValueError("entry state is not in the core set")
    response = set(response)
    resp = [a in response for a in lts.labels]
    blockable = _blockable_mask(lts.labels, blockables)
    cls = _Classes.build(lts, mode, blockable)
    order = sorted(range(len(cls.classes)), key=lambda c: cls.classes[c].sort_key())
    rank = {c: k for k, c in enumerate(order)}
    matches = [[c.matches(a) and not resp[k] for k, a in enumerate(lts.labels)]
               for c in cls.classes]

    if prefix is None:
        found = shortest_path(lts, [entry])
        if found is None:
            raise ValueError("entry state unreachable")
        prefix = found
    states, actions = list(prefix[0]), list(prefix[1])
    if states[-1] != entry:
        raise ValueError("prefix does not end at the entry state")
    walk_start = len(actions)
    seen: dict[tuple[int, int], int] = {}
    cur, ptr = entry, 0
    while (cur, ptr) not in seen:
        seen[(cur, ptr)] = len(actions)
        enabled = [c for c in order if cls.enabled[cur, c]]
        if not enabled:
            # only blockable actions remain: a finite maximal path
            return Lasso(states, actions, [cur], [], {"core_start": walk_start})
        c = min(enabled, key=lambda c: (rank[c] - ptr) % len(order))
        seg = _forward_path(lts, cur, lambda a: not resp[a],
                            lambda a, t, m=matches[c]: m[a] and x[t])
        if seg is None:
            raise RuntimeError(f"no discharge for class {cls.classes[c]} at state {cur}")
        states += seg[0][1:]
        actions += seg[1]
        cur, ptr = states[-1], (rank[c] + 1) % len(order)
    k = seen[(cur, ptr)]
    return Lasso(states[:k + 1], actions[:k], states[k:], actions[k:], {"core_start": walk_start})


# liveness

def _edge_mask(lts: Lts, label: ActionLabel) -> np.ndarray:
    k = lts.label_index.get(label)
    if k is None:
        return np.zeros(lts.n_transitions, dtype=bool)
    return lts.act == k


def _pick_trigger(lts: Lts, edges: np.ndarray) -> tuple[list[int], list[int], int]:
    """Shortest path to the source of one of ``edges``, plus that edge's index."""
    sources = np.zeros(lts.n_states, dtype=bool)
    sources[lts.src[edges]] = True
    states, actions = shortest_path(lts, sources)
    s0 = states[-1]
    idx = np.flatnonzero(edges & (lts.src == s0))[0]
    return states, actions, int(idx)


def check_liveness(model, prop: Property | str, mode: Mode | str, blockables=None,
                   witness: bool = True, budget: Budget | None = None) -> Verdict:
    """Deadlock or starvation freedom over just paths under ``mode``."""
    prop = Property(prop)
    mode = Mode(mode)
    if prop is Property.MUTEX:
        return check_mutual_exclusion(model)
    started = time.perf_counter()
    lts = _lts(model)
    threads = sorted({a.thread for a in lts.labels if a.kind is Kind.NONCRIT})
    stats = {"states": lts.n_states, "transitions": lts.n_transitions}
    all_crit = {a for a in lts.labels if a.kind is Kind.CRIT}
    x_all = nu_core(lts, all_crit, mode, blockables, budget, stats) if prop is Property.DEADLOCK else None

    for t in threads:
        trig = _edge_mask(lts, noncrit(t))
        not_crit_t = ~_edge_mask(lts, crit(t))
        if prop is Property.DEADLOCK:
            response = all_crit
            core = x_all
            can_reach = _Sweeper(lts, not_crit_t).reach(core)
        else:
            response = {crit(t)}
            core = nu_core(lts, response, mode, blockables, budget, stats)
            can_reach = core
        hits = trig & can_reach[lts.dst]
        if not hits.any():
            continue
        verdict = Verdict(prop, False, None, stats, t)
        if witness:
            states, actions, e = _pick_trigger(lts, hits)
            s1 = int(lts.dst[e])
            states.append(s1)
            actions.append(int(lts.act[e]))
            trigger_at = len(actions) - 1
            if not core[s1]:
                crit_t = lts.label_index.get(crit(t), -1)
                seg = _forward_path(lts, s1, lambda a: a != crit_t,
                                    lambda a, dst: a != crit_t and core[dst])
                states += seg[0][1:]
                actions += seg[1]
            lasso = extract_lasso_witness(lts, core, states[-1], mode, blockables, response,
                                          (states, actions))
            lasso.meta.update({"thread": t, "trigger": trigger_at,
                               "response": sorted(map(str, response))})
            verdict.witness = lasso
        stats["seconds"] = time.perf_counter() - started
        return verdict
    stats["seconds"] = time.perf_counter() - started
    return Verdict(prop, True, None, stats)


def witness_is_valid(model, verdict: Verdict, mode: Mode | str, blockables=None) -> bool:
    """Replay, justness and response-freedom of a liveness witness."""
    lts = _lts(model)
    lasso = verdict.witness
    if not isinstance(lasso, Lasso) or not lasso.replays(lts):
        return False
    if not is_just_lasso(model, lasso, mode, blockables):
        return False
    t = lasso.meta["thread"]
    labels = [lts.labels[a] for a in lasso.prefix_actions + lasso.cycle_actions]
    trigger = lasso.meta["trigger"]
    if labels[trigger] != noncrit(t):
        return False
    after = labels[trigger + 1:]
    if crit(t) in after:
        return False
    if verdict.property is Property.DEADLOCK:
        core = labels[lasso.meta["core_start"]:]
        return not any(a.kind is Kind.CRIT for a in core)
    return True


# justness of lassos via thread-enabledness

def is_just_lasso(model, lasso: Lasso, mode: Mode | str, blockables=None) -> bool:
    """Decide justness of ``prefix . cycle^omega`` from per-thread local states.

    A thread that acts on the cycle acts infinitely often and enables nothing
    persistently.  A thread silent on the cycle sits in one local state; the
    non-blockable actions its own LTS enables there are its thread-enabled
    actions.  Under T any such action makes the path unjust.  Under the other
    modes a thread-enabled start action on register ``r`` is excused when the
    cycle contains actions that keep postponing it: a start_write on ``r``
    (all modes), any start on ``r`` for a pending start_write (I and A), or any
    start on ``r`` for a pending start_read (A).
    """
    lts = model.lts
    mode = Mode(mode)
    if not lasso.replays(lts):
        raise ValueError("lasso does not replay in the model")
    blocked = set(blockables) if blockables is not None else None
    cycle = {lts.labels[a] for a in lasso.cycle_actions}
    busy = {a.thread for a in cycle}
    starts: dict[str, set[Kind]] = {}
    for a in cycle:
        if a.is_start:
            starts.setdefault(a.register, set()).add(a.kind)
    end = lasso.cycle_states[0]
    for t in range(model.threads):
        if t in busy:
            continue
        comp = model.components[model.thread_component[t]]
        for a in enabled_in(comp, model.thread_state(end, t)):
            if (a in blocked) if blocked is not None else is_blockable(a):
                continue
            if mode is Mode.T or not a.is_start:
                return False
            seen = starts.get(a.register, set())
            if mode is Mode.S:
                ok = Kind.START_WRITE in seen
            elif mode is Mode.I:
                ok = bool(seen) if a.kind is Kind.START_WRITE else Kind.START_WRITE in seen
            else:
                ok = bool(seen)
            if not ok:
                return False
    return True
