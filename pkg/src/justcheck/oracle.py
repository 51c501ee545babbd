"""Independent reference procedures used to cross-check the checker.

Nothing here shares code with the fixpoint engine.  Justness is decided from
its definition on paths: every non-blockable action enabled at some position
must be followed, later on the path, by an action that interferes with it.

``brute_force_liveness`` tracks the undischarged obligations explicitly.  A
node of the search graph is a model state plus the set of actions enabled
earlier and not yet interfered with.  A just infinite path is a lasso whose
cycle discharges every obligation it carries; finding one is a Streett
emptiness check, done by recursive SCC decomposition.
"""

from __future__ import annotations

import logging
from collections import deque

import networkx as nx

from .checker import Property, Verdict
from .interference import Mode, interferes, is_blockable
from .lts import ActionLabel, Kind, Lasso, Lts, crit, noncrit

log = logging.getLogger(__name__)


class ModelTooLarge(ValueError):
    pass


def _lts(model) -> Lts:
    return model.lts if hasattr(model, "lts") else model


def _blocked(blockables):
    if blockables is None:
        return is_blockable
    blockables = frozenset(blockables)
    return lambda a: a in blockables


def is_just_lasso_direct(model, lasso: Lasso, mode: Mode | str, blockables=None) -> bool:
    """Justness of ``prefix . cycle^omega`` straight from the definition.

    Every suffix is checked: suffixes starting in the prefix see the rest of
    the prefix plus the whole cycle, suffixes starting on the cycle see the
    whole cycle.  A finite path (empty cycle) leaves nothing to discharge
    obligations raised at its last state.
    """
    lts = _lts(model)
    mode = Mode(mode)
    if not lasso.replays(lts):
        raise ValueError("lasso does not replay in the model")
    blocked = _blocked(blockables)
    labels = lts.labels
    cycle = [labels[a] for a in lasso.cycle_actions]
    prefix = [labels[a] for a in lasso.prefix_actions]
    positions = [(s, prefix[k:] + cycle) for k, s in enumerate(lasso.prefix_states)]
    positions += [(s, cycle) for s in lasso.cycle_states[:-1]]
    for s, later in positions:
        for a_id, _ in lts.out(s):
            a = labels[a_id]
            if blocked(a):
                continue
            if not any(interferes(mode, a, b) for b in later):
                return False
    return True


class _Search:
    """Obligation-tracking graph restricted to edges whose labels avoid ``response``."""

    def __init__(self, lts: Lts, response: set[ActionLabel], mode: Mode, blocked):
        self.lts = lts
        self.labels = lts.labels
        self.mode = mode
        self.allowed = [a not in response for a in lts.labels]
        self.duties = [frozenset(a for a, _ in lts.out(s) if not blocked(lts.labels[a]))
                       for s in range(lts.n_states)]
        self._cover = {}

    def covers(self, b: int, a: int) -> bool:
        key = (a, b)
        if key not in self._cover:
            self._cover[key] = interferes(self.mode, self.labels[a], self.labels[b])
        return self._cover[key]

    def step(self, node, b: int, t: int):
        s, pending = node
        carry = frozenset(a for a in pending | self.duties[s] if not self.covers(b, a))
        return t, carry

    def graph(self, sources) -> nx.DiGraph:
        g = nx.DiGraph()
        queue = deque()
        for s in sources:
            node = (s, frozenset())
            if node not in g:
                g.add_node(node)
                queue.append(node)
        while queue:
            node = queue.popleft()
            for b, t in self.lts.out(node[0]):
                if not self.allowed[b]:
                    continue
                nxt = self.step(node, b, t)
                if nxt not in g:
                    g.add_node(nxt)
                    queue.append(nxt)
                g.add_edge(node, nxt)
                g.edges[node, nxt].setdefault("labels", set()).add(b)
        return g

    def accepting(self, g: nx.DiGraph) -> tuple[set, list]:
        """Nodes ending a just finite path, and node sets of just cycles."""
        finals = {n for n in g if not n[1] and not self.duties[n[0]]}
        cores = []
        work = [set(c) for c in nx.strongly_connected_components(g)]
        while work:
            comp = work.pop()
            sub = g.subgraph(comp)
            if sub.number_of_edges() == 0:
                continue
            present = set()
            for _, _, data in sub.edges(data=True):
                present |= data["labels"]
            bad = {n for n in comp
                   if any(not any(self.covers(b, a) for b in present)
                          for a in n[1] | self.duties[n[0]])}
            if not bad:
                cores.append(comp)
                continue
            rest = comp - bad
            work += [set(c) for c in nx.strongly_connected_components(g.subgraph(rest))]
        return finals, cores


def just_avoiding(model, response, mode: Mode | str, blockables=None) -> set[int]:
    """States from which some just path never performs an action of ``response``."""
    lts = _lts(model)
    search = _Search(lts, set(response), Mode(mode), _blocked(blockables))
    g = search.graph(range(lts.n_states))
    finals, cores = search.accepting(g)
    good = set(finals).union(*cores) if cores else set(finals)
    back = nx.reverse_view(g)
    reach = set()
    for n in good:
        if n not in reach:
            reach |= nx.descendants(back, n) | {n}
    return {n[0] for n in reach if not n[1]}


def _bfs(lts: Lts, sources, edge_ok, targets):
    """Shortest path from any of ``sources`` to ``targets`` as (states, actions)."""
    parent = {s: None for s in sources}
    queue = deque(sources)
    while queue:
        s = queue.popleft()
        if s in targets:
            states, actions = [s], []
            while parent[s] is not None:
                s, a = parent[s]
                states.append(s)
                actions.append(a)
            return states[::-1], actions[::-1]
        for a, t in lts.out(s):
            if edge_ok(a) and t not in parent:
                parent[t] = (s, a)
                queue.append(t)
    return None


def _just_lasso_from(lts, search: _Search, start: int, stem) -> Lasso | None:
    """A just response-free continuation from ``start``, appended to ``stem``."""
    g = search.graph([start])
    finals, cores = search.accepting(g)
    root = (start, frozenset())
    goal = set(finals).union(*cores) if cores else set(finals)
    if not goal:
        return None
    path = nx.shortest_path(g, root)
    end = min((n for n in goal if n in path), key=lambda n: len(path[n]), default=None)
    if end is None:
        return None
    states, actions = list(stem[0]), list(stem[1])
    for u, v in zip(path[end], path[end][1:]):
        actions.append(min(g.edges[u, v]["labels"]))
        states.append(v[0])
    if end in finals and not any(end in c for c in cores):
        return Lasso(states, actions, [end[0]], [])
    comp = next(c for c in cores if end in c)
    sub = g.subgraph(comp)
    # walk every edge of the component once so every label in it recurs
    cyc_states, cyc_actions, cur = [end[0]], [], end
    for u, v, data in sub.edges(data=True):
        for b in sorted(data["labels"]):
            hop = nx.shortest_path(sub, cur, u)
            for x, y in zip(hop, hop[1:]):
                cyc_actions.append(min(sub.edges[x, y]["labels"]))
                cyc_states.append(y[0])
            cyc_actions.append(b)
            cyc_states.append(v[0])
            cur = v
    hop = nx.shortest_path(sub, cur, end)
    for x, y in zip(hop, hop[1:]):
        cyc_actions.append(min(sub.edges[x, y]["labels"]))
        cyc_states.append(y[0])
    return Lasso(states, actions, cyc_states, cyc_actions)


def brute_force_liveness(model, prop: Property | str, mode: Mode | str, blockables=None,
                         bound: int = 2000) -> Verdict:
    """Reference verdict for deadlock or starvation freedom on a small model.

    Deadlock freedom fails when some ``noncrit(t)`` is followed by a
    ``crit(t)``-free path into a state with a just path free of every crit.
    Starvation freedom fails when some ``noncrit(t)`` leads into a state with
    a just path free of ``crit(t)``.  The witness lasso is checked with
    :func:`is_just_lasso_direct` before it is returned.
    """
    prop = Property(prop)
    mode = Mode(mode)
    lts = _lts(model)
    if lts.n_states > bound:
        raise ModelTooLarge(f"{lts.n_states} states exceeds the oracle bound {bound}")
    if prop is Property.MUTEX:
        raise ValueError("the oracle decides liveness properties only")
    blocked = _blocked(blockables)
    threads = sorted({a.thread for a in lts.labels if a.kind is Kind.NONCRIT})
    all_crit = {a for a in lts.labels if a.kind is Kind.CRIT}
    reachable = set(nx.descendants(_plain_graph(lts), lts.initial)) | {lts.initial}
    for t in threads:
        response = all_crit if prop is Property.DEADLOCK else {crit(t)}
        core = just_avoiding(lts, response, mode, blockables)
        crit_t = lts.label_index.get(crit(t))
        nc = lts.label_index.get(noncrit(t))
        for s0 in sorted(reachable):
            for a, s1 in lts.out(s0):
                if a != nc:
                    continue
                if prop is Property.DEADLOCK:
                    mid = _bfs(lts, [s1], lambda b: b != crit_t, core)
                else:
                    mid = ([s1], []) if s1 in core else None
                if mid is None:
                    continue
                head = _bfs(lts, [lts.initial], lambda b: True, {s0})
                stem = (head[0] + mid[0], head[1] + [a] + mid[1])
                search = _Search(lts, set(response), mode, blocked)
                lasso = _just_lasso_from(lts, search, mid[0][-1], stem)
                if lasso is None or not is_just_lasso_direct(lts, lasso, mode, blockables):
                    raise AssertionError("oracle produced an invalid witness")
                lasso.meta.update({"thread": t, "trigger": len(head[1]),
                                   "core_start": len(stem[1])})
                return Verdict(prop, False, lasso, {"states": lts.n_states}, t)
    return Verdict(prop, True, None, {"states": lts.n_states})


def _plain_graph(lts: Lts) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(lts.n_states))
    g.add_edges_from(zip(lts.src.tolist(), lts.dst.tolist()))
    return g
