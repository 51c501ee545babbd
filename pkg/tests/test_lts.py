import itertools
import random

import networkx as nx
import numpy as np
import pytest

from justcheck.lts import (ActionLabel, Budget, Kind, Lasso, Lts, StateSpaceExceeded,
                           compose_parallel, crit, enabled_in, explore, finish_read,
                           finish_write, noncrit, order_read, parse_label, shortest_path,
                           start_read, start_write)
from justcheck.model import build_model
from justcheck.registers import RegisterKind, register_lts
from justcheck.threads import algorithm_catalog


def chain(labels, alphabet=None) -> Lts:
    """States 0..n with one transition per label in sequence."""
    return Lts(list(range(len(labels) + 1)), list(labels),
               [(k, k, k + 1) for k in range(len(labels))], alphabet)


# labels

def test_label_invariants():
    with pytest.raises(ValueError):
        ActionLabel(Kind.CRIT, 0, "r")
    with pytest.raises(ValueError):
        ActionLabel(Kind.START_WRITE, 0, "r")
    with pytest.raises(ValueError):
        ActionLabel(Kind.START_READ, 0, "r", 1)
    with pytest.raises(ValueError):
        ActionLabel(Kind.FINISH_READ, 0, None, 1)


def test_label_rendering_and_parsing():
    a = start_write(0, "flag0", 1)
    assert str(a) == "start_write(t=0,r=flag0,v=1)"
    assert str(crit(1)) == "crit(t=1)"
    assert str(start_write(0, "flag0", True)) == "start_write(t=0,r=flag0,v=true)"
    for lab in (a, crit(1), noncrit(0), finish_read(1, "turn", 0), start_read(0, "x"),
                finish_read(0, "f", False), order_read(2, "x"), finish_write(0, "x")):
        assert parse_label(str(lab)) == lab


def test_labels_compare_structurally():
    assert start_read(0, "r") == start_read(0, "r")
    assert len({finish_read(0, "r", 1), finish_read(0, "r", 1)}) == 1
    assert start_read(0, "r").is_start and not finish_read(0, "r", 0).is_start


# composition

def test_disjoint_alphabets_interleave():
    a, b = crit(0), crit(1)
    p = compose_parallel([chain([a]), chain([b])])
    assert p.n_states == 4
    runs = {(p.labels[x], p.labels[y]) for x, s in p.out(p.initial) for y, _ in p.out(s)}
    assert runs == {(a, b), (b, a)}


def test_shared_action_needs_all_owners():
    a, b = crit(0), crit(1)
    left = chain([a])
    right = chain([b, a])  # a only after b in the second component
    p = compose_parallel([left, right])
    assert a not in enabled_in(p, p.initial)
    assert enabled_in(p, p.initial) == {b}


def test_enabled_in():
    p = chain([crit(0)])
    assert enabled_in(p, 1) == set()
    with pytest.raises(KeyError):
        enabled_in(p, 7)


def test_initial_state_enables_both_noncrits():
    m = build_model(algorithm_catalog("dekker", "base", 2), "atomic")
    assert {noncrit(0), noncrit(1)} <= enabled_in(m.lts, m.lts.initial)


def test_atomic_register_after_start_read_only_orders():
    from justcheck.registers import RegisterConfig
    lts = register_lts(RegisterConfig("r", (0, 1), 0, "atomic"), 2)
    s = dict((lts.labels[a], t) for a, t in lts.out(lts.initial))[start_read(0, "r")]
    own = {a for a in enabled_in(lts, s) if a.thread == 0}
    assert own == {order_read(0, "r")}


def _lockstep_count(components) -> int:
    """Naive product: every joint state, every label, all owners move together."""
    owners = {}
    for k, c in enumerate(components):
        for a in c.alphabet:
            owners.setdefault(a, []).append(k)
    start = tuple(c.initial for c in components)
    seen, stack = {start}, [start]
    while stack:
        joint = stack.pop()
        moves = {}
        for k, c in enumerate(components):
            for a, t in c.out(joint[k]):
                moves.setdefault((k, c.labels[a]), []).append(t)
        for a, ks in owners.items():
            choices = [moves.get((k, a)) for k in ks]
            if not all(choices):
                continue
            for targets in itertools.product(*choices):
                nxt = list(joint)
                for k, t in zip(ks, targets):
                    nxt[k] = t
                nxt = tuple(nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return len(seen)


@pytest.mark.parametrize("kind", ["safe", "regular", "atomic"])
def test_peterson_product_matches_lockstep_oracle(kind):
    m = build_model(algorithm_catalog("peterson", "base", 2), kind)
    assert m.lts.n_states == _lockstep_count(m.components)


def _random_lts(rng, labels, n) -> Lts:
    trans = {(rng.randrange(n), rng.randrange(len(labels)), rng.randrange(n))
             for _ in range(rng.randint(1, 2 * n))}
    alphabet = set(rng.sample(labels, rng.randint(1, len(labels))))
    return Lts(list(range(n)), labels, sorted(trans), alphabet | set(labels))


def _as_graph(lts: Lts) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    g.add_nodes_from(range(lts.n_states))
    for s, a, t in lts.transitions():
        g.add_edge(s, t, label=a)
    g.nodes[lts.initial]["init"] = True
    return g


def test_composition_is_associative():
    rng = random.Random(3)
    pool = [crit(0), crit(1), noncrit(0), noncrit(1), start_read(0, "r")]
    for _ in range(30):
        comps = [_random_lts(rng, rng.sample(pool, 3), rng.randint(2, 4)) for _ in range(3)]
        a, b, c = comps
        left = compose_parallel([compose_parallel([a, b]), c])
        right = compose_parallel([a, compose_parallel([b, c])])
        assert left.n_states == right.n_states
        assert left.n_transitions == right.n_transitions
        assert nx.is_isomorphic(
            _as_graph(left), _as_graph(right),
            node_match=lambda x, y: x.get("init") == y.get("init"),
            edge_match=lambda x, y: sorted(str(e["label"]) for e in x.values())
            == sorted(str(e["label"]) for e in y.values()))


def test_product_transitions_project_to_components():
    m = build_model(algorithm_catalog("peterson", "base", 2), "regular")
    for s, a, t in m.lts.transitions():
        for k, comp in enumerate(m.components):
            src, dst = m.lts.states[s][k], m.lts.states[t][k]
            if a in comp.alphabet:
                assert comp.has_transition(src, a, dst)
            else:
                assert src == dst


def test_composition_is_deterministic():
    spec = algorithm_catalog("dekker", "alt", 2)
    first, second = build_model(spec, "safe"), build_model(spec, "safe")
    assert (first.lts.n_states, first.lts.n_transitions) == \
        (second.lts.n_states, second.lts.n_transitions)
    assert np.array_equal(first.lts.dst, second.lts.dst)


def test_state_cap_raises():
    spec = algorithm_catalog("peterson", "base", 2)
    with pytest.raises(StateSpaceExceeded):
        build_model(spec, "regular", Budget(max_states=50))
    with pytest.raises(StateSpaceExceeded):
        explore(0, lambda s: [(crit(0), s + 1)], {crit(0)}, Budget(max_transitions=10))


def test_dump_format():
    text = chain([start_write(0, "flag0", 1), crit(1)]).dump()
    assert text.splitlines() == ["0 start_write(t=0,r=flag0,v=1) 1", "1 crit(t=1) 2"]


# paths and lassos

def test_lasso_shape_and_replay():
    lts = Lts([0, 1], [crit(0), noncrit(0)], [(0, 1, 1), (1, 0, 0)])
    lasso = Lasso([0], [], [0, 1, 0], [1, 0])
    assert lasso.replays(lts) and not lasso.is_finite
    assert lasso.render(lts) == "--- cycle ---\n0: noncrit(t=0)\n1: crit(t=0)\n"
    assert Lasso([0, 1], [1], [1], []).is_finite
    with pytest.raises(ValueError):
        Lasso([0], [], [0, 1], [1])
    assert not Lasso([0], [], [0, 1, 0], [0, 1]).replays(lts)


def test_shortest_path():
    lts = chain([crit(0), crit(1), crit(0)])
    assert shortest_path(lts, [2]) == ([0, 1, 2], [0, 1])
    mask = np.zeros(4, dtype=bool)
    mask[3] = True
    assert shortest_path(lts, mask)[0] == [0, 1, 2, 3]
    assert shortest_path(lts, [0], source=3) is None


def test_register_lts_rejects_blocking_kind():
    from justcheck.registers import RegisterConfig
    with pytest.raises(ValueError):
        register_lts(RegisterConfig("r", (0, 1), 0, RegisterKind.BLOCKING_A), 2)
