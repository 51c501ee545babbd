import random

import numpy as np
import pytest
from helpers import random_lasso, random_model

from justcheck.checker import (Property, check_liveness, check_mutual_exclusion,
                               extract_lasso_witness, is_just_lasso, nu_core, witness_is_valid)
from justcheck.interference import MODES
from justcheck.lts import Kind, Lasso, Lts, crit, noncrit, start_read, start_write
from justcheck.model import build_model, compose_model
from justcheck.oracle import ModelTooLarge, brute_force_liveness, is_just_lasso_direct
from justcheck.registers import RegisterConfig, register_lts
from justcheck.threads import algorithm_catalog, compile_thread
from justcheck.threads.ir import Crit, Reg, ThreadProgram, While, Write, eq


def model_of(name, variant, kind, n=2):
    return build_model(algorithm_catalog(name, variant, n), kind)


@pytest.fixture(scope="module")
def busy_wait():
    """Thread 0 spins reading r until it is true; thread 1 sets r."""
    cfg = RegisterConfig("r", (False, True), False, "atomic")
    t0 = compile_thread(ThreadProgram(0, [While(eq(Reg("r"), False), []), Crit()]), {"r": cfg})
    t1 = compile_thread(ThreadProgram(1, [Write("r", None, True), Crit()]), {"r": cfg})
    return compose_model([t0, t1], {"r": register_lts(cfg, 2)})


def _step(lts, s, label):
    return next(t for a, t in lts.out(s) if lts.labels[a] == label)


# mutual exclusion

def test_mutex_examples():
    assert check_mutual_exclusion(model_of("peterson", "base", "atomic")).holds
    v = check_mutual_exclusion(model_of("peterson", "base", "safe"))
    assert not v.holds
    lts = model_of("peterson", "base", "safe").lts
    assert v.witness.replays(lts)
    end = v.witness.states[-1]
    crits = {lts.labels[a].thread for a, _ in lts.out(end) if lts.labels[a].kind is Kind.CRIT}
    assert len(crits) == 2


def test_single_thread_model_has_mutual_exclusion():
    lts = Lts([0, 1], [noncrit(0), crit(0)], [(0, 0, 1), (1, 1, 0)])
    assert check_mutual_exclusion(compose_model([lts])).holds


# fixpoint

def test_unavoidable_response_empties_core():
    lts = Lts([0, 1], [start_read(0, "r"), crit(0)], [(0, 0, 1), (1, 1, 0)])
    assert not nu_core(lts, {crit(0)}, "T").any()


def test_stopping_at_blockable_action_avoids_response():
    lts = Lts([0, 1], [noncrit(0), crit(0)], [(0, 0, 1), (1, 1, 0)])
    assert nu_core(lts, {crit(0)}, "T").tolist() == [True, False]


def test_core_under_i_reachable_after_noncrit():
    m = model_of("peterson", "base", "atomic")
    crits = {a for a in m.lts.labels if a.kind is Kind.CRIT}
    x = nu_core(m, crits, "I")
    assert x.any()
    nc = [m.lts.label_index[noncrit(t)] for t in range(2)]
    assert x[m.lts.dst[np.isin(m.lts.act, nc)]].any() or not check_liveness(m, "deadlock", "I").holds


def test_core_is_idempotent_and_antitone():
    rng = random.Random(2)
    for _ in range(15):
        m = random_model(rng)
        crits = [a for a in m.lts.labels if a.kind is Kind.CRIT]
        for mode in MODES:
            small = nu_core(m, crits[:1], mode)
            big = nu_core(m, crits, mode)
            assert not (big & ~small).any()
            assert np.array_equal(nu_core(m, crits, mode, within=big), big)


# liveness verdicts

def test_dekker_safe_t_violates_both():
    m = model_of("dekker", "base", "safe")
    for prop in ("deadlock", "starvation"):
        v = check_liveness(m, prop, "T")
        assert not v.holds and witness_is_valid(m, v, "T")


def test_dekker_atomic_verdicts():
    m = model_of("dekker", "base", "atomic")
    assert check_liveness(m, "starvation", "T").holds
    assert check_liveness(m, "deadlock", "S").holds
    v = check_liveness(m, "starvation", "S")
    assert not v.holds and witness_is_valid(m, v, "S")


def test_peterson_mode_i_witness_discharges_write_by_reads():
    m = model_of("peterson", "base", "atomic")
    v = check_liveness(m, "deadlock", "I")
    assert not v.holds and witness_is_valid(m, v, "I")
    lasso = v.witness
    cycle = [m.lts.labels[a] for a in lasso.cycle_actions]
    acting = {a.thread for a in cycle}
    assert len(acting) == 1
    parked = 1 - acting.pop()
    assert any(a.kind is Kind.START_READ for a in cycle)
    comp = m.components[parked]
    own = {comp.labels[a] for a, _ in comp.out(m.thread_state(lasso.cycle_states[0], parked))}
    assert any(a.kind is Kind.START_WRITE for a in own)
    assert not is_just_lasso(m, lasso, "S")


def test_verdict_ordering_across_modes():
    for name, variant in [("dekker", "base"), ("attiya_welch", "orig"), ("peterson", "base")]:
        m = model_of(name, variant, "atomic")
        for prop in ("deadlock", "starvation"):
            held = [check_liveness(m, prop, mode, witness=False).holds for mode in MODES]
            assert held == sorted(held, reverse=True)


def test_self_loop_witness():
    lts = Lts([0, 1], [noncrit(0), start_read(0, "r")], [(0, 0, 1), (1, 1, 1)])
    x = nu_core(lts, {crit(0)}, "T")
    assert x[1]
    lasso = extract_lasso_witness(lts, x, 1, "T")
    assert lasso.cycle_states == [1, 1] and lasso.prefix_actions == [0]


def test_liveness_rejects_nothing_on_mutex_property():
    m = model_of("peterson", "base", "atomic")
    assert check_liveness(m, Property.MUTEX, "T").holds


# justness of lassos

def test_busy_wait_lasso_justness(busy_wait):
    lts = busy_wait.lts
    s1 = _step(lts, lts.initial, noncrit(0))
    s2 = _step(lts, s1, noncrit(1))
    cyc, acts, s = [s2], [], s2
    for lab in ("start_read(t=0,r=r)", "order_read(t=0,r=r)", "finish_read(t=0,r=r,v=false)"):
        a = next(a for a, _ in lts.out(s) if str(lts.labels[a]) == lab)
        s = next(t for b, t in lts.out(s) if b == a)
        cyc.append(s)
        acts.append(a)
    assert s == s2
    lasso = Lasso([lts.initial, s1, s2], [lts.label_index[noncrit(0)],
                                          lts.label_index[noncrit(1)]], cyc, acts)
    expect = {"T": False, "S": False, "I": True, "A": True}
    for mode, just in expect.items():
        assert is_just_lasso(busy_wait, lasso, mode) is just
        assert is_just_lasso_direct(busy_wait, lasso, mode) is just
    assert start_write(1, "r", True) in {lts.labels[a] for a, _ in lts.out(s2)}


def _random_walk_lasso(lts, rng):
    path, s, seen = [], lts.initial, {}
    while s not in seen:
        seen[s] = len(path)
        a, t = rng.choice(lts.out(s))
        path.append((s, a))
        s = t
    k = seen[s]
    states = [p[0] for p in path] + [s]
    actions = [p[1] for p in path]
    return Lasso(states[:k + 1], actions[:k], states[k:], actions[k:])


def test_lasso_with_both_threads_acting_is_just():
    m = model_of("peterson", "base", "atomic")
    found = 0
    for seed in range(200):
        lasso = _random_walk_lasso(m.lts, random.Random(seed))
        if {m.lts.labels[a].thread for a in lasso.cycle_actions} == {0, 1}:
            found += 1
            for mode in MODES:
                assert is_just_lasso(m, lasso, mode)
    assert found > 0


def test_is_just_lasso_requires_replay():
    m = model_of("peterson", "base", "atomic")
    with pytest.raises(ValueError):
        is_just_lasso(m, Lasso([1], [], [1], []), "T")


def test_lasso_justness_agrees_with_definition_sample():
    rng = random.Random(9)
    for _ in range(10):
        m = random_model(rng)
        for _ in range(5):
            lasso = random_lasso(rng, m)
            for mode in MODES:
                assert is_just_lasso(m, lasso, mode) == is_just_lasso_direct(m, lasso, mode)


def test_oracle_agreement_on_peterson():
    m = model_of("peterson", "base", "atomic")
    for mode in MODES:
        for prop in ("deadlock", "starvation"):
            fast = check_liveness(m, prop, mode, witness=False).holds
            slow = brute_force_liveness(m, prop, mode)
            assert fast == slow.holds
            if not slow.holds:
                assert slow.witness.replays(m.lts)


def test_oracle_trivial_and_bound():
    lts = Lts([0, 1], [noncrit(0), crit(0)], [(0, 0, 1), (1, 1, 0)])
    for prop in ("deadlock", "starvation"):
        assert brute_force_liveness(compose_model([lts]), prop, "T").holds
    with pytest.raises(ModelTooLarge):
        brute_force_liveness(model_of("peterson", "base", "regular"), "deadlock", "T", bound=100)
