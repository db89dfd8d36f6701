import random

import pytest
from hypothesis import given, settings, strategies as st

from mcautotune.explorer import ExploreLimits, _search, load_trace, NonTermination
from mcautotune.machine import (TICK, ContractError, Machine, Transition, canonical_bytes,
                                deterministic_run, fingerprint, format_trace)
from mcautotune.model import PlatformConfig, ProblemSpec, TuningParams, enumerate_configs
from mcautotune.trace import parse

P = PlatformConfig()


def states_along(m, trace):
    s = m.initial_state()
    out = [s]
    for t in trace.transitions:
        s = m.apply(s, t)
        out.append(s)
    return out


def test_process_count():
    m = Machine(P, ProblemSpec(8), TuningParams(4, 4))
    assert len(m.initial_state().processes) == 10
    m2 = Machine(P, ProblemSpec(8), TuningParams(2, 4))
    s = m2.initial_state()
    assert m2.plan.nwe == 2 and s.all_nwe == 2
    assert m2.layout.roles.count("pex") == 2


def test_minimum_initial_memory():
    s = Machine(P, ProblemSpec(16, "minimum"), TuningParams(8, 2)).initial_state()
    assert s.glob == tuple(range(16, 0, -1))


def test_tick_gating():
    m = Machine(P, ProblemSpec(8), TuningParams(4, 4))
    run = deterministic_run(P, ProblemSpec(8), TuningParams(4, 4))
    seen3 = seen4 = False
    for s in states_along(m, run.trace):
        en = m.enabled(s)
        ticks = [t for t in en if t.kind == TICK]
        if s.all_nwe == 4 and s.nrp_work == 3 and not s.fin:
            seen3 = True
            assert not ticks
            assert any(t.label == "report" for t in en)
        if s.all_nwe == 4 and s.nrp_work == 4:
            seen4 = True
            assert len(ticks) == 1
    assert seen3 and seen4


def test_terminal_and_apply():
    prob = ProblemSpec(8)
    m = Machine(P, prob, TuningParams(4, 4))
    s0 = m.initial_state()
    assert not m.is_terminal(s0)
    with pytest.raises(ContractError):
        m.final_time(s0)
    with pytest.raises(ContractError):
        m.apply(s0, Transition(2, "tick", TICK))
    run = deterministic_run(P, prob, TuningParams(4, 4))
    assert m.is_terminal(run.state) and run.state.fin
    assert m.enabled(run.state) == []
    assert m.final_time(run.state) == 44
    for s in states_along(m, run.trace):
        for t, nxt in m.successors(s):
            if t.kind == TICK:
                assert nxt.time == s.time + 1 and nxt.nrp_work == 0
            else:
                assert nxt.time == s.time
            if t.label == "release":
                assert (nxt.glob, nxt.loc) == (s.glob, s.loc)


def test_small_gmt_time():
    run = deterministic_run(PlatformConfig(gmt=1), ProblemSpec(4), TuningParams(2, 2))
    assert run.time == 9


def test_map_step_updates_loc():
    prob = ProblemSpec(4, "minimum", input=[5, 3, 9, 7])
    m = Machine(P, prob, TuningParams(2, 2))
    run = deterministic_run(P, prob, TuningParams(2, 2))
    checked = 0
    for s in states_along(m, run.trace):
        for t, nxt in m.successors(s):
            if t.label.startswith("step map"):
                upid, me = m.layout.pex_info[t.pid]
                p = s.processes[t.pid]
                idx = p.cursor // 2 + p.nwg * 2 * 2 + me * 2
                assert nxt.loc[me] == min(s.loc[me], s.glob[idx])
                checked += 1
    assert checked
    assert run.result == 3


def test_fingerprint():
    m = Machine(P, ProblemSpec(8), TuningParams(4, 4))
    s = m.initial_state()
    assert fingerprint(s) == fingerprint(s)
    assert fingerprint(s) != fingerprint(s.__class__(**{**vars(s), "time": 1}))


def test_fingerprint_no_collisions():
    full, fps = set(), set()

    def on_state(m, s):
        full.add(canonical_bytes(s))
        fps.add(fingerprint(s))

    # size 8 alone has a few thousand states, size 16 tops the pool up
    for size in (8, 16):
        _search(P, ProblemSpec(size), NonTermination(), ExploreLimits(), first_only=False,
                on_state=on_state)
    assert len(full) >= 10_000
    assert len(fps) == len(full)


@pytest.mark.parametrize("cfg", enumerate_configs(8))
def test_seeded_runs_agree(cfg):
    prob = ProblemSpec(8)
    base = deterministic_run(P, prob, cfg).time
    times = {deterministic_run(P, prob, cfg, "seeded-random", seed).time for seed in range(10)}
    assert times == {base}


def test_minimum_result_independent_of_schedule():
    prob = ProblemSpec(4, "minimum", input=[5, 3, 9, 7])
    for seed in range(5):
        assert deterministic_run(P, prob, TuningParams(2, 2), "seeded-random", seed).result == 3


def test_work_conservation():
    # every tick decrements exactly all_nwe busy pexes
    prob = ProblemSpec(16)
    cfg = TuningParams(8, 2)
    m = Machine(P, prob, cfg)
    run = deterministic_run(P, prob, cfg, "seeded-random", 3)
    ticked = 0
    states = states_along(m, run.trace)
    for s, t, nxt in zip(states, run.trace.transitions, states[1:]):
        if t.kind == TICK:
            before = sum(p.remaining for p in s.processes if hasattr(p, "remaining"))
            after = sum(p.remaining for p in nxt.processes if hasattr(p, "remaining"))
            assert before - after == s.all_nwe
            ticked += s.all_nwe
    busy = m.program.busy_total() * cfg.wg * m.plan.wgs
    assert ticked == busy


def test_trace_round_trip():
    prob = ProblemSpec(8, "minimum")
    run = deterministic_run(P, prob, TuningParams(4, 2))
    text = format_trace(P, prob, run.trace)
    rows, final = parse(text)
    assert final == {"time": run.time, "wg": 4, "ts": 2, "result": 1}
    assert len(rows) == run.steps
    back = load_trace(text)
    assert back == run.trace.__class__(tuple(Transition(t.pid, t.label, "")
                                             for t in run.trace.transitions),
                                       run.time, run.trace.params, 1)
    assert format_trace(P, prob, back) == text


configs8 = st.sampled_from(enumerate_configs(8) + enumerate_configs(16))


@settings(max_examples=25)
@given(configs8, st.integers(0, 2**32), st.integers(1, 3))
def test_random_schedule_invariants(cfg, seed, gmt):
    plat = PlatformConfig(gmt=gmt)
    prob = ProblemSpec(16 if max(cfg.wg, cfg.ts) > 4 else 8)
    m = Machine(plat, prob, cfg)
    run = deterministic_run(plat, prob, cfg, "seeded-random", seed)
    prev = None
    for s in states_along(m, run.trace):
        assert m.invariant_violations(s) == []
        if prev is not None:
            assert prev.time <= s.time <= prev.time + 1
        prev = s
    assert run.time == deterministic_run(plat, prob, cfg).time
