import pytest
from hypothesis import given, settings, strategies as st

from mcautotune.explorer import (BITSTATE, ContractError, ExploreLimits, NonTermination,
                                 OverTime, check_nontermination, check_overtime,
                                 explore_config, load_trace, replay, run_swarm, swarm_worker)
from mcautotune.machine import Machine, deterministic_run, format_trace
from mcautotune.model import PlatformConfig, ProblemSpec, TuningParams, enumerate_configs
from mcautotune.search import exhaustive_sweep
from mcautotune.trace import TraceError

P = PlatformConfig()
S8 = ProblemSpec(8)
BIT = ExploreLimits(mode=BITSTATE, wall_budget=5.0)


def test_overtime_boundary():
    v = check_overtime(P, S8, 43)
    assert v.holds and v.exhaustive
    assert str(v) == "HOLDS (exhaustive)"
    v = check_overtime(P, S8, 44)
    assert v.violated and not v.exhaustive
    assert (v.trace.final_time, v.trace.params) == (44, TuningParams(4, 4))
    assert str(v) == "VIOLATED time=44 wg=4 ts=4"
    assert check_overtime(P, S8, 10**9).violated


def test_summary_keys():
    v = check_overtime(P, S8, 43)
    assert set(v.summary()) == {"verdict", "exhaustive", "states_visited",
                                "max_depth_reached", "wall_seconds"}
    assert v.summary("t.txt")["trace_path"] == "t.txt"


def test_nontermination():
    traces = check_nontermination(P, S8)
    assert len(traces) >= 4
    assert {t.params for t in traces} == set(enumerate_configs(8))
    assert min(t.final_time for t in traces) == 44
    assert check_nontermination(P, S8, ExploreLimits(max_depth=1)) == []


def test_depth_limit_is_not_exhaustive():
    v = check_overtime(P, S8, 43, ExploreLimits(max_depth=50))
    assert v.holds and not v.exhaustive


def test_replay_and_soundness():
    for T in (44, 60, 100):
        v = check_overtime(P, S8, T)
        s = replay(P, S8, v.trace)
        assert s.fin and s.time == v.trace.final_time <= T
    prob = ProblemSpec(8, "minimum", input=[4, 8, -2, 7, 7, 0, 3, 9])
    for t in check_nontermination(P, prob):
        assert replay(P, prob, t).glob[0] == -2 == t.result


def test_corrupt_traces():
    run = deterministic_run(P, S8, TuningParams(4, 4))
    text = format_trace(P, S8, run.trace)
    lines = text.splitlines()
    with pytest.raises(TraceError):  # renumbered gap
        load_trace("\n".join(lines[:5] + lines[6:]))
    with pytest.raises(TraceError):  # a transition that is never enabled there
        replay(P, S8, load_trace(text.replace("go devices", "go nowhere", 1)))
    with pytest.raises(TraceError):
        replay(P, S8, load_trace("\n".join(lines[:-3] + [lines[-1]])))
    with pytest.raises(TraceError):
        replay(P, S8, load_trace(text.replace("FINAL time=44", "FINAL time=43")))
    with pytest.raises(TraceError):
        load_trace("0 1 host go devices\n")
    assert replay(P, S8, load_trace(text)).time == 44


def test_swarm_worker():
    a = swarm_worker(P, S8, NonTermination(), 1, BIT)
    b = swarm_worker(P, S8, NonTermination(), 2, BIT)
    assert a and b
    for t in a + b:
        replay(P, S8, t)
    assert swarm_worker(P, S8, NonTermination(), 1, BIT) == a
    with pytest.raises(ContractError):
        swarm_worker(P, S8, NonTermination(), 1, ExploreLimits())


def test_bitstate_never_exhaustive():
    v = check_overtime(P, S8, 43, ExploreLimits(mode=BITSTATE))
    assert v.holds and not v.exhaustive


def test_run_swarm_order():
    sink = run_swarm(P, S8, OverTime(50), [3, 4], BIT)
    again = run_swarm(P, S8, OverTime(50), [3, 4], BIT)
    assert sink.traces == again.traces
    assert [m["worker"] for m in sink.meta] == sorted(m["worker"] for m in sink.meta)
    assert all(t.final_time <= 50 for t in sink.traces)


def test_every_config_is_found():
    # completeness: exact search sees every config's (unique) time
    traces = check_nontermination(P, ProblemSpec(16, "minimum"))
    found = {(t.params.wg, t.params.ts, t.final_time) for t in traces}
    rows = {(r.wg, r.ts, r.time) for r in exhaustive_sweep(P, ProblemSpec(16, "minimum"))
            if r.status == "ok"}
    assert found == rows


@pytest.mark.parametrize("cfg", enumerate_configs(8))
def test_explore_config_invariants(cfg):
    ex = explore_config(P, S8, cfg)
    assert ex.invariant_violations == {}
    assert ex.terminal_times == {deterministic_run(P, S8, cfg).time}


@settings(max_examples=20)
@given(st.integers(0, 120), st.integers(0, 120))
def test_monotone_in_T(t1, t2):
    lo, hi = sorted((t1, t2))
    if check_overtime(P, ProblemSpec(4), lo).violated:
        assert check_overtime(P, ProblemSpec(4), hi).violated
