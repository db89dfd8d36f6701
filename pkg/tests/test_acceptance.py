"""Acceptance criteria, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line; the lines are repeated in the
pytest terminal summary. Run alone with ``pytest tests/test_acceptance.py``.
"""

import random
from contextlib import contextmanager

import pytest

from mcautotune.explorer import (check_nontermination, check_overtime, explore_config,
                                 replay)
from mcautotune.machine import deterministic_run
from mcautotune.model import (PlatformConfig, ProblemSpec, TuningParams, enumerate_configs,
                              feasible_configs)
from mcautotune.promela import export_promela
from mcautotune.search import best_row, bisect_min_time, exhaustive_sweep, swarm_min_time

P = PlatformConfig(nd=1, nu=1, np=4, gmt=4)
RESULTS = []


@contextmanager
def criterion(n, text):
    try:
        yield
    except BaseException:
        RESULTS.append(f"FAIL criterion {n}: {text}")
        print(RESULTS[-1])
        raise
    RESULTS.append(f"PASS criterion {n}: {text}")
    print(RESULTS[-1])


def _t_hi(prob):
    return max(r.time for r in exhaustive_sweep(P, prob) if r.time is not None)


def test_c1_table_row():
    with criterion(1, "size=8 abstract tunes to T_min=44 WG=4 TS=4"):
        r = bisect_min_time(P, ProblemSpec(8), 100)
        assert (r.t_min, r.params.wg, r.params.ts) == (44, 4, 4)
        assert r.proven


def test_c2_boundary():
    with criterion(2, "check at T_min violated, at T_min-1 holds exhaustively (size 4, 8)"):
        for size in (4, 8):
            prob = ProblemSpec(size)
            t_min = bisect_min_time(P, prob, _t_hi(prob)).t_min
            assert check_overtime(P, prob, t_min).violated
            v = check_overtime(P, prob, t_min - 1)
            assert v.holds and v.exhaustive


def test_c3_oracle():
    with criterion(3, "bisection equals the exhaustive sweep (abstract 4/8/16, minimum 8/16)"):
        for prob in (ProblemSpec(4), ProblemSpec(8), ProblemSpec(16),
                     ProblemSpec(8, "minimum"), ProblemSpec(16, "minimum")):
            rows = exhaustive_sweep(P, prob)
            r = bisect_min_time(P, prob, _t_hi(prob))
            assert r.t_min == best_row(rows).time, prob
            times = {r2.params: r2.time for r2 in rows}
            assert times[r.params] == r.t_min


def test_c4_swarm():
    with criterion(4, "swarm equals bisection at size<=16, never undercuts it at size 32"):
        for prob in (ProblemSpec(8), ProblemSpec(16), ProblemSpec(16, "minimum")):
            exact = bisect_min_time(P, prob, _t_hi(prob)).t_min
            s = swarm_min_time(P, prob, workers=4, seed=0, first_budget=30.0)
            assert s.t_min == exact, prob
        prob = ProblemSpec(32)
        exact = bisect_min_time(P, prob, _t_hi(prob)).t_min
        for budget in (0.2, 1.0):
            assert swarm_min_time(P, prob, workers=4, seed=1, first_budget=budget).t_min >= exact


def test_c5_minimum_correct():
    with criterion(5, "minimum kernel returns the true minimum on 100 random arrays"):
        rng = random.Random(2024)
        for case in range(100):
            size = 2 ** rng.randint(2, 6)
            data = [rng.randint(-10**12, 10**12) for _ in range(size)]
            prob = ProblemSpec(size, "minimum", input=data)
            cfg = rng.choice(feasible_configs(prob))
            want = min(data)
            runs = [deterministic_run(P, prob, cfg),
                    deterministic_run(P, prob, cfg, "seeded-random", case)]
            for run in runs:
                assert run.result == want
                assert replay(P, prob, run.trace).glob[0] == want
            if size <= 8:
                assert explore_config(P, prob, cfg).terminal_results == {want}
                for t in check_nontermination(P, prob):
                    assert replay(P, prob, t).glob[0] == want


def test_c6_trends():
    with criterion(6, "minimum kernel best WG is the largest minimal-time WG, rising with size"):
        rows = exhaustive_sweep(P, ProblemSpec(16, "minimum"))
        best = best_row(rows)
        tied = [r.wg for r in rows if r.time == best.time]
        assert best.wg == max(tied) == 8
        r = bisect_min_time(P, ProblemSpec(16, "minimum"), _t_hi(ProblemSpec(16, "minimum")))
        assert r.params.wg == 8
        wgs = [best_row(exhaustive_sweep(P, ProblemSpec(s, "minimum"))).wg
               for s in (16, 32, 64)]
        assert wgs == sorted(wgs)


def test_c7_invariants():
    with criterion(7, "exhaustive size-8 exploration: no deadlock or invariant break, one time per config"):
        prob = ProblemSpec(8)
        for cfg in enumerate_configs(8):
            ex = explore_config(P, prob, cfg)
            assert ex.invariant_violations == {}
            assert ex.terminal_states >= 1
            assert ex.terminal_times == {deterministic_run(P, prob, cfg).time}


def test_c8_monotone():
    with criterion(8, "check verdicts are monotone on a 10-point T grid (size 8)"):
        grid = [0, 11, 22, 33, 43, 44, 45, 66, 88, 200]
        verdicts = [check_overtime(P, ProblemSpec(8), T).violated for T in grid]
        assert verdicts == sorted(verdicts)
        assert verdicts[grid.index(43)] is False and verdicts[grid.index(44)] is True


def test_c9_export():
    with criterion(9, "size-8 Promela export has the guard, launch arithmetic and ltl; byte-stable"):
        a = export_promela(P, ProblemSpec(8))
        assert "NRP_work == allNWE" in a
        assert "WGs = size / (WG * TS)" in a
        assert "ltl overtime { [] (FIN -> (time > T)) }" in a
        assert a.encode() == export_promela(P, ProblemSpec(8)).encode()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
