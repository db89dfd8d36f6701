"""Auto-tuning drivers built on the explorer.

* :func:`bisect_min_time` binary-searches the least ``T`` for which
  ``G(FIN -> time > T)`` has a counterexample.
* :func:`swarm_min_time` repeats randomised bitstate swarms with a falling
  ``T``, stopping when a round finds nothing within the previous round's
  wall time.
* :func:`exhaustive_sweep` simulates every config once; it is the oracle the
  other two are checked against.

When several configs reach the minimal time the one with the largest ``wg``,
then the largest ``ts``, is reported.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import random
import time as _time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, List, Optional, Sequence

from .explorer import (BITSTATE, EXACT, ExploreLimits, NonTermination, OverTime, TraceSink,
                       check_overtime, replay, run_swarm)
from .machine import DeadlockError, deterministic_run
from .model import (PlatformConfig, ProblemSpec, TuningParams, enumerate_configs, feasible,
                    feasible_configs)
from .trace import Trace

log = logging.getLogger(__name__)

CSV_HEADER = ["size", "wg", "ts", "time", "transitions"]


class SearchError(RuntimeError):
    pass


@dataclass
class TuneResult:
    t_min: int
    params: TuningParams
    trace: Trace
    t_ini: int
    method: str
    proven: bool
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"t_min": self.t_min, "wg": self.params.wg, "ts": self.params.ts,
                "t_ini": self.t_ini, "method": self.method, "proven": self.proven,
                "transitions": self.trace.steps, "stats": self.stats}

    def line(self) -> str:
        s = f"T_min={self.t_min} WG={self.params.wg} TS={self.params.ts}"
        return s if self.proven else s + " (not exhaustive)"


@dataclass(frozen=True)
class SweepRow:
    size: int
    wg: int
    ts: int
    time: Optional[int]
    transitions: Optional[int]
    status: str = "ok"  # ok | infeasible | deadlock

    @property
    def params(self) -> TuningParams:
        return TuningParams(self.wg, self.ts)


def _preference(t: Trace):
    # smaller time first, then larger wg, then larger ts
    return (t.final_time, -t.params.wg, -t.params.ts)


def best_trace(traces: Iterable[Trace]) -> Trace:
    return min(traces, key=_preference)


def estimate_initial_time(platform: PlatformConfig, problem: ProblemSpec, seed: int) -> int:
    """T_ini: the final time of one random simulation of a random config."""
    rng = random.Random(seed)
    cfg = rng.choice(feasible_configs(problem))
    run = deterministic_run(platform, problem, cfg, policy="seeded-random", seed=seed)
    log.info("initial simulation wg=%d ts=%d -> time %d", cfg.wg, cfg.ts, run.time)
    return run.time


def bisect_min_time(platform: PlatformConfig, problem: ProblemSpec, t_hi: int,
                    limits: ExploreLimits = ExploreLimits()) -> TuneResult:
    if limits.mode != EXACT:
        raise ValueError("bisection needs exact-mode checks")
    t_start = _time.perf_counter()
    checks = 0
    states = 0
    proven = True

    def check(T, configs=None):
        nonlocal checks, states, proven
        v = check_overtime(platform, problem, T, limits, configs=configs)
        checks += 1
        states += v.stats.states_visited
        if v.holds and not v.exhaustive:
            proven = False
        log.debug("check T=%d -> %s", T, v)
        return v

    v = check(t_hi)
    if v.holds:
        raise SearchError(f"t_hi={t_hi} too small: no run terminates within it")
    first = best = v.trace
    # a counterexample at time t proves C(t), so hi can drop straight to it;
    # lo = 0 is never checked since every program charges at least one tick
    hi, lo = first.final_time, 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        v = check(mid)
        if v.violated:
            best = v.trace
            hi = best.final_time
        else:
            lo = mid
    # configs are checked largest first, and each config has a single final
    # time, so a counterexample ending exactly at hi already comes from the
    # largest (wg, ts) reaching hi; otherwise one more check at hi finds it
    if best.final_time != hi:
        best = check(hi).trace
    return TuneResult(
        t_min=hi, params=best.params, trace=best, t_ini=t_hi, method="bisect", proven=proven,
        stats={"checks_run": checks, "states_visited_total": states,
               "wall_seconds": round(_time.perf_counter() - t_start, 3),
               "first_trail_optimality": round(hi / first.final_time, 4)})


def swarm_min_time(platform: PlatformConfig, problem: ProblemSpec, workers: int = 4,
                   limits: ExploreLimits = ExploreLimits(mode=BITSTATE), seed: int = 0,
                   first_budget: float = 10.0) -> TuneResult:
    """Heuristic minimal-time search; the result is never a proof."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    limits = replace(limits, mode=BITSTATE)
    t_start = _time.perf_counter()

    def seeds(round_no):
        return [seed * 7919 + round_no * workers + k for k in range(workers)]

    t0 = _time.perf_counter()
    sink = run_swarm(platform, problem, NonTermination(), seeds(0),
                     replace(limits, wall_budget=first_budget))
    budget = _time.perf_counter() - t0
    if not sink.traces:
        raise SearchError("model never terminated within limits")
    best = best_trace(sink.traces)
    first = min(sink.traces, key=lambda t: t.found_at)
    all_traces = list(sink.traces)
    rounds = 1
    while best.final_time > 0:
        T = best.final_time - 1
        t0 = _time.perf_counter()
        # budget granularity is the millisecond
        round_budget = max(round(budget, 3), 0.001)
        found = run_swarm(platform, problem, OverTime(T), seeds(rounds),
                          replace(limits, wall_budget=round_budget))
        budget = _time.perf_counter() - t0
        rounds += 1
        if not found.traces:
            break
        cand = best_trace(found.traces)
        all_traces += found.traces
        if cand.final_time >= best.final_time:
            break
        best = cand
    return TuneResult(
        t_min=best.final_time, params=best.params, trace=best, t_ini=first.final_time,
        method="swarm", proven=False,
        stats={"rounds": rounds, "traces_found": len(all_traces),
               "wall_seconds": round(_time.perf_counter() - t_start, 3),
               "first_trail_optimality": round(best.final_time / first.final_time, 4),
               "ranking": rank_trails(all_traces)[:10]})


def exhaustive_sweep(platform: PlatformConfig, problem: ProblemSpec) -> List[SweepRow]:
    rows = []
    for cfg in enumerate_configs(problem.size):
        if not feasible(problem, cfg):
            rows.append(SweepRow(problem.size, cfg.wg, cfg.ts, None, None, "infeasible"))
            continue
        try:
            run = deterministic_run(platform, problem, cfg)
        except DeadlockError as e:
            log.warning("wg=%d ts=%d: %s", cfg.wg, cfg.ts, e)
            rows.append(SweepRow(problem.size, cfg.wg, cfg.ts, None, None, "deadlock"))
            continue
        rows.append(SweepRow(problem.size, cfg.wg, cfg.ts, run.time, run.steps))
    # flagged rows sort last
    return sorted(rows, key=lambda r: (r.status != "ok", r.time or 0, r.transitions or 0))


def best_row(rows: Sequence[SweepRow]) -> SweepRow:
    ok = [r for r in rows if r.status == "ok"]
    if not ok:
        raise SearchError("no config ran to completion")
    return min(ok, key=lambda r: (r.time, -r.wg, -r.ts))


def extract_params(platform: PlatformConfig, problem: ProblemSpec, trace: Trace) -> dict:
    replay(platform, problem, trace)
    return {"wg": trace.params.wg, "ts": trace.params.ts, "time": trace.final_time}


def rank_trails(traces: Iterable[Trace]) -> List[dict]:
    """Trail summaries by ascending (time, transitions); ties keep input order."""
    return sorted((t.summary() for t in traces), key=lambda d: (d["time"], d["transitions"]))


def rows_to_csv(rows: Iterable) -> str:
    """CSV text for sweep rows or ranking dicts, header ``size,wg,ts,time,transitions``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        d = asdict(r) if isinstance(r, SweepRow) else r
        w.writerow(["" if d.get(k) is None else d.get(k) for k in CSV_HEADER])
    return buf.getvalue()


def check_budget(t_hi: int) -> int:
    """Upper bound on the number of checks :func:`bisect_min_time` runs."""
    return math.ceil(math.log2(max(t_hi, 1))) + 2
