"""State-space exploration and property checking.

Both temporal properties are safety properties on this model, so they are
checked as predicates on terminal states:

* ``OverTime(T)``  G(fin -> time > T) is violated by a terminal state with time <= T
* ``NonTermination``  G(!fin) is violated by every terminal state

The tuning-parameter choice is the root branching of the search, so one
check covers every configuration. Time never decreases along a path, so
for ``OverTime(T)`` any state with ``time > T`` is pruned.
"""

from __future__ import annotations

import logging
import random
import threading
import time as _time
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Union

from .machine import (ContractError, DeadlockError, Machine, MachineState, Transition,
                      fingerprint)
from .model import PlatformConfig, ProblemSpec, TuningParams, feasible_configs
from .trace import Trace, TraceError, parse

log = logging.getLogger(__name__)

EXACT = "exact"
BITSTATE = "bitstate"


@dataclass(frozen=True)
class OverTime:
    T: int

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("T must be >= 0")

    def violated_by(self, s: MachineState) -> bool:
        return s.time <= self.T

    def __str__(self):
        return f"G(FIN -> time > {self.T})"


@dataclass(frozen=True)
class NonTermination:
    def violated_by(self, s: MachineState) -> bool:
        return True

    def __str__(self):
        return "G(!FIN)"


Property = Union[OverTime, NonTermination]


@dataclass(frozen=True)
class ExploreLimits:
    max_depth: int = 10_000_000
    max_states: int = 50_000_000
    wall_budget: Optional[float] = None  # seconds, None = unlimited
    mode: str = EXACT
    bitstate_log2: int = 24  # size of the bitstate table in bits

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.mode not in (EXACT, BITSTATE):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class Stats:
    states_visited: int = 0
    max_depth_reached: int = 0
    wall_seconds: float = 0.0
    limit_hit: Optional[str] = None

    def to_dict(self) -> dict:
        return {"states_visited": self.states_visited,
                "max_depth_reached": self.max_depth_reached,
                "wall_seconds": round(self.wall_seconds, 3)}


@dataclass
class Verdict:
    holds: bool
    exhaustive: bool
    trace: Optional[Trace] = None
    stats: Stats = field(default_factory=Stats)

    @property
    def violated(self) -> bool:
        return not self.holds

    def summary(self, trace_path: Optional[str] = None) -> dict:
        d = {"verdict": "holds" if self.holds else "violated",
             "exhaustive": self.exhaustive, **self.stats.to_dict()}
        if trace_path is not None:
            d["trace_path"] = trace_path
        return d

    def __str__(self):
        if self.holds:
            return "HOLDS (exhaustive)" if self.exhaustive else "HOLDS (not exhaustive)"
        t = self.trace
        return f"VIOLATED time={t.final_time} wg={t.params.wg} ts={t.params.ts}"


class BitState:
    """Bit table indexed by two slices of a 64-bit state fingerprint."""

    def __init__(self, log2_bits: int = 24):
        self.mask = (1 << log2_bits) - 1
        self.bits = bytearray((1 << log2_bits) // 8 or 1)
        self.count = 0

    def add(self, s: MachineState) -> bool:
        """Mark ``s`` visited; False if both of its bits were already set."""
        fp = fingerprint(s)
        new = False
        for h in (fp & self.mask, (fp >> 32) & self.mask):
            byte, bit = h >> 3, 1 << (h & 7)
            if not self.bits[byte] & bit:
                self.bits[byte] |= bit
                new = True
        self.count += new
        return new

    def __len__(self):
        return self.count


class ExactSet:
    def __init__(self):
        self.seen: Set[MachineState] = set()

    def add(self, s: MachineState) -> bool:
        if s in self.seen:
            return False
        self.seen.add(s)
        return True

    def __len__(self):
        return len(self.seen)


class _Stop(Exception):
    pass


def _search(platform: PlatformConfig, problem: ProblemSpec, prop: Property,
            limits: ExploreLimits, configs: Optional[Sequence[TuningParams]] = None,
            first_only: bool = True, rng: Optional[random.Random] = None,
            stop: Optional[threading.Event] = None,
            on_state: Optional[Callable[[Machine, MachineState], None]] = None,
            ) -> tuple:
    """Depth-first search over every configuration and interleaving.

    Returns ``(traces, stats)``; ``stats.limit_hit`` names the first limit
    that cut the search short. By default the root configs are tried from
    the largest ``(wg, ts)`` down, so the first counterexample found comes
    from the preferred config among those that violate. With ``rng`` the
    root configs and every successor list are shuffled.
    """
    if configs is None:
        configs = sorted(feasible_configs(problem), reverse=True)
    configs = feasible_configs(problem, configs)
    if rng is not None:
        configs = list(configs)
        rng.shuffle(configs)
    visited = BitState(limits.bitstate_log2) if limits.mode == BITSTATE else ExactSet()
    prune = prop.T if isinstance(prop, OverTime) else None
    stats = Stats()
    traces: List[Trace] = []
    t0 = _time.perf_counter()
    deadline = None if limits.wall_budget is None else t0 + limits.wall_budget
    counter = 0

    def successors(m, s):
        succ = list(m.successors(s))
        if rng is not None:
            rng.shuffle(succ)
        return succ

    try:
        for cfg in configs:
            m = Machine(platform, problem, cfg)
            s0 = m.initial_state()
            if not visited.add(s0):
                continue
            if on_state:
                on_state(m, s0)
            stack = [iter(successors(m, s0))]
            path: List[Transition] = []
            while stack:
                nxt = next(stack[-1], None)
                if nxt is None:
                    stack.pop()
                    if path:
                        path.pop()
                    continue
                t, s = nxt
                if prune is not None and s.time > prune:
                    continue
                if len(path) + 1 > limits.max_depth:
                    stats.limit_hit = stats.limit_hit or "max_depth"
                    continue
                if len(visited) >= limits.max_states:
                    stats.limit_hit = "max_states"
                    raise _Stop
                if not visited.add(s):
                    continue
                counter += 1
                if counter & 1023 == 0:
                    if deadline is not None and _time.perf_counter() > deadline:
                        stats.limit_hit = "wall_budget"
                        raise _Stop
                    if stop is not None and stop.is_set():
                        stats.limit_hit = "stopped"
                        raise _Stop
                if on_state:
                    on_state(m, s)
                path.append(t)
                stats.max_depth_reached = max(stats.max_depth_reached, len(path))
                succ = successors(m, s)
                if succ:
                    stack.append(iter(succ))
                    continue
                if not s.fin:
                    raise DeadlockError(
                        f"deadlock in wg={cfg.wg} ts={cfg.ts} at time {s.time}", s)
                if prop.violated_by(s):
                    traces.append(Trace(transitions=tuple(path), final_time=s.time, params=cfg,
                                        result=m.result(s),
                                        found_at=_time.perf_counter() - t0))
                    if first_only:
                        raise _Stop
                path.pop()
    except _Stop:
        pass
    stats.states_visited = len(visited)
    stats.wall_seconds = _time.perf_counter() - t0
    return traces, stats


def check_overtime(platform: PlatformConfig, problem: ProblemSpec, T: int,
                   limits: ExploreLimits = ExploreLimits(),
                   configs: Optional[Sequence[TuningParams]] = None) -> Verdict:
    """Check G(FIN -> time > T) over all configs (or just ``configs``, in order).

    Configs are tried largest first unless ``configs`` fixes the order.
    """
    traces, stats = _search(platform, problem, OverTime(T), limits, configs=configs)
    if traces:
        return Verdict(holds=False, exhaustive=False, trace=traces[0], stats=stats)
    exhaustive = stats.limit_hit is None and limits.mode == EXACT
    return Verdict(holds=True, exhaustive=exhaustive, stats=stats)


def check_nontermination(platform: PlatformConfig, problem: ProblemSpec,
                         limits: ExploreLimits = ExploreLimits()) -> List[Trace]:
    """Collect terminating runs (counterexamples to G(!FIN)) up to ``limits``."""
    traces, stats = _search(platform, problem, NonTermination(), limits, first_only=False)
    if not traces:
        log.info("no trails found (%s)", stats.limit_hit or "search complete")
    return traces


def swarm_worker(platform: PlatformConfig, problem: ProblemSpec, prop: Property, seed: int,
                 limits: ExploreLimits, stop: Optional[threading.Event] = None) -> List[Trace]:
    """Randomised bitstate DFS; returns every violating trace it meets."""
    if limits.mode != BITSTATE:
        raise ContractError("swarm workers run in bitstate mode")
    traces, _ = _search(platform, problem, prop, limits, first_only=False,
                        rng=random.Random(seed), stop=stop)
    return traces


class TraceSink:
    """Append-only collection of swarm results with per-trace metadata."""

    def __init__(self):
        self.traces: List[Trace] = []
        self.meta: List[dict] = []

    def append(self, trace: Trace, worker: int) -> None:
        self.traces.append(trace)
        self.meta.append({**trace.summary(), "worker": worker})

    def __len__(self):
        return len(self.traces)


def _worker_entry(args):
    return swarm_worker(*args)


def run_swarm(platform: PlatformConfig, problem: ProblemSpec, prop: Property,
              seeds: Sequence[int], limits: ExploreLimits,
              sink: Optional[TraceSink] = None) -> TraceSink:
    """Run one worker per seed, in parallel when there is more than one.

    Results are appended to the sink in seed order so the sink contents do
    not depend on which worker finishes first.
    """
    sink = sink if sink is not None else TraceSink()
    if len(seeds) == 1:
        results = [swarm_worker(platform, problem, prop, seeds[0], limits, threading.Event())]
    else:
        import multiprocessing as mp
        with mp.Manager() as mgr:
            stop = mgr.Event()
            with ProcessPoolExecutor(max_workers=len(seeds)) as pool:
                futs = [pool.submit(_worker_entry, (platform, problem, prop, seed, limits, stop))
                        for seed in seeds]
                results = []
                for f in futs:
                    timeout = None if limits.wall_budget is None else limits.wall_budget + 30
                    try:
                        results.append(f.result(timeout=timeout))
                    except FutureTimeout:
                        stop.set()
                        results.append(f.result())
    for w, traces in enumerate(results):
        for t in traces:
            sink.append(t, w)
    return sink


def replay(platform: PlatformConfig, problem: ProblemSpec, trace: Trace) -> MachineState:
    """Re-apply a trace from the initial state and check its recorded outcome."""
    m = Machine(platform, problem, trace.params)
    try:
        s, _ = m.walk(trace.transitions)
    except ContractError as e:
        raise TraceError(f"corrupt trace: {e}") from e
    if not m.is_terminal(s):
        raise TraceError("corrupt trace: replay does not end in a terminal state")
    if s.time != trace.final_time:
        raise TraceError(f"corrupt trace: replay time {s.time} != recorded {trace.final_time}")
    if s.params != trace.params:
        raise TraceError("corrupt trace: parameters differ")
    return s


def load_trace(text: str) -> Trace:
    """Read a trace file; replay it with :func:`replay` to validate it."""
    rows, final = parse(text)
    return Trace(transitions=tuple(Transition(pid, label, "") for pid, _, label, _ in rows),
                 final_time=final["time"], params=TuningParams(final["wg"], final["ts"]),
                 result=final.get("result"))


@dataclass
class Exploration:
    """Everything an exhaustive exploration of one config observed."""
    params: TuningParams
    terminal_times: Set[int]
    states: int
    invariant_violations: Dict[str, int]
    terminal_results: Set[Optional[int]]
    terminal_states: int


def explore_config(platform: PlatformConfig, problem: ProblemSpec, params: TuningParams,
                   limits: ExploreLimits = ExploreLimits()) -> Exploration:
    """Exhaustively explore one config, checking state invariants everywhere.

    Raises DeadlockError on a non-terminal state without successors.
    """
    terminal_times: Set[int] = set()
    results: Set[Optional[int]] = set()
    bad: Dict[str, int] = {}
    terminals = [0]

    def on_state(m: Machine, s: MachineState):
        for name in m.invariant_violations(s):
            bad[name] = bad.get(name, 0) + 1
        if s.fin and m.is_terminal(s):
            terminal_times.add(s.time)
            results.add(m.result(s))
            terminals[0] += 1

    _, stats = _search(platform, problem, NonTermination(), limits, configs=[params],
                       first_only=False, on_state=on_state)
    if stats.limit_hit:
        raise RuntimeError(f"exploration of {params} hit {stats.limit_hit}")
    return Exploration(params, terminal_times, stats.states_visited, bad, results, terminals[0])
