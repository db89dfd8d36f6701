"""Explicit-state transition system for the OpenCL execution model.

Processes and their pids are fixed per configuration::

    0 main   1 host   2 clock   3.. devices   then per unit: unit, barrier, pexes

Channels are zero-capacity rendezvous, so each handshake is a single
transition owned by the receiving (master) side and the channel contents
are implied by the control locations of the two partners. Atomic launch
loops are collapsed into one transition each.

Time only advances through the clock: a busy processing element reports
once per tick, and the clock may tick when every counted element
(``all_nwe``) has reported. Ticking decrements the remaining work of every
reporter.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple

from .kernels import (MAX, ActivationEnd, Busy, Effect, KernelProgram, LocalBarrier,
                      build_kernel, glob_index)
from .model import (LaunchPlan, PlatformConfig, ProblemSpec, TuningParams, derive_launch)
from .trace import Trace, format_lines

TICK = "clock-tick"
HANDSHAKE = "channel-handshake"
LOCAL_STEP = "local-step"

MAIN, HOST, CLOCK = 0, 1, 2


class ContractError(RuntimeError):
    """An operation was called outside its precondition."""


class DeadlockError(RuntimeError):
    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


class Transition(NamedTuple):
    pid: int
    label: str
    kind: str


# per-role process states; pc is always the first field
class MainState(NamedTuple):
    pc: str


class HostState(NamedTuple):
    pc: str  # start | wait | join | end
    stopped: int = 0


class ClockState(NamedTuple):
    pc: str  # run | end


class DeviceState(NamedTuple):
    pc: str  # idle | dispatch | wait | report | stop | end
    wave: int = 0
    busy: int = 0


class UnitState(NamedTuple):
    pc: str  # idle | start | serve | epilogue | epi_wait | report | stop | end
    nwg: int = -1
    finished: int = 0
    counted: int = 0


class BarrierState(NamedTuple):
    pc: str  # wait | end
    arrived: int = 0


class PexState(NamedTuple):
    pc: str  # idle | run | blocked | end
    nwg: int = -1
    iter: int = 0
    cursor: int = 0
    remaining: int = 0
    start_time: int = 0
    cur_time: int = -1  # time of the last report; reported this tick iff == time
    epi: bool = False


@dataclass(frozen=True)
class MachineState:
    processes: tuple
    time: int
    nrp_work: int
    all_nwe: int
    fin: bool
    params: TuningParams
    glob: Optional[Tuple[int, ...]] = None
    loc: Optional[Tuple[int, ...]] = None

    def proc(self, pid: int):
        return self.processes[pid]


class Layout:
    """Static process structure of one configuration."""

    def __init__(self, plan: LaunchPlan):
        self.roles: List[str] = ["main", "host", "clock"]
        self.devices: List[int] = []
        self.units: List[int] = []          # global unit index -> pid
        self.barrier_of: Dict[int, int] = {}  # unit pid -> barrier pid
        self.pexes_of: Dict[int, List[int]] = {}  # unit pid -> pex pids
        self.units_of: Dict[int, List[int]] = {}  # device pid -> unit pids
        self.unit_index: Dict[int, int] = {}
        self.device_index: Dict[int, int] = {}
        self.pex_info: Dict[int, Tuple[int, int]] = {}  # pex pid -> (unit pid, me)
        self.unit_of_barrier: Dict[int, int] = {}
        for d in range(plan.nwd):
            pid = len(self.roles)
            self.roles.append("device")
            self.devices.append(pid)
            self.device_index[pid] = d
            self.units_of[pid] = []
        for d, dpid in enumerate(self.devices):
            for _ in range(plan.nwu):
                upid = len(self.roles)
                self.roles.append("unit")
                self.unit_index[upid] = len(self.units)
                self.units.append(upid)
                self.units_of[dpid].append(upid)
                bpid = len(self.roles)
                self.roles.append("barrier")
                self.barrier_of[upid] = bpid
                self.unit_of_barrier[bpid] = upid
                self.pexes_of[upid] = []
                for me in range(plan.nwe):
                    ppid = len(self.roles)
                    self.roles.append("pex")
                    self.pexes_of[upid].append(ppid)
                    self.pex_info[ppid] = (upid, me)

    def name(self, pid: int) -> str:
        role = self.roles[pid]
        if role == "device":
            return f"d{self.device_index[pid]}"
        if role == "unit":
            return f"u{self.unit_index[pid]}"
        if role == "barrier":
            return f"b{self.unit_index[self.unit_of_barrier[pid]]}"
        if role == "pex":
            upid, me = self.pex_info[pid]
            return f"u{self.unit_index[upid]}p{me}"
        return role


class Machine:
    """Transition relation for one (platform, problem, params) instance."""

    def __init__(self, platform: PlatformConfig, problem: ProblemSpec, params: TuningParams):
        self.platform = platform
        self.problem = problem
        self.params = params
        self.plan = derive_launch(platform, problem.size, params)
        self.program: KernelProgram = build_kernel(problem, params, platform)
        self.layout = Layout(self.plan)
        self.rounds = max(1, params.wg // platform.np)
        self.barriers_per_item = self.program.barrier_count()
        self._passed = self.program.barriers_before()
        self._workers = [p for p, r in enumerate(self.layout.roles)
                         if r in ("device", "unit", "barrier", "pex")]

    # ------------------------------------------------------------------
    def initial_state(self) -> MachineState:
        lay = self.layout
        procs: list = [None] * len(lay.roles)
        procs[MAIN] = MainState("end")
        procs[HOST] = HostState("start")
        procs[CLOCK] = ClockState("run")
        for pid, role in enumerate(lay.roles):
            if role == "device":
                procs[pid] = DeviceState("idle")
            elif role == "unit":
                procs[pid] = UnitState("idle")
            elif role == "barrier":
                procs[pid] = BarrierState("wait")
            elif role == "pex":
                procs[pid] = PexState("idle")
        glob = loc = None
        if self.problem.kernel == "minimum":
            glob = tuple(self.problem.input)
            loc = (MAX,) * (len(lay.units) * self.platform.np)
        return MachineState(processes=tuple(procs), time=0, nrp_work=0,
                            all_nwe=self.plan.all_nwe, fin=False, params=self.params,
                            glob=glob, loc=loc)

    # ------------------------------------------------------------------
    def _nwg(self, device_pid: int, wave: int, k: int) -> int:
        plan = self.plan
        d = self.layout.device_index[device_pid]
        return wave * plan.nwd * plan.nwu + d * plan.nwu + k

    def _units_with_work(self, device_pid: int, wave: int) -> int:
        return sum(self._nwg(device_pid, wave, k) < self.plan.wgs
                   for k in range(self.plan.nwu))

    def _prog(self, p: PexState):
        return self.program.epilogue if p.epi else self.program.per_activation

    def successors(self, s: MachineState) -> Iterator[Tuple[Transition, MachineState]]:
        """Every enabled transition with its successor, in ascending pid order."""
        lay = self.layout
        procs = s.processes
        # host
        h = procs[HOST]
        if h.pc == "start":
            ps = list(procs)
            for dpid in lay.devices:
                ps[dpid] = DeviceState("dispatch", wave=0)
            ps[HOST] = HostState("wait")
            yield Transition(HOST, "go devices", HANDSHAKE), replace(s, processes=tuple(ps))
        elif h.pc == "wait":
            for dpid in lay.devices:
                d = procs[dpid]
                if d.pc != "report":
                    continue
                ps = list(procs)
                more = self._units_with_work(dpid, d.wave + 1)
                name = lay.name(dpid)
                if more:
                    ps[dpid] = DeviceState("dispatch", wave=d.wave + 1)
                    yield (Transition(HOST, f"done {name} go", HANDSHAKE),
                           replace(s, processes=tuple(ps),
                                   all_nwe=s.all_nwe + more * self.plan.nwe))
                else:
                    ps[dpid] = DeviceState("stop", wave=d.wave)
                    stopped = h.stopped + 1
                    ps[HOST] = HostState("join" if stopped == len(lay.devices) else "wait",
                                         stopped)
                    yield Transition(HOST, f"done {name} stop", HANDSHAKE), \
                        replace(s, processes=tuple(ps))
        elif h.pc == "join":
            if all(procs[p].pc == "end" for p in self._workers):
                ps = list(procs)
                ps[HOST] = HostState("end", h.stopped)
                yield Transition(HOST, "FIN = true", LOCAL_STEP), \
                    replace(s, processes=tuple(ps), fin=True)
        # clock
        c = procs[CLOCK]
        if c.pc == "run":
            if s.fin:
                ps = list(procs)
                ps[CLOCK] = ClockState("end")
                yield Transition(CLOCK, "halt", LOCAL_STEP), replace(s, processes=tuple(ps))
            elif s.all_nwe != 0 and s.nrp_work == s.all_nwe:
                yield Transition(CLOCK, "tick", TICK), self._tick(s)
        # workers
        for pid in range(3, len(procs)):
            role = lay.roles[pid]
            if role == "device":
                yield from self._device(s, pid)
            elif role == "unit":
                yield from self._unit(s, pid)
            elif role == "barrier":
                yield from self._barrier(s, pid)
            else:
                yield from self._pex(s, pid)

    def _tick(self, s: MachineState) -> MachineState:
        ps = list(s.processes)
        for pid in range(3, len(ps)):
            p = ps[pid]
            if type(p) is PexState and p.pc == "run" and p.remaining > 0 and p.cur_time == s.time:
                ps[pid] = p._replace(remaining=p.remaining - 1)
        return replace(s, processes=tuple(ps), time=s.time + 1, nrp_work=0)

    def _device(self, s, pid):
        d = s.processes[pid]
        lay = self.layout
        if d.pc == "dispatch":
            ps = list(s.processes)
            count = 0
            for k, upid in enumerate(lay.units_of[pid]):
                nwg = self._nwg(pid, d.wave, k)
                if nwg < self.plan.wgs:
                    ps[upid] = UnitState("start", nwg=nwg)
                    count += 1
            ps[pid] = d._replace(pc="wait", busy=count)
            yield Transition(pid, "go units", HANDSHAKE), replace(s, processes=tuple(ps))
        elif d.pc == "wait":
            for upid in lay.units_of[pid]:
                u = s.processes[upid]
                if u.pc != "report":
                    continue
                ps = list(s.processes)
                ps[upid] = UnitState("idle")
                busy = d.busy - 1
                ps[pid] = d._replace(pc="report" if busy == 0 else "wait", busy=busy)
                yield (Transition(pid, f"done {lay.name(upid)}", HANDSHAKE),
                       replace(s, processes=tuple(ps), all_nwe=s.all_nwe - u.counted))
        elif d.pc == "stop":
            ps = list(s.processes)
            for upid in lay.units_of[pid]:
                ps[upid] = UnitState("stop")
            ps[pid] = d._replace(pc="end")
            yield Transition(pid, "stop units", HANDSHAKE), replace(s, processes=tuple(ps))

    def _unit(self, s, pid):
        u = s.processes[pid]
        lay = self.layout
        pexes = lay.pexes_of[pid]
        if u.pc == "start":
            ps = list(s.processes)
            for ppid in pexes:
                ps[ppid] = PexState("run", nwg=u.nwg, iter=0, cursor=0, start_time=s.time)
            ps[pid] = UnitState("serve", nwg=u.nwg, finished=0, counted=len(pexes))
            yield Transition(pid, f"go pexes nwg={u.nwg}", HANDSHAKE), \
                replace(s, processes=tuple(ps))
        elif u.pc in ("serve", "epi_wait"):
            for ppid in pexes:
                p = s.processes[ppid]
                if p.pc != "run" or p.remaining or type(self._prog(p)[p.cursor]) is not ActivationEnd:
                    continue
                ps = list(s.processes)
                name = lay.name(ppid)
                if u.pc == "epi_wait":
                    ps[ppid] = PexState("idle", nwg=p.nwg, iter=p.iter)
                    ps[pid] = u._replace(pc="report")
                    yield Transition(pid, f"done {name} reduced", HANDSHAKE), \
                        replace(s, processes=tuple(ps))
                elif p.iter + 1 < self.rounds:
                    ps[ppid] = PexState("run", nwg=p.nwg, iter=p.iter + 1, cursor=0,
                                        start_time=s.time, cur_time=p.cur_time)
                    yield Transition(pid, f"done {name} go iter={p.iter + 1}", HANDSHAKE), \
                        replace(s, processes=tuple(ps))
                else:
                    ps[ppid] = PexState("idle", nwg=p.nwg, iter=p.iter)
                    finished = u.finished + 1
                    if finished < len(pexes):
                        nxt = "serve"
                    elif self.program.epilogue:
                        nxt = "epilogue"
                    else:
                        nxt = "report"
                    ps[pid] = u._replace(pc=nxt, finished=finished)
                    yield Transition(pid, f"done {name}", HANDSHAKE), \
                        replace(s, processes=tuple(ps))
        elif u.pc == "epilogue":
            # group-end barrier has passed: every item of the group finished
            ps = list(s.processes)
            p0 = ps[pexes[0]]
            ps[pexes[0]] = PexState("run", nwg=p0.nwg, iter=p0.iter, cursor=0,
                                    start_time=s.time, epi=True)
            ps[pid] = u._replace(pc="epi_wait", counted=1)
            yield (Transition(pid, "reduce p0", HANDSHAKE),
                   replace(s, processes=tuple(ps), all_nwe=s.all_nwe - (u.counted - 1)))
        elif u.pc == "stop":
            ps = list(s.processes)
            ps[lay.barrier_of[pid]] = BarrierState("end")
            for ppid in pexes:
                ps[ppid] = PexState("end")
            ps[pid] = UnitState("end")
            yield Transition(pid, "stop", HANDSHAKE), replace(s, processes=tuple(ps))

    def _barrier(self, s, pid):
        b = s.processes[pid]
        upid = self.layout.unit_of_barrier[pid]
        pexes = self.layout.pexes_of[upid]
        if b.pc == "wait" and b.arrived == len(pexes):
            ps = list(s.processes)
            for ppid in pexes:
                p = ps[ppid]
                ps[ppid] = p._replace(pc="run", cursor=p.cursor + 1)
            ps[pid] = BarrierState("wait", 0)
            yield Transition(pid, "release", HANDSHAKE), replace(s, processes=tuple(ps))

    def _pex(self, s, pid):
        p = s.processes[pid]
        if p.pc != "run":
            return
        if p.remaining:
            if p.cur_time != s.time:
                ps = list(s.processes)
                ps[pid] = p._replace(cur_time=s.time)
                yield Transition(pid, "report", LOCAL_STEP), \
                    replace(s, processes=tuple(ps), nrp_work=s.nrp_work + 1)
            return
        prog = self._prog(p)
        ins = prog[p.cursor]
        kind = type(ins)
        if kind is LocalBarrier:
            ps = list(s.processes)
            ps[pid] = p._replace(pc="blocked")
            bpid = self.layout.barrier_of[self.layout.pex_info[pid][0]]
            b = ps[bpid]
            ps[bpid] = b._replace(arrived=b.arrived + 1)
            yield Transition(pid, "arrive", HANDSHAKE), replace(s, processes=tuple(ps))
        elif kind is Effect or kind is Busy:
            cursor = p.cursor
            glob, loc = s.glob, s.loc
            labels = []
            while type(prog[cursor]) is Effect:
                glob, loc = self._effect(pid, p, prog[cursor], glob, loc)
                labels.append(prog[cursor].op)
                cursor += 1
            ins = prog[cursor]
            ps = list(s.processes)
            if type(ins) is Busy:
                ps[pid] = p._replace(cursor=cursor + 1, remaining=ins.ticks, start_time=s.time)
                labels.append(f"busy {ins.ticks}")
            else:
                ps[pid] = p._replace(cursor=cursor)
            yield Transition(pid, "step " + "+".join(labels), LOCAL_STEP), \
                replace(s, processes=tuple(ps), glob=glob, loc=loc)
        # ActivationEnd: the unit owns the done handshake

    def _effect(self, pid, p: PexState, eff: Effect, glob, loc):
        upid, me = self.layout.pex_info[pid]
        np_ = self.platform.np
        myloc = me + self.layout.unit_index[upid] * np_
        loc = list(loc)
        if eff.op == "map":
            _, shift = glob_index(p.nwg, me, p.iter, self.params.wg, np_, self.params.ts)
            loc[myloc] = min(loc[myloc], glob[eff.arg + shift])
        elif eff.op == "reduce":
            loc[myloc] = min(loc[myloc], loc[myloc + eff.arg])
        elif eff.op == "write":
            glob = list(glob)
            glob[0] = min(glob[0], loc[myloc])
            glob = tuple(glob)
        else:
            raise ValueError(f"unknown effect {eff.op!r}")
        return glob, tuple(loc)

    # ------------------------------------------------------------------
    def enabled(self, s: MachineState) -> List[Transition]:
        return [t for t, _ in self.successors(s)]

    def apply(self, s: MachineState, t: Transition) -> MachineState:
        # kind is implied by (pid, label); parsed traces carry no kind
        for t2, nxt in self.successors(s):
            if t2.pid == t.pid and t2.label == t.label:
                return nxt
        raise ContractError(f"transition {t.pid} {t.label!r} is not enabled")

    def walk(self, transitions) -> Tuple[MachineState, List[Tuple[int, str, str, int]]]:
        """Apply ``transitions`` from the initial state.

        Returns the final state and ``(pid, role, label, time)`` rows.
        """
        s = self.initial_state()
        rows = []
        for t in transitions:
            s = self.apply(s, t)
            rows.append((t.pid, self.layout.roles[t.pid], t.label, s.time))
        return s, rows

    def is_terminal(self, s: MachineState) -> bool:
        return s.fin and next(self.successors(s), None) is None

    def final_time(self, s: MachineState) -> int:
        if not self.is_terminal(s):
            raise ContractError("final_time is only defined on terminal states")
        return s.time

    def result(self, s: MachineState) -> Optional[int]:
        return s.glob[0] if s.glob is not None else None

    def invariant_violations(self, s: MachineState) -> List[str]:
        """Names of the state invariants that ``s`` breaks (empty if none)."""
        bad = []
        if not 0 <= s.nrp_work <= s.all_nwe:
            bad.append("tick-gating")
        if s.fin and any(s.processes[p].pc != "end" for p in self._workers):
            bad.append("fin-before-termination")
        B = self.barriers_per_item
        if B:
            for upid, pexes in self.layout.pexes_of.items():
                u = s.processes[upid]
                if u.pc not in ("serve",):
                    continue
                passed, arrived = [], []
                for ppid in pexes:
                    p = s.processes[ppid]
                    if p.pc == "idle":
                        n = self.rounds * B
                        passed.append(n)
                        arrived.append(n)
                    else:
                        n = p.iter * B + self._passed[p.cursor]
                        passed.append(n)
                        arrived.append(n + (p.pc == "blocked"))
                if max(passed) > min(arrived):
                    bad.append("barrier-safety")
        return bad


# ----------------------------------------------------------------------
# module-level API

def initial_state(platform: PlatformConfig, problem: ProblemSpec,
                  params: TuningParams) -> MachineState:
    return Machine(platform, problem, params).initial_state()


def canonical_bytes(s: MachineState) -> bytes:
    procs = tuple(tuple(p) for p in s.processes)
    return repr((s.params.wg, s.params.ts, s.time, s.nrp_work, s.all_nwe, s.fin,
                 procs, s.glob, s.loc)).encode()


def fingerprint(s: MachineState) -> int:
    return int.from_bytes(hashlib.blake2b(canonical_bytes(s), digest_size=8).digest(), "little")


def format_trace(platform: PlatformConfig, problem: ProblemSpec, trace: Trace) -> str:
    _, rows = Machine(platform, problem, trace.params).walk(trace.transitions)
    return format_lines(rows, trace)


@dataclass
class RunResult:
    time: int
    result: Optional[int]
    steps: int
    trace: Trace
    state: MachineState


def deterministic_run(platform: PlatformConfig, problem: ProblemSpec, params: TuningParams,
                      policy: str = "round-robin", seed: Optional[int] = None,
                      max_steps: int = 10_000_000) -> RunResult:
    """Simulate one schedule to termination.

    ``round-robin`` picks the first enabled transition of the next pid after
    the one that moved last; ``seeded-random`` picks uniformly with
    ``random.Random(seed)``.
    """
    if policy not in ("round-robin", "seeded-random"):
        raise ValueError(f"unknown policy {policy!r}")
    m = Machine(platform, problem, params)
    rng = random.Random(seed)
    s = m.initial_state()
    path: List[Transition] = []
    last = -1
    for _ in range(max_steps):
        succ = list(m.successors(s))
        if not succ:
            break
        if policy == "round-robin":
            later = [ts for ts in succ if ts[0].pid > last]
            t, s = later[0] if later else succ[0]
            last = t.pid
        else:
            t, s = rng.choice(succ)
        path.append(t)
    else:
        raise DeadlockError(f"no termination within {max_steps} steps", s)
    if not s.fin:
        raise DeadlockError(f"deadlock at time {s.time} after {len(path)} transitions", s)
    trace = Trace(transitions=tuple(path), final_time=s.time, params=params,
                  result=m.result(s))
    return RunResult(time=s.time, result=m.result(s), steps=len(path), trace=trace, state=s)
