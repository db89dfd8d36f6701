"""Cost-and-effect programs for the two modelled kernels.

A processing element executes one program per assigned work item. Time is
only ever charged through ``Busy`` instructions; ``Effect`` instructions
update memory and take zero ticks. The abstract tiled kernel has no memory
effects at all, while the minimum-reduction kernel carries the loads,
local reduce and the final write to ``glob[0]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

from .model import ConfigError, PlatformConfig, ProblemSpec, TuningParams, derive_launch

# Local-memory sentinel, every input value must be <= MAX.
MAX = 2**63 - 1

GLOBAL = "global"
LOCAL = "local"


@dataclass(frozen=True)
class Busy:
    ticks: int
    tag: str = LOCAL

    def __post_init__(self):
        if self.ticks < 1:
            raise ValueError("Busy needs at least one tick")


@dataclass(frozen=True)
class LocalBarrier:
    pass


@dataclass(frozen=True)
class Effect:
    """Zero-time memory update.

    op is one of
      ``map``     loc[myloc] = min(loc[myloc], glob[arg + shift])
      ``reduce``  loc[myloc] = min(loc[myloc], loc[myloc + arg])
      ``write``   glob[0] = min(glob[0], loc[myloc])
    """
    op: str
    arg: int = 0


@dataclass(frozen=True)
class ActivationEnd:
    pass


Instr = Union[Busy, LocalBarrier, Effect, ActivationEnd]

BARRIER = LocalBarrier()
END = ActivationEnd()


@dataclass(frozen=True)
class KernelProgram:
    per_activation: Tuple[Instr, ...]
    epilogue: Tuple[Instr, ...] = ()
    kind: str = "abstract"

    def busy_total(self, which: str = "per_activation") -> int:
        return sum(i.ticks for i in getattr(self, which) if isinstance(i, Busy))

    def barrier_count(self) -> int:
        return sum(isinstance(i, LocalBarrier) for i in self.per_activation)

    def barriers_before(self) -> Tuple[int, ...]:
        """``out[k]`` = number of LocalBarriers strictly before position k."""
        out, seen = [], 0
        for ins in self.per_activation:
            out.append(seen)
            seen += isinstance(ins, LocalBarrier)
        out.append(seen)
        return tuple(out)


def build_abstract_kernel(size: int, params: TuningParams,
                          platform: PlatformConfig) -> KernelProgram:
    params.validate(size)
    gmt, ts = platform.gmt, params.ts
    tile = (Busy(gmt * ts, GLOBAL), BARRIER, Busy(ts, LOCAL), BARRIER)
    # both branches of the local-memory conditional cost ts ticks, so the
    # branch is elided and barrier balance holds trivially
    body = tile * (size // ts) + (Busy(gmt, GLOBAL), END)
    return KernelProgram(per_activation=body, epilogue=(), kind="abstract")


def glob_index(nwg: int, me: int, it: int, wg: int, np_: int, ts: int) -> Tuple[int, int]:
    """Return ``(glob_id, shift)`` for one work item of the minimum kernel."""
    if wg > np_:
        glob_id = nwg * wg + me + it * np_
    else:
        glob_id = nwg * wg + me
    return glob_id, glob_id * ts


def build_minimum_kernel(size: int, params: TuningParams, platform: PlatformConfig,
                         input: Sequence[int]) -> KernelProgram:
    params.validate(size)
    if len(input) != size:
        raise ConfigError(f"input has {len(input)} elements, expected {size}")
    if any(v > MAX for v in input):
        raise ConfigError("input values must not exceed the local-memory sentinel")
    plan = derive_launch(platform, size, params)
    rounds = max(1, params.wg // platform.np)
    # highest item touched: last workgroup, last local id, last round
    _, last_shift = glob_index(plan.wgs - 1, plan.nwe - 1, rounds - 1,
                                     params.wg, platform.np, params.ts)
    if last_shift + params.ts - 1 >= size:
        raise ConfigError(
            f"wg={params.wg}, ts={params.ts} reads glob[{last_shift + params.ts - 1}] "
            f"past size={size}")
    gmt = platform.gmt
    body = []
    for i in range(params.ts):
        body += [Effect("map", i), Busy(gmt, GLOBAL)]
    epi = []
    for i in range(1, plan.nwe):
        epi += [Effect("reduce", i), Busy(1, LOCAL)]
    epi += [Effect("write"), Busy(gmt, GLOBAL), END]
    body.append(END)
    return KernelProgram(per_activation=tuple(body), epilogue=tuple(epi), kind="minimum")


def build_kernel(problem: ProblemSpec, params: TuningParams,
                 platform: PlatformConfig) -> KernelProgram:
    if problem.kernel == "abstract":
        return build_abstract_kernel(problem.size, params, platform)
    return build_minimum_kernel(problem.size, params, platform, problem.input)


def expected_busy_total(kind: str, size: int, ts: int, gmt: int,
                        nwe: Optional[int] = None) -> Tuple[int, int]:
    """Closed-form (per_activation, epilogue) tick totals, used as a check."""
    if kind == "abstract":
        return (size // ts) * (gmt * ts + ts) + gmt, 0
    if nwe is None:
        raise ValueError("nwe is required for the minimum kernel")
    return ts * gmt, (nwe - 1) + gmt
