"""Platform constants, tuning parameters and launch-shape arithmetic.

The launch shape follows the integer arithmetic of the parameter-selection
process verbatim, including its two-step device count, with one deviation:
a workgroup count of zero (``wg * ts > size``) is clamped to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

KERNELS = ("abstract", "minimum")


class ConfigError(ValueError):
    """Invalid platform, problem or tuning-parameter configuration."""


def is_pow2(x: int) -> bool:
    return isinstance(x, int) and x > 0 and (x & (x - 1)) == 0


def log2_exact(x: int) -> int:
    if not is_pow2(x):
        raise ConfigError(f"{x} is not a power of two")
    return x.bit_length() - 1


@dataclass(frozen=True)
class PlatformConfig:
    nd: int = 1
    nu: int = 1
    np: int = 4
    gmt: int = 4  # ticks per global-memory op, local ops cost 1

    def __post_init__(self):
        for name in ("nd", "nu", "np", "gmt"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"platform.{name} must be an integer >= 1, got {v!r}")
        if not is_pow2(self.np):
            raise ConfigError(f"platform.np must be a power of two, got {self.np}")

    def to_dict(self) -> dict:
        return {"nd": self.nd, "nu": self.nu, "np": self.np, "gmt": self.gmt}


@dataclass(frozen=True)
class ProblemSpec:
    size: int
    kernel: str = "abstract"
    input: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if not is_pow2(self.size) or self.size < 4:
            raise ConfigError(f"problem.size must be a power of two >= 4, got {self.size!r}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}, expected one of {KERNELS}")
        if self.kernel == "minimum":
            if self.input is None:
                # default data: glob[i] = size - i
                object.__setattr__(self, "input", default_input(self.size))
            else:
                object.__setattr__(self, "input", tuple(int(v) for v in self.input))
            if len(self.input) != self.size:
                raise ConfigError(
                    f"input has {len(self.input)} elements, expected size={self.size}")
        elif self.input is not None:
            raise ConfigError("an input array is only accepted for the minimum kernel")

    @property
    def n(self) -> int:
        return log2_exact(self.size)

    def to_dict(self) -> dict:
        d = {"size": self.size, "kernel": self.kernel}
        if self.input is not None:
            d["input"] = list(self.input)
        return d


def default_input(size: int) -> Tuple[int, ...]:
    return tuple(size - i for i in range(size))


@dataclass(frozen=True, order=True)
class TuningParams:
    wg: int
    ts: int

    def validate(self, size: int) -> None:
        for name in ("wg", "ts"):
            v = getattr(self, name)
            if not is_pow2(v) or not 2 <= v <= size // 2:
                raise ConfigError(
                    f"{name}={v!r} must be a power of two in [2, {size // 2}] for size={size}")


@dataclass(frozen=True)
class LaunchPlan:
    wgs: int
    nwd: int
    nwu: int
    nwe: int
    all_nwe: int

    @property
    def units(self) -> int:
        return self.nwd * self.nwu


def derive_launch(platform: PlatformConfig, size: int, params: TuningParams) -> LaunchPlan:
    params.validate(size)
    nd, nu, np_ = platform.nd, platform.nu, platform.np
    wgs = size // (params.wg * params.ts)
    wgs = max(wgs, 1)
    nwd = wgs // nu if wgs <= nu * nd else nd
    nwd = nwd if wgs // nu else 1
    nwu = wgs if wgs <= nu else nu
    nwe = params.wg if params.wg <= np_ else np_
    return LaunchPlan(wgs=wgs, nwd=nwd, nwu=nwu, nwe=nwe, all_nwe=nwe * nwu * nwd)


def enumerate_configs(size: int) -> List[TuningParams]:
    """All (wg, ts) pairs of powers of two in ``[2, size/2]``, lexicographic."""
    if not is_pow2(size):
        raise ConfigError(f"size must be a power of two, got {size!r}")
    n = log2_exact(size)
    if n < 2:
        raise ConfigError(f"size must be at least 4, got {size}")
    return [TuningParams(1 << i, 1 << j) for i in range(1, n) for j in range(1, n)]


def feasible(problem: ProblemSpec, params: TuningParams) -> bool:
    """Whether the kernel's memory accesses stay in bounds for ``params``.

    The abstract kernel touches no memory so every enumerated config is
    feasible. The minimum kernel reads ``glob[glob_id * ts + i]``, which runs
    past the array once ``wg * ts > size``.
    """
    if problem.kernel == "abstract":
        return True
    return params.wg * params.ts <= problem.size


def feasible_configs(problem: ProblemSpec,
                     configs: Optional[Sequence[TuningParams]] = None) -> List[TuningParams]:
    if configs is None:
        configs = enumerate_configs(problem.size)
    return [c for c in configs if feasible(problem, c)]
