"""Run configuration: JSON config files merged with command-line overrides.

Config file schema::

    {"platform": {"nd": 1, "nu": 1, "np": 4, "gmt": 4},
     "problem": {"size": 8, "kernel": "abstract", "input_path": "data.txt"}}

``input_path`` is resolved relative to the config file and holds one decimal
integer per line.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .explorer import ExploreLimits
from .model import ConfigError, PlatformConfig, ProblemSpec


def read_input(path) -> Tuple[int, ...]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(int(line, 10))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: not a decimal integer: {line!r}") from None
    return tuple(values)


def load_config(path) -> dict:
    """Parse a config file into plain ``platform``/``problem`` dicts."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(raw) - {"platform", "problem"}
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    platform = dict(raw.get("platform", {}))
    problem = dict(raw.get("problem", {}))
    bad = set(platform) - {"nd", "nu", "np", "gmt"}
    bad |= set(problem) - {"size", "kernel", "input_path"}
    if bad:
        raise ConfigError(f"{path}: unknown keys {sorted(bad)}")
    if "input_path" in problem:
        problem["input_path"] = str(path.parent / problem["input_path"])
    return {"platform": platform, "problem": problem}


@dataclass
class RunConfig:
    platform: PlatformConfig = field(default_factory=PlatformConfig)
    problem: ProblemSpec = field(default_factory=lambda: ProblemSpec(8))
    limits: ExploreLimits = field(default_factory=ExploreLimits)
    workers: int = 4
    seed: int = 0
    output_dir: Path = Path("out")

    def prepare_output(self) -> Path:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output dir {self.output_dir}: {e}") from e
        if not os.access(self.output_dir, os.W_OK):
            raise ConfigError(f"output dir {self.output_dir} is not writable")
        return self.output_dir


def build_run_config(config_path: Optional[str] = None, *, nd=None, nu=None, np=None,
                     gmt=None, size=None, kernel=None, input_path=None, max_depth=None,
                     budget_secs=None, workers=4, seed=0, out="out") -> RunConfig:
    """Config file values, overridden by any non-None keyword."""
    base = load_config(config_path) if config_path else {"platform": {}, "problem": {}}
    plat = base["platform"]
    prob = base["problem"]
    for k, v in (("nd", nd), ("nu", nu), ("np", np), ("gmt", gmt)):
        if v is not None:
            plat[k] = v
    for k, v in (("size", size), ("kernel", kernel), ("input_path", input_path)):
        if v is not None:
            prob[k] = v
    platform = PlatformConfig(**plat)
    data = read_input(prob["input_path"]) if prob.get("input_path") else None
    problem = ProblemSpec(size=prob.get("size", 8), kernel=prob.get("kernel", "abstract"),
                          input=data)
    limits = ExploreLimits()
    if max_depth is not None:
        limits = ExploreLimits(max_depth=max_depth)
    if budget_secs is not None:
        limits = ExploreLimits(max_depth=limits.max_depth, wall_budget=budget_secs)
    if workers < 1:
        raise ConfigError("--workers must be >= 1")
    return RunConfig(platform, problem, limits, workers, seed, Path(out))
