"""Counterexample traces and their one-line-per-transition text format.

    <index> <pid> <role> <label> time=<t>
    ...
    FINAL time=<t> wg=<wg> ts=<ts> [result=<r>]

``time`` on a transition line is the model time after that transition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .model import TuningParams


class TraceError(ValueError):
    """A trace could not be parsed or did not replay."""


@dataclass(frozen=True)
class Trace:
    transitions: tuple
    final_time: int
    params: TuningParams
    result: Optional[int] = None
    # discovery metadata, not part of trace identity
    found_at: float = field(default=0.0, compare=False)

    @property
    def steps(self) -> int:
        return len(self.transitions)

    def summary(self) -> dict:
        d = {"time": self.final_time, "wg": self.params.wg, "ts": self.params.ts,
             "transitions": self.steps}
        if self.result is not None:
            d["result"] = self.result
        return d


def format_lines(rows: Sequence[Tuple[int, str, str, int]], trace: Trace) -> str:
    """Render ``(pid, role, label, time_after)`` rows plus the FINAL line."""
    out = [f"{i} {pid} {role} {label} time={t}" for i, (pid, role, label, t) in enumerate(rows)]
    final = f"FINAL time={trace.final_time} wg={trace.params.wg} ts={trace.params.ts}"
    if trace.result is not None:
        final += f" result={trace.result}"
    out.append(final)
    return "\n".join(out) + "\n"


def parse(text: str) -> Tuple[List[Tuple[int, str, str, int]], dict]:
    """Inverse of :func:`format_lines`: returns the rows and the FINAL fields."""
    rows = []
    final = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "FINAL":
            try:
                final = {k: int(v) for k, v in (p.split("=", 1) for p in parts[1:])}
            except ValueError as e:
                raise TraceError(f"line {lineno}: bad FINAL line {line!r}") from e
            continue
        if len(parts) < 5 or not parts[-1].startswith("time="):
            raise TraceError(f"line {lineno}: malformed transition line {line!r}")
        try:
            idx, pid, t = int(parts[0]), int(parts[1]), int(parts[-1][5:])
        except ValueError as e:
            raise TraceError(f"line {lineno}: malformed transition line {line!r}") from e
        if idx != len(rows):
            raise TraceError(f"line {lineno}: expected index {len(rows)}, got {idx}")
        rows.append((pid, parts[2], " ".join(parts[3:-1]), t))
    if final is None or not {"time", "wg", "ts"} <= final.keys():
        raise TraceError("trace has no complete FINAL line")
    return rows, final
