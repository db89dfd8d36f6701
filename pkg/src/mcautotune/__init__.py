"""Auto-tuning of parallel kernel parameters by model checking.

A kernel launch on an abstract OpenCL-style platform is modelled as a set
of communicating processes with a shared lock-step clock. The minimal
run time over all tuning parameters (workgroup size ``wg``, tile size
``ts``) is found by searching for counterexamples to "the program cannot
finish within T ticks".
"""

from .config import RunConfig, build_run_config, load_config, read_input
from .explorer import (ExploreLimits, NonTermination, OverTime, Verdict, check_nontermination,
                       check_overtime, explore_config, load_trace, replay, run_swarm)
from .kernels import build_kernel
from .machine import Machine, deterministic_run, fingerprint, format_trace
from .model import (ConfigError, PlatformConfig, ProblemSpec, TuningParams, derive_launch,
                    enumerate_configs, feasible_configs)
from .promela import export_promela
from .search import (SweepRow, TuneResult, best_row, bisect_min_time, exhaustive_sweep,
                     extract_params, rank_trails, rows_to_csv, swarm_min_time)
from .trace import Trace, TraceError

__version__ = "0.1.0"
