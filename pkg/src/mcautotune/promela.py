"""Promela source export for cross-checking the engine with SPIN.

The generated model keeps the main/host/device/unit/barrier/pex/clock
process structure and the engine's timing rules: a ``long_work(gt, tz)``
call costs exactly ``gt * tz`` ticks, workgroups are handed out in host
waves, and a unit re-activates its processing elements round by round
when ``WG > NP``. ``T`` in the ``ltl`` block is a placeholder to be set
per check (``spin -DT=43 ...`` or by editing the define).
"""

from __future__ import annotations

from string import Template

from .model import ConfigError, PlatformConfig, ProblemSpec, log2_exact

INT32_MAX = 2**31 - 1

_HEADER = Template("""\
/* OpenCL execution model, $kernel kernel, size=$size */
#define ND $nd
#define NU $nu
#define NP $np
#define GMT $gmt
#define N $n
#define SIZE $size
#define MAX $max
#ifndef T
#define T 100
#endif

mtype = { go, stop, done, reduce };

int size;
int WG, TS, WGs, NWD, NWU, NWE;
int allNWE = 0;
int NRP_work = 0;
int time = 0;
bool FIN = false;
$memory
chan hst_d[ND] = [0] of { mtype };
chan d_hst = [0] of { mtype, byte, byte };

ltl overtime { [] (FIN -> (time > T)) }

inline long_work(gt, tz) {
  do
  :: time >= (start_time + (gt * tz)) -> break
  :: else ->
     atomic {
       cur_time = time;
       NRP_work++;
       time == cur_time + 1 }
  od
}

""")

_MAIN = Template("""\
active proctype main() {
  byte i;
  size = 1 << N;
$load  select (i : 1 .. N - 1);
  WG = size >> (N - i);
  select (i : 1 .. N - 1);
  TS = size >> (N - i);
$feasible  // number of working groups
  WGs = size / (WG * TS);
  if
  :: WGs == 0 -> WGs = 1
  :: else -> skip
  fi;
  NWD = (WGs <= NU * ND -> (WGs / NU) : ND);
  NWD = (WGs / NU -> NWD : 1);
  NWU = (WGs <= NU -> WGs : NU);
  NWE = (WG <= NP -> WG : NP);
  allNWE = NWE * NWU * NWD;
  atomic {
    run host();
    run clock() }
}

""")

_HOST = """\
proctype host() {
  int i;
  int stopped = 0;
  byte d, more;
  atomic { for (i : 0 .. NWD - 1) { run device(i, d_hst, hst_d[i]) } }
  atomic { for (i : 0 .. NWD - 1) { hst_d[i] ! go } }
  do
  :: stopped == NWD -> break
  :: else ->
     atomic {
       d_hst ? done, d, more;
       if
       :: more > 0 -> allNWE = allNWE + NWE * more; hst_d[d] ! go
       :: else -> hst_d[d] ! stop; stopped++
       fi }
  od;
  FIN = true
}

proctype device(byte d; chan d_hst; chan hst_d) {
  chan dev_u = [0] of { mtype, int };
  chan u_dev = [0] of { mtype };
  int i, n, nwg;
  int w = 0;
  atomic { for (i : 0 .. NWU - 1) { run unit(d * NWU + i, dev_u, u_dev) } }
  do
  :: hst_d ? go ->
     n = 0;
     atomic {
       for (i : 0 .. NWU - 1) {
         nwg = w * NWD * NWU + d * NWU + i;
         if
         :: nwg < WGs -> dev_u ! go, nwg; n++
         :: else -> skip
         fi } }
     for (i : 1 .. n) { atomic { u_dev ? done; allNWE = allNWE - NWE } }
     w++;
     n = 0;
     for (i : 0 .. NWU - 1) {
       if
       :: (w * NWD * NWU + d * NWU + i) < WGs -> n++
       :: else -> skip
       fi }
     d_hst ! done, d, n
  :: hst_d ? stop ->
     atomic { for (i : 0 .. NWU - 1) { dev_u ! stop, 0 } }
     break
  od
}

proctype barrier(chan pex_b; chan b_pex) {
  int i;
  do
  :: pex_b ? done ->
     for (i : 1 .. NWE - 1) { pex_b ? done }
     atomic { for (i : 0 .. NWE - 1) { b_pex ! go } }
  :: pex_b ? stop -> break
  od
}

"""

_ABSTRACT = """\
proctype unit(byte mu; chan dev_u; chan u_dev) {
  chan pex_b = [0] of { mtype };
  chan b_pex = [0] of { mtype };
  chan pex_u = [0] of { mtype };
  chan u_pex = [0] of { mtype };
  int i, nwg;
  run barrier(pex_b, b_pex);
  atomic { for (i : 0 .. NWE - 1) { run pex(i, pex_b, b_pex, pex_u, u_pex) } }
  do
  :: dev_u ? go, nwg ->
     atomic { for (i : 0 .. NWE - 1) { u_pex ! go } }
     if
     :: WG <= NP -> for (i : 0 .. NWE - 1) { pex_u ? done }
     :: else ->
        for (i : 0 .. WG - NP - 1) { atomic { pex_u ? done; u_pex ! go } }
        for (i : 0 .. NP - 1) { pex_u ? done }
     fi;
     u_dev ! done
  :: dev_u ? stop, nwg ->
     pex_b ! stop;
     atomic { for (i : 0 .. NWE - 1) { u_pex ! stop } }
     break
  od
}

proctype pex(byte me; chan pex_b; chan b_pex; chan pex_u; chan u_pex) {
  int i, start_time, cur_time;
  do
  :: u_pex ? go ->
     for (i : 0 .. (size / TS - 1)) {
       start_time = time;
       long_work(GMT, TS);    // access to global memory
       pex_b ! done; b_pex ? go;
       start_time = time;
       long_work(1, TS);      // access to local memory, both branches
       pex_b ! done; b_pex ? go
     }
     start_time = time;
     long_work(GMT, 1);       // copy the result to global memory
     pex_u ! done
  :: u_pex ? stop -> break
  od
}

"""

_MINIMUM = """\
inline min(a, b) {
  if
  :: a > b -> a = b
  :: else -> skip
  fi
}

proctype unit(byte mu; chan dev_u; chan u_dev) {
  chan pex_b = [0] of { mtype };
  chan b_pex = [0] of { mtype };
  chan pex_u = [0] of { mtype };
  chan u_pex = [0] of { mtype, int, int };
  int i, nwg, iter, num;
  run barrier(pex_b, b_pex);
  atomic { for (i : 0 .. NWE - 1) { run pex(i, mu, pex_b, b_pex, pex_u, u_pex) } }
  do
  :: dev_u ? go, nwg ->
     atomic { for (i : 0 .. NWE - 1) { u_pex ! go, nwg, 0 } }
     if
     :: WG <= NP -> for (i : 0 .. NWE - 1) { pex_u ? done }
     :: else ->
        iter = 1;
        num = 0;
        for (i : 0 .. WG - NP - 1) {
          atomic {
            pex_u ? done;
            u_pex ! go, nwg, iter;
            num++;
            if
            :: num >= NP -> iter++; num = 0
            :: else -> skip
            fi } }
        for (i : 0 .. NP - 1) { pex_u ? done }
     fi;
     // REDUCE local, after every item of the group is done
     u_pex ! reduce, nwg, 0;
     pex_u ? done;
     u_dev ! done
  :: dev_u ? stop, nwg ->
     pex_b ! stop;
     atomic { for (i : 0 .. NWE - 1) { u_pex ! stop, 0, 0 } }
     break
  od
}

proctype pex(byte me; byte mu; chan pex_b; chan b_pex; chan pex_u; chan u_pex) {
  int i, nwg, iter, glob_id, shift, start_time, cur_time;
  int myloc = me + mu * NP;
  int base = mu * NP;
  do
  :: u_pex ? go, nwg, iter ->
     glob_id = (WG > NP -> nwg * WG + me + iter * NP : nwg * WG + me);
     shift = glob_id * TS;
     // MAP
     for (i : 0 .. TS - 1) {
       min(loc[myloc], glob[i + shift]);
       start_time = time;
       long_work(GMT, 1)      // access to global memory
     }
     pex_u ! done
  :: u_pex ? reduce, nwg, iter ->
     for (i : 1 .. NWE - 1) {
       min(loc[base], loc[base + i]);
       start_time = time;
       long_work(1, 1)        // access to local memory
     }
     // copy the result of this working group to global memory
     min(glob[0], loc[base]);
     start_time = time;
     long_work(GMT, 1);
     pex_u ! done
  :: u_pex ? stop, nwg, iter -> break
  od
}

"""

_CLOCK = """\
proctype clock() {
  do
  :: FIN -> break
  :: allNWE != 0 && NRP_work == allNWE ->
     atomic {
       NRP_work = 0;
       time++ }
  od
}
"""


def export_promela(platform: PlatformConfig, problem: ProblemSpec,
                   full_hierarchy: bool = False) -> str:
    """Self-contained SPIN input for ``problem`` on ``platform``.

    By default one device with one unit is modelled, which is enough to
    estimate time when all units behave alike; ``full_hierarchy`` keeps the
    configured device and unit counts.
    """
    nd, nu = (platform.nd, platform.nu) if full_hierarchy else (1, 1)
    n = log2_exact(problem.size)
    if problem.kernel == "minimum":
        if any(not -INT32_MAX - 1 <= v <= INT32_MAX for v in problem.input):
            raise ConfigError("Promela ints are 32-bit; input values do not fit")
        memory = "int glob[SIZE];\nint loc[ND * NU * NP];\n"
        if tuple(problem.input) == tuple(problem.size - i for i in range(problem.size)):
            load = "  for (i : 0 .. size - 1) { glob[i] = size - i }\n"
        else:
            load = "".join(f"  glob[{i}] = {v};\n" for i, v in enumerate(problem.input))
        load += "  for (i : 0 .. ND * NU * NP - 1) { loc[i] = MAX }\n"
        feasible = "  (WG * TS <= size);   // no out-of-range glob reads\n"
        body = _MINIMUM
    else:
        memory, load, feasible, body = "", "", "", _ABSTRACT
    head = _HEADER.substitute(kernel=problem.kernel, size=problem.size, nd=nd, nu=nu,
                              np=platform.np, gmt=platform.gmt, n=n, max=INT32_MAX,
                              memory=memory)
    main = _MAIN.substitute(load=load, feasible=feasible)
    return head + main + _HOST + body + _CLOCK
