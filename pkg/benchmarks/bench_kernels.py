"""Compare the compiled (numba) and interpreted kernel paths.

Each mode runs in its own interpreter because the switch is read at import
time. The workload is a handful of closed-loop simulations followed by the
comfort band-pass over their acceleration traces.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
import adftest
from adftest.evaluation import bandpass
from adftest.roadgen import DEFAULT_ROUTES, Template, concrete_from_params
from adftest.simulator import run_simulation

repeat = int(sys.argv[1])
cases = [concrete_from_params(f"b-{t.value}", "b", t, {}, DEFAULT_ROUTES[t]) for t in Template]
# warm-up pays the compile (or cache load) cost outside the timed region
run_simulation(cases[0])
bandpass(np.zeros(512), 100.0)
sim, filt, digest = [], [], 0.0
for _ in range(repeat):
    t0 = time.perf_counter()
    results = [run_simulation(cs) for cs in cases]
    sim.append(time.perf_counter() - t0)
    t0 = time.perf_counter()
    for r in results:
        digest += float(np.sum(np.abs(bandpass(r.trajectory.column("a_long"), 100.0))))
    filt.append(time.perf_counter() - t0)
samples = sum(len(r.trajectory) for r in results)
print(json.dumps({"numba": adftest.USING_NUMBA, "sim": min(sim), "filter": min(filt), "samples": samples,
                  "scenarios": len(cases), "digest": digest / repeat}))
"""


def run_mode(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, ADFTEST_DISABLE_NUMBA="1" if disable else "0")
    t0 = time.perf_counter()
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                         check=True)
    data = json.loads(out.stdout.strip().splitlines()[-1])
    data["wall"] = time.perf_counter() - t0
    return data


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions per mode (best is reported)")
    args = ap.parse_args(argv)

    fast = run_mode(False, args.repeat)
    slow = run_mode(True, args.repeat)
    print(f"{'path':<12}{'simulate [s]':>14}{'band-pass [s]':>15}{'process [s]':>13}")
    for name, d in (("numba", fast), ("interpreted", slow)):
        print(f"{name:<12}{d['sim']:>14.3f}{d['filter']:>15.4f}{d['wall']:>13.2f}")
    print(f"speed-up: simulate x{slow['sim'] / fast['sim']:.1f}, band-pass x{slow['filter'] / fast['filter']:.1f} "
          f"({fast['samples']} samples over {fast['scenarios']} scenarios)")
    rel = abs(fast["digest"] - slow["digest"]) / max(abs(slow["digest"]), 1e-300)
    print(f"output agreement: relative difference {rel:.1e}")
    if not fast["numba"]:
        print("note: numba unavailable, both runs used the interpreted path")
    return 0


if __name__ == "__main__":
    sys.exit(main())
