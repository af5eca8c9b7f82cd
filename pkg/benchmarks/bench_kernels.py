"""Compare the numba and numpy trial kernels on one workload.

Each backend runs in its own interpreter (the backend is fixed at import
through MTJSTDP_BACKEND). Reports wall time per trial-step and checks that
both produce the same switching outcomes.

    python benchmarks/bench_kernels.py --trials 64 --steps 20000
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from mtjstdp.montecarlo import SimConfig, run_batch
from mtjstdp import MaterialParams, ThermalParams, ResistanceModel, State, Waveform
n, steps = int(sys.argv[1]), int(sys.argv[2])
sim = SimConfig()
wf = Waveform(((0.0, 4e-9, -6.8),))
args = (MaterialParams(), ThermalParams(), ResistanceModel(current_state=State.AP), [wf] * n, [-1] * n,
        list(range(n)), sim)
run_batch(*args[:-1], sim, n_steps=10)  # warm-up / compile
t0 = time.perf_counter()
res = run_batch(*args, n_steps=steps)
wall = time.perf_counter() - t0
print(json.dumps({"wall": wall, "final_state": res.final_state.tolist(),
                  "mz": np.round(res.final_m[:, 2], 9).tolist()}))
"""


def run(backend, trials, steps):
    env = dict(os.environ, MTJSTDP_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", WORKER, str(trials), str(steps)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=64)
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args()
    results = {b: run(b, args.trials, args.steps) for b in ("numba", "numpy")}
    work = args.trials * args.steps
    for b, r in results.items():
        print(f"{b:6s} {r['wall']:8.3f} s  {1e9 * r['wall'] / work:9.1f} ns per trial-step")
    print(f"speedup numba/numpy: {results['numpy']['wall'] / results['numba']['wall']:.1f}x")
    same = results["numba"]["final_state"] == results["numpy"]["final_state"]
    dz = max(abs(a - b) for a, b in zip(results["numba"]["mz"], results["numpy"]["mz"]))
    print(f"outcomes identical: {same}; max |mz difference|: {dz:.3g}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
