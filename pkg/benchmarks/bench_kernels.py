"""Compare the compiled kernels with the plain-Python fallback.

Each path runs in its own interpreter, because the fallback is chosen at
import time from ``NVSTEADY_DISABLE_NUMBA``. Every timing is taken after a
warm-up call, so the compiled figures exclude JIT compilation.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

PROBE = r"""
import json, math, sys, time
import numpy as np
from nvsteady import USING_NUMBA, PolytropicAnsatz, eval_h, integrate_steady_state
from nvsteady.characteristics import OrbitState, integrate_orbit

repeat = int(sys.argv[1])
E0 = math.sqrt(0.9)
laws = {
    "h energy-weighted": PolytropicAnsatz(k=0.0, mu=0.5, E0=E0),
    "h plain power law": PolytropicAnsatz(k=0.5, mu=-0.5, E0=1.0, variant="plain-power-law"),
    "h tabulated": PolytropicAnsatz(k=0.0, mu=0.0, E0=1.0, variant="tabulated",
                                    table_E=(0.1, 0.4, 0.7, 1.0),
                                    table_psi=(1.0, 0.8, 0.3, 0.0)),
}
us = np.linspace(0.05, 0.95, 200)


def best(fn):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


out = {"numba": USING_NUMBA}
for name, law in laws.items():
    scale = law.E0
    out[name + " (200 calls)"] = best(lambda: [eval_h(1.5, u * scale, law) for u in us])
base = laws["h energy-weighted"]
out["solve baseline"] = best(lambda: integrate_steady_state(math.log(0.5 * E0), base))
prof = integrate_steady_state(math.log(0.5 * E0), base)
out["orbit span 50"] = best(lambda: integrate_orbit(prof, OrbitState(2.0, 0.05, 0.2), 50.0))
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["NVSTEADY_DISABLE_NUMBA"] = "1"
    else:
        env.pop("NVSTEADY_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", PROBE, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timed repetitions (best is kept)")
    args = parser.parse_args(argv)

    compiled = run(False, args.repeat)
    plain = run(True, args.repeat)
    if not compiled.pop("numba") or plain.pop("numba"):
        print("warning: the environment flag did not select the expected paths",
              file=sys.stderr)

    width = max(len(k) for k in compiled)
    print(f"{'benchmark':<{width}}  {'numba [s]':>10}  {'python [s]':>10}  {'speed-up':>8}")
    for key, t_fast in compiled.items():
        t_slow = plain[key]
        print(f"{key:<{width}}  {t_fast:10.4f}  {t_slow:10.4f}  {t_slow / t_fast:8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
