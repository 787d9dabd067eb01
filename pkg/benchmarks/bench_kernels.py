"""Time the numba kernels against the numpy/Python fallbacks.

Each backend runs in its own subprocess because the switch
(``KAKEYA_LAB_NO_NUMBA``) is read at import time.  Numba timings exclude the
first, compiling call.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from kakeya_lab import kernels
from kakeya_lab._accel import backend_name
from kakeya_lab.sd_engine import extremal_search
from kakeya_lab.slope_field import INF

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
pts = rng.integers(-64, 65, size=(400, 2))
radii2 = np.array([(64 >> j) ** 2 for j in range(7)])
heights = np.unique(rng.integers(-64, 65, size=90))

def best(fn):
    fn()  # warm-up / compile
    ts = []
    for _ in range(repeat):
        t = time.perf_counter(); out = fn(); ts.append(time.perf_counter() - t)
    return min(ts), out

res = {"backend": backend_name()}
t, out = best(lambda: kernels.ball_counts(pts, radii2))
res["ball_counts"] = {"seconds": t, "checksum": int(out.sum())}
t, out = best(lambda: kernels.quad_counts(heights, 8, 128, 4))
res["quad_counts"] = {"seconds": t, "checksum": int(out.sum())}
t, out = best(lambda: extremal_search(7, [0, 1, 2, INF], 3, "branch_and_bound"))
res["dfs_search"] = {"seconds": t, "checksum": out.max_size}
print(json.dumps(res))
"""


def run(no_numba: bool, repeat: int) -> dict:
    env = dict(os.environ, KAKEYA_LAB_NO_NUMBA="1" if no_numba else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True)
    if out.returncode:
        sys.exit(out.stderr)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    t0 = time.perf_counter()
    fast, slow = run(False, a.repeat), run(True, a.repeat)
    print(f"{'kernel':<14}{'numba s':>12}{'numpy s':>12}{'speedup':>10}  same")
    for k in ("ball_counts", "quad_counts", "dfs_search"):
        f, s = fast[k], slow[k]
        same = f["checksum"] == s["checksum"]
        print(f"{k:<14}{f['seconds']:>12.4f}{s['seconds']:>12.4f}{s['seconds'] / max(f['seconds'], 1e-9):>10.1f}  {same}")
    print(f"backends: {fast['backend']} vs {slow['backend']}; wall {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
