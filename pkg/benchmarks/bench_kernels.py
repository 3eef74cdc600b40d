"""Compare the numba kernels with the pure-Python fallback.

Each backend runs in its own interpreter (PERBIF_NUMBA is read at import).
Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, math, time
from perbif import backend
from perbif.continuation import integrate, shoot_newton
from perbif.orbit import OrbitPoint
from perbif.weights import Weight

w = Weight.indicators([(0.0, math.pi / 4, 1.0)], math.pi)
t0 = time.perf_counter()
integrate(w, 3.9, 0.38, 0.79, samples=64, variational=True)  # includes JIT compile / cache load
warm = time.perf_counter() - t0

def best(f, n):
    out = []
    for _ in range(n):
        t = time.perf_counter()
        f()
        out.append(time.perf_counter() - t)
    return min(out)

R = {repeat}
res = {{
    "backend": backend(),
    "first_call_s": warm,
    "integrate_s": best(lambda: integrate(w, 3.9, 0.38, 0.79, samples=512), R),
    "variational_s": best(lambda: integrate(w, 3.9, 0.38, 0.79, samples=0, variational=True), R),
    "shoot_newton_s": best(lambda: shoot_newton(w, OrbitPoint(3.9, 0.4, 0.8)), R),
}}
print(json.dumps(res))
"""


def run(flag: str, repeat: int) -> dict:
    env = dict(os.environ, PERBIF_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKLOAD.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    jit, py = run("1", args.repeat), run("0", args.repeat)
    print(f"{'task':<16}{'numba [s]':>14}{'python [s]':>14}{'speedup':>10}")
    for key in ("first_call_s", "integrate_s", "variational_s", "shoot_newton_s"):
        a, b = jit[key], py[key]
        print(f"{key[:-2]:<16}{a:>14.5f}{b:>14.5f}{b / a:>10.1f}")


if __name__ == "__main__":
    main()
