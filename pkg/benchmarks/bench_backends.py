"""Time the fit kernels under both backends.

Each backend runs in its own subprocess because the choice is made at import
time from the DUALTHERM_DISABLE_NUMBA environment variable.  The workload is
a batch of independently noised single-dip spectra; the first fit happens
before the clock starts so compilation cost is excluded.

Usage: python3 benchmarks/bench_backends.py [--fits N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = """
import json, sys, time
import numpy as np
from dualtherm import (
    AxisKind, OdmrModel, SpectrumTrace, backend_name, fit_odmr_dips, odmr_expected_counts,
)

n = int(sys.argv[1])
axis = np.linspace(2820.0, 2920.0, 201)
tau = 1.5 / 201
model = OdmrModel(baseline_rate=5e8, dips=((2868.4, 12.3, 0.118),))
expected = odmr_expected_counts(model, axis, tau)
rng = np.random.default_rng(7)
traces = [
    SpectrumTrace(AxisKind.FREQUENCY_MHZ, axis, rng.poisson(expected).astype(np.float64), tau)
    for _ in range(n)
]
fit_odmr_dips(traces[0], 1)  # warm up: compile outside the timed region
start = time.perf_counter()
converged = 0
for trace in traces:
    converged += fit_odmr_dips(trace, 1).converged
elapsed = time.perf_counter() - start
print(json.dumps({
    "backend": backend_name(),
    "fits": n,
    "converged": converged,
    "seconds": elapsed,
    "ms_per_fit": 1e3 * elapsed / n,
}))
"""


def run_backend(disable_numba: bool, n_fits: int) -> dict:
    env = dict(os.environ)
    env.pop("DUALTHERM_DISABLE_NUMBA", None)
    if disable_numba:
        env["DUALTHERM_DISABLE_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(n_fits)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(proc.stdout)


def main() -> None:
    parser = argparse.ArgumentParser(description="compare numba and numpy fit backends")
    parser.add_argument("--fits", type=int, default=200, help="spectra per backend")
    args = parser.parse_args()

    results = [run_backend(False, args.fits), run_backend(True, args.fits)]
    for r in results:
        print(
            f"{r['backend']:>6}: {r['fits']} fits ({r['converged']} converged) "
            f"in {r['seconds']:.2f} s -> {r['ms_per_fit']:.3f} ms/fit"
        )
    if results[0]["backend"] != results[1]["backend"]:
        speedup = results[1]["ms_per_fit"] / results[0]["ms_per_fit"]
        print(f"speedup: {speedup:.1f}x ({results[0]['backend']} over {results[1]['backend']})")


if __name__ == "__main__":
    main()
