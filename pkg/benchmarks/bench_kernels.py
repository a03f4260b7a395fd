"""Compare the jit-compiled kernels against the pure-numpy fallbacks.

The backend is chosen at import time from CORESETKIT_NO_NUMBA, so the script
measures one backend per process: run without arguments and it re-launches
itself once per backend, then prints a side-by-side table.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --n 5000 --d 32 --bins 20
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _measure(n: int, d: int, n_bins: int, n_selected: int, repeats: int) -> dict:
    from coresetkit import _kernels
    from coresetkit.quantize import bin_sizes

    rng = np.random.Generator(np.random.Philox(key=42))
    feats = rng.normal(size=(n, d))
    sizes = bin_sizes(n, n_bins)
    selected = sorted(int(i) for i in rng.choice(n, size=n_selected, replace=False))

    # tiny warm-up call so jit compilation stays out of the timings
    _kernels.greedy_order(feats[:8], bin_sizes(8, 2))
    _kernels.nn_distances(feats[:8], [0, 3])

    timings = {}
    for name, call in [
        ("greedy_order", lambda: _kernels.greedy_order(feats, sizes)),
        ("nn_distances", lambda: _kernels.nn_distances(feats, selected)),
    ]:
        best = min(_timed(call) for _ in range(repeats))
        timings[name] = best
    return {"backend": _kernels.backend(), "timings": timings}


def _timed(call) -> float:
    start = time.perf_counter()
    call()
    return time.perf_counter() - start


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000, help="points")
    parser.add_argument("--d", type=int, default=16, help="feature dimension")
    parser.add_argument("--bins", type=int, default=10)
    parser.add_argument("--selected", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--measure", action="store_true",
                        help="measure the active backend and print JSON")
    args = parser.parse_args(argv)

    if args.measure:
        result = _measure(args.n, args.d, args.bins, args.selected, args.repeats)
        print(json.dumps(result))
        return 0

    base_cmd = [
        sys.executable, os.path.abspath(__file__), "--measure",
        "--n", str(args.n), "--d", str(args.d), "--bins", str(args.bins),
        "--selected", str(args.selected), "--repeats", str(args.repeats),
    ]
    results = {}
    for label, extra_env in [("numba", {}), ("numpy", {"CORESETKIT_NO_NUMBA": "1"})]:
        env = dict(os.environ, **extra_env)
        proc = subprocess.run(base_cmd, env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return proc.returncode
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        results[payload["backend"]] = payload["timings"]

    print(f"n={args.n} d={args.d} bins={args.bins} "
          f"selected={args.selected} (best of {args.repeats})")
    header = f"{'kernel':<14} {'numba':>10} {'numpy':>10} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for kernel in sorted(results.get("numpy", {})):
        fast = results.get("numba", {}).get(kernel)
        slow = results["numpy"][kernel]
        if fast is None:
            print(f"{kernel:<14} {'n/a':>10} {slow:>9.4f}s {'n/a':>9}")
        else:
            print(f"{kernel:<14} {fast:>9.4f}s {slow:>9.4f}s {slow / fast:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
