"""Run every benchmark recipe in turn and print one summary per recipe."""
import argparse
import json
import os
import time

from itl.experiments import BENCHMARKS, run_benchmark

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name in BENCHMARKS:
        t0 = time.perf_counter()
        summary = run_benchmark(name, os.path.join(args.out, name), args.seed)
        print(f"== {name} ({time.perf_counter() - t0:.1f}s)")
        print(json.dumps(summary, indent=1, default=str))
