"""Test pinball loss versus number of theta anchors on the 1000-point sine benchmark.

Writes CSV tables plus summary.json under results/sine-msweep/ (or --out).
"""
import argparse
import json

from itl.experiments import run_benchmark

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/sine-msweep")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary = run_benchmark("sine-msweep", args.out, args.seed)
    print(json.dumps(summary, indent=1, default=str))
