"""Inlier fraction versus theta for level-set estimation on a 2-D Gaussian blob.

Writes CSV tables plus summary.json under results/dlse-theta/ (or --out).
"""
import argparse
import json

from itl.experiments import run_benchmark

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/dlse-theta")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary = run_benchmark("dlse-theta", args.out, args.seed)
    print(json.dumps(summary, indent=1, default=str))
