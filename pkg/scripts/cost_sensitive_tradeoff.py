"""Sensitivity and specificity across theta on Two-Moons, joint versus independent fits.

Writes CSV tables plus summary.json under results/csc-grid/ (or --out).
"""
import argparse
import json

from itl.experiments import run_benchmark

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/csc-grid")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary = run_benchmark("csc-grid", args.out, args.seed)
    print(json.dumps(summary, indent=1, default=str))
