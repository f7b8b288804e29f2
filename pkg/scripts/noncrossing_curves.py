"""Quantile curves on 40 sine points with and without the non-crossing penalty.

Writes CSV tables plus summary.json under results/sine-crossing/ (or --out).
"""
import argparse
import json

from itl.experiments import run_benchmark

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/sine-crossing")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary = run_benchmark("sine-crossing", args.out, args.seed)
    print(json.dumps(summary, indent=1, default=str))
