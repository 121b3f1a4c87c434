"""Mean and standard deviation of the source delay against the dispatch probability q.

    python scripts/dispatch_sweep.py --out results/dispatch_sweep.csv
"""

import argparse
from pathlib import Path

from sourcedelay import NetworkConfig
from sourcedelay.compare import sweep
from sourcedelay.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/dispatch_sweep.csv"))
    args = ap.parse_args()

    base = NetworkConfig(n=300, m=16, M=7, lam=0.002)
    qs = [round(0.1 * k, 1) for k in range(1, 10)]
    rows = sweep(base, {"f": [1, 2, 4], "q": qs})

    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["f", "q", "mean", "std_dev"],
              ((r["f"], r["q"], r["mean"], r["std_dev"]) for r in rows), base)
    for r in rows:
        print(f"f={r['f']} q={r['q']:.1f}  mean={r['mean']:9.1f}  std={r['std_dev']:9.1f}")


if __name__ == "__main__":
    main()
