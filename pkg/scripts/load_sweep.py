"""Standard deviation of the source delay against the generation rate λ.

Prints the λ that maximises σ_U for each buffer size and writes the full grid.

    python scripts/load_sweep.py --delta 0 --out results/load_sweep.csv
"""

import argparse
from pathlib import Path

from sourcedelay import NetworkConfig
from sourcedelay.compare import sweep
from sourcedelay.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=0.0)
    ap.add_argument("--out", type=Path, default=Path("results/load_sweep.csv"))
    args = ap.parse_args()

    base = NetworkConfig(n=200, m=16, q=0.6, f=3, delta=args.delta)
    lams = [round(0.0005 * k, 4) for k in range(1, 11)]
    buffers = [3, 5, 7]
    rows = sweep(base, {"M": buffers, "lam": lams})

    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["M", "lambda", "mean", "std_dev"],
              ((r["M"], r["lam"], r["mean"], r["std_dev"]) for r in rows), base)
    for M in buffers:
        sub = [r for r in rows if r["M"] == M]
        peak = max(sub, key=lambda r: r["std_dev"])
        print(f"Δ={args.delta:g} M={M}: σ_U peaks at λ={peak['lam']} ({peak['std_dev']:.1f})")


if __name__ == "__main__":
    main()
