"""Monte Carlo check of the per-slot contact probabilities p0 and p1.

    python scripts/contact_montecarlo.py --n 100 --m 8 --q 0.4 --slots 1000000
"""

import argparse

from sourcedelay import NetworkConfig, contact_probabilities
from sourcedelay.simulator import single_slot_event_frequencies


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--q", type=float, default=0.4)
    ap.add_argument("--delta", type=float, default=0.0)
    ap.add_argument("--slots", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = NetworkConfig(n=args.n, m=args.m, q=args.q, delta=args.delta)
    pr = contact_probabilities(cfg)
    fr = single_slot_event_frequencies(cfg, args.slots, seed=args.seed)
    for name, exact, got, se in (("p0", pr.p0, fr.freq_p0, fr.se_p0),
                                 ("p1", pr.p1, fr.freq_p1, fr.se_p1),
                                 ("p2", pr.p2, fr.freq_p2, fr.se_p2)):
        print(f"{name}: closed form {exact:.6e}  simulated {got:.6e}  z={(got - exact) / se:+.2f}")


if __name__ == "__main__":
    main()
