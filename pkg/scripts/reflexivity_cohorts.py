"""Fitted branching ratios for low and high endogeneity cohorts.

    python scripts/reflexivity_cohorts.py --seeds 20 --horizon 5000
"""
import argparse
import time

import numpy as np

from bubblescope.reflexivity import fit_hawkes, simulate_hawkes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--horizon", type=float, default=5000.0)
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.3, 0.8])
    args = ap.parse_args()

    for n in args.ratios:
        t0 = time.perf_counter()
        fits = [fit_hawkes(simulate_hawkes(1.0, n, 1.0, args.horizon, seed)) for seed in range(args.seeds)]
        r = np.array([f.branching_ratio for f in fits])
        print(f"n={n:.2f}  mean {r.mean():.3f}  sd {r.std(ddof=1):.3f}  "
              f"range [{r.min():.3f}, {r.max():.3f}]  ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
