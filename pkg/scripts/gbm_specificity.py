"""False-alarm rate of the bubble verdict on geometric Brownian motion.

    python scripts/gbm_specificity.py --seeds 50
"""
import argparse
import time

import numpy as np

from bubblescope.calibrate import FitConfig, calibrate_ensemble, diagnose, valid_fraction
from bubblescope.synthetic import gbm_path


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--drift", type=float, default=0.05)
    ap.add_argument("--vol", type=float, default=0.15)
    ap.add_argument("--years", type=float, default=4.0)
    ap.add_argument("--windows", type=int, default=5)
    ap.add_argument("--min-valid-fraction", type=float, default=0.8)
    args = ap.parse_args()

    times = 2000 + np.arange(int(args.years * 252) + 1) / 252
    cfg = FitConfig(bootstrap=0)
    fractions = []
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        ens = calibrate_ensemble(gbm_path(times, args.drift, args.vol, seed), cfg, args.windows)
        fractions.append(valid_fraction(ens))
        print(f"seed {seed:3d}  valid fraction {fractions[-1]:.2f}  "
              f"{diagnose(ens, args.min_valid_fraction)}")
    fractions = np.array(fractions)
    print(f"Valid verdicts {np.mean(fractions >= args.min_valid_fraction):.0%}; "
          f"majority rule would give {np.mean(fractions > 0.5):.0%} "
          f"({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
