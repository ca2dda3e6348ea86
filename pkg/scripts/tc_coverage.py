"""Monte Carlo coverage of the critical window on noisy synthetic bubbles.

    python scripts/tc_coverage.py --seeds 50 --sigma 0.01
"""
import argparse
import time

import numpy as np

from bubblescope.calibrate import FitConfig, calibrate_ensemble, critical_window, valid_fraction
from bubblescope.model import LpplsParams
from bubblescope.synthetic import SynthSpec, generate_lppls

TRUTH = LpplsParams(tc=2008.5, m=0.5, omega=8.0, A=np.log(100) + 1.5, B=-0.6, C1=0.04, C2=0.03)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--sigma", type=float, default=0.01)
    ap.add_argument("--points", type=int, default=500)
    ap.add_argument("--windows", type=int, default=5)
    ap.add_argument("--bootstrap", type=int, default=20)
    ap.add_argument("--confidence", type=float, default=0.8)
    args = ap.parse_args()

    times = np.linspace(2004, 2008, args.points)
    hits = 0
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        series = generate_lppls(SynthSpec(TRUTH, times, args.sigma, seed))
        ens = calibrate_ensemble(series, FitConfig(seed=seed, bootstrap=args.bootstrap), args.windows)
        try:
            w = critical_window(ens, args.confidence)
        except ValueError:
            print(f"seed {seed:3d}  no Valid window")
            continue
        hits += w.contains(TRUTH.tc)
        print(f"seed {seed:3d}  [{w.lower:.3f}, {w.upper:.3f}]  valid {valid_fraction(ens):.1f}"
              f"  {'hit' if w.contains(TRUTH.tc) else 'miss'}")
    print(f"coverage {hits}/{args.seeds} = {hits / args.seeds:.0%} "
          f"({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
