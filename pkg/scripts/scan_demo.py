"""Causal scan over a synthetic bubble: watch the verdict switch on as tc nears.

    python scripts/scan_demo.py --step 0.25
"""
import argparse

import numpy as np

from bubblescope.calibrate import FitConfig, scan
from bubblescope.series import TimeSeries
from bubblescope.synthetic import SynthSpec, generate_lppls, gbm_path
from tc_coverage import TRUTH


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=0.25)
    ap.add_argument("--sigma", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    # three calm years of random walk, then the bubble stitched on in levels
    calm = gbm_path(np.linspace(2001, 2004, 300, endpoint=False), 0.05, 0.1, args.seed)
    bubble = generate_lppls(SynthSpec(TRUTH, np.linspace(2004, 2008.3, 430), args.sigma, args.seed))
    scale = bubble.values[0] / calm.values[-1]
    series = TimeSeries(np.concatenate([calm.times, bubble.times]),
                        np.concatenate([calm.values * scale, bubble.values]))

    rows = scan(series, FitConfig(starts=20, seed=args.seed, bootstrap=10), args.step, 5)
    print(f"true tc {TRUTH.tc}")
    for r in rows:
        band = "" if r.window is None else f"[{r.window.lower:.3f}, {r.window.upper:.3f}]"
        print(f"{r.as_of:9.3f}  {r.status:9s}  valid {r.valid_fraction:.1f}  {band}{r.message}")


if __name__ == "__main__":
    main()
