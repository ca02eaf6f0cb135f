"""Pressure ladder study: P_hat(r) across an r grid and (cap, depth) rungs.

Usage: python scripts/pressure_ladder.py --config configs/f2_srw.json
Prints one JSON object per grid point.
"""

import argparse
import json
import sys

from freewalk.config import load_config
from freewalk.green import GreenEvaluator
from freewalk.thermo import pressure


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--max-cap", type=int, default=None)
    parser.add_argument("--max-depth", type=int, default=None)
    args = parser.parse_args()

    cfg = load_config(args.config)
    ev = GreenEvaluator(cfg.measure)
    cap = args.max_cap or cfg.cap
    depth = args.max_depth or cfg.depth
    ladder = tuple(
        (c, d)
        for c in range(max(cap - 1, 1), cap + 1)
        for d in range(max(depth - 1, 2), depth + 1)
    )
    grid = cfg.resolve_r_grid(ev.R_hat) or [0.9 * ev.R_hat, ev.R_hat]
    for r in grid:
        est = pressure(ev, r, ladder=ladder)
        json.dump(json.loads(est.to_json()), sys.stdout, indent=2)
        print()


if __name__ == "__main__":
    main()
