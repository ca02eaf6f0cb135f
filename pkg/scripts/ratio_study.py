"""Near-radius ratio study: I1*sqrt(R-r), I2/I1^3, G'*sqrt(R-r) over a grid.

Usage: python scripts/ratio_study.py --config configs/f2_srw.json --out ratios.csv
"""

import argparse
import csv
import sys

from freewalk.audit import ratio_report
from freewalk.config import load_config
from freewalk.green import GreenEvaluator


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default="-", help="CSV path, or - for stdout")
    args = parser.parse_args()

    cfg = load_config(args.config)
    ev = GreenEvaluator(cfg.measure)
    grid = cfg.resolve_r_grid(ev.R_hat) or [
        f * ev.R_hat for f in (0.90, 0.95, 0.98)
    ]
    rep = ratio_report(ev, grid, sphere_stop_tol=1e-8)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = csv.writer(fh)
    for row in rep.to_csv_rows():
        writer.writerow(row)
    if fh is not sys.stdout:
        fh.close()
    print(
        f"# bands: I1_scaled {rep.band_i1:.3f}, I2/I1^3 {rep.band_i2_ratio:.3f}, "
        f"dgreen_scaled {rep.band_dgreen:.3f}",
        file=sys.stderr,
    )


if __name__ == "__main__":
    main()
