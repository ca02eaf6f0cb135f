"""Exponent study: fit p_n ~ C R^-n n^-alpha on the radial engine.

Usage: python scripts/llt_study.py --config configs/f2_srw.json [--horizon 5000]
Writes a JSON summary to stdout.
"""

import argparse
import json
import sys

from freewalk.audit import llt_fit
from freewalk.config import load_config
from freewalk.green import spectral_radius
from freewalk.walks import detect_period, is_radial, return_probabilities


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--horizon", type=int, default=None)
    parser.add_argument("--window-lo", type=int, default=None)
    args = parser.parse_args()

    cfg = load_config(args.config)
    horizon = args.horizon or cfg.horizon
    method = "radial" if is_radial(cfg.measure) else "exact"
    seq = return_probabilities(cfg.measure, horizon, method=method)
    est = spectral_radius(seq)
    period = detect_period(seq).period
    lo = args.window_lo or max(horizon // 10, 50 * period)
    fit = llt_fit(seq.log_values, period, (lo, horizon), 1.0 / est.rho_hat)
    json.dump(
        {
            "config": cfg.name,
            "method": method,
            "horizon": horizon,
            "period": period,
            "R_hat": 1.0 / est.rho_hat,
            "alpha_joint": fit.alpha,
            "alpha_pinned_R": fit.alpha_fixed,
            "alpha_ratio": fit.alpha_ratio,
            "window_halves": list(fit.window_halves),
            "residual_rms": fit.residual_rms,
            "consistent": fit.consistent(),
        },
        sys.stdout,
        indent=2,
    )
    print()


if __name__ == "__main__":
    main()
