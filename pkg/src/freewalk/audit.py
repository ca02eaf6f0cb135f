"""Audits of Green-function inequalities and return-probability asymptotics.

Three instruments:

* ``ancona_audit`` samples geodesic triples and checks the multiplicative
  comparison G(x,z) G(e,e) >= G(x,y) G(y,z) at interior geodesic points,
  together with a deviation-vs-shared-prefix-length decay fit on quadruples.
* ``llt_fit`` estimates the polynomial correction exponent alpha in
  p_n ~ C R^{-n} n^{-alpha}, jointly with R and separately with R pinned.
* ``ratio_report`` tabulates the near-radius scaling combinations
  I1*sqrt(R-r), I2/I1^3, and G'*sqrt(R-r) over an r grid.

Ratios are reported as measured bands; nothing is asserted beyond the
supermultiplicative lower bound, which holds path by path.
"""

import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

DEVIATION_FLOOR = 1e-9


# -- element sampling ---------------------------------------------------------


def _random_syllable(group, rng, fid, cap):
    factor = group.factors[fid]
    if factor.kind == "lattice":
        choices = [p for p in factor.nontrivial_elements(cap)]
    else:
        choices = list(factor.nontrivial_elements())
    return (fid, rng.choice(choices))


def random_element(group, rng, n_syllables, cap=3):
    """A uniform-ish random normal form with ``n_syllables`` syllables."""
    out = []
    last = None
    for _ in range(n_syllables):
        fid = rng.choice([k for k in range(len(group.factors)) if k != last])
        out.append(_random_syllable(group, rng, fid, cap))
        last = fid
    return tuple(out)


# -- Ancona audit -------------------------------------------------------------


@dataclass
class AnconaReport:
    r: float
    seed: int
    n_triples: int
    n_skipped: int
    min_ratio: float
    max_ratio: float
    mean_ratio: float
    lower_bound_fraction: float  # fraction of triples with ratio >= 1 - tol
    strong_pairs: list  # (shared prefix length, |ratio - 1|)
    strong_rho: float
    strong_c: float
    deviations_below_floor: bool

    def to_json(self):
        return json.dumps(
            {
                "r": self.r,
                "seed": self.seed,
                "triples": self.n_triples,
                "skipped": self.n_skipped,
                "ratio_min": self.min_ratio,
                "ratio_max": self.max_ratio,
                "ratio_mean": self.mean_ratio,
                "lower_bound_fraction": self.lower_bound_fraction,
                "strong_rho": self.strong_rho,
                "strong_c": self.strong_c,
                "deviations_below_floor": self.deviations_below_floor,
            },
            indent=2,
        )


def ancona_audit(
    evaluator,
    r,
    n_triples=200,
    max_rel_dist=6,
    seed=0,
    syllable_cap=3,
    tail_tol=0.05,
    lower_tol=1e-9,
):
    """Sampled geodesic-triple ratio statistics plus a strong-form decay fit.

    The triple ratio is G(x,z) G(y,y) / (G(x,y) G(y,z)) with y an interior
    point of the syllable geodesic from x to z; supermultiplicativity of
    path weights makes it >= 1 up to series tolerance.  The strong-form
    audit takes quadruples whose geodesics share an n-syllable prefix and
    fits |ratio - 1| <= C rho^n.
    """
    group = evaluator.group
    rng = random.Random(seed)
    ratios = []
    skipped = 0
    ok = 0
    for _ in range(n_triples):
        span = rng.randint(2, max_rel_dist)
        x = random_element(group, rng, rng.randint(0, 2), syllable_cap)
        delta = random_element(group, rng, span, syllable_cap)
        z = group.multiply(x, delta)
        geo = group.rel_geodesic(x, z)
        y = geo[rng.randint(1, len(geo) - 1)]
        gxz = evaluator.green(x, z, r)
        gxy = evaluator.green(x, y, r)
        gyz = evaluator.green(y, z, r)
        gee = evaluator.green((), (), r)
        rel_tail = sum(
            g.tail / g.value if g.value else math.inf
            for g in (gxz, gxy, gyz, gee)
        )
        if rel_tail > tail_tol:
            skipped += 1
            continue
        ratio = (gxz.value * gee.value) / (gxy.value * gyz.value)
        ratios.append(ratio)
        # the bound is checked up to the propagated series tolerance
        if ratio >= 1.0 - (lower_tol + 3.0 * rel_tail):
            ok += 1
    strong = []
    for n in range(1, max_rel_dist + 1):
        for _ in range(10):
            prefix = random_element(group, rng, n, syllable_cap)
            first_fid = prefix[0][0]
            last_fid = prefix[-1][0]
            # x, x' extend backwards from e; y, y' extend past the prefix
            back_fids = [k for k in range(len(group.factors)) if k != first_fid]
            fwd_fids = [k for k in range(len(group.factors)) if k != last_fid]
            x = group.invert((_random_syllable(group, rng, rng.choice(back_fids), syllable_cap),))
            xp = group.invert((_random_syllable(group, rng, rng.choice(back_fids), syllable_cap),))
            y = group.multiply(prefix, (_random_syllable(group, rng, rng.choice(fwd_fids), syllable_cap),))
            yp = group.multiply(prefix, (_random_syllable(group, rng, rng.choice(fwd_fids), syllable_cap),))
            if x == xp or y == yp:
                continue
            num = evaluator.green(x, y, r).value * evaluator.green(xp, yp, r).value
            den = evaluator.green(xp, y, r).value * evaluator.green(x, yp, r).value
            strong.append((n, abs(num / den - 1.0)))
    below_floor = all(d <= DEVIATION_FLOOR for _, d in strong)
    if below_floor or len(strong) < 2:
        rho, c = 0.0, 0.0
    else:
        pts = [(n, d) for n, d in strong if d > DEVIATION_FLOOR]
        ns = np.array([n for n, _ in pts], dtype=float)
        logs = np.array([math.log(d) for _, d in pts])
        design = np.column_stack([np.ones_like(ns), ns])
        coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
        c, rho = math.exp(coef[0]), math.exp(coef[1])
    return AnconaReport(
        r=float(r),
        seed=seed,
        n_triples=len(ratios),
        n_skipped=skipped,
        min_ratio=min(ratios) if ratios else math.nan,
        max_ratio=max(ratios) if ratios else math.nan,
        mean_ratio=sum(ratios) / len(ratios) if ratios else math.nan,
        lower_bound_fraction=ok / len(ratios) if ratios else math.nan,
        strong_pairs=strong,
        strong_rho=rho,
        strong_c=c,
        deviations_below_floor=below_floor,
    )


# -- local-limit exponent fitting ---------------------------------------------


@dataclass
class LltFit:
    alpha: float  # joint 3-parameter fit
    log_r: float  # fitted log R from the joint fit
    intercept: float
    alpha_fixed: float  # fit with log R pinned to r_hat_used
    alpha_ratio: float  # finite-difference estimator, R pinned
    r_hat_used: float
    window: tuple
    period: int
    residual_rms: float
    window_halves: tuple  # (alpha on lower half, alpha on upper half)

    def consistent(self):
        """Whether the joint and pinned-R estimates agree within the spread."""
        spread = abs(self.window_halves[0] - self.window_halves[1])
        return abs(self.alpha - self.alpha_fixed) <= max(spread, 0.05)


def llt_fit(log_probs, period, window, r_hat):
    """Fit log p_n = c - n log R - alpha log n on the period-lattice points.

    ``log_probs[n]`` is log p_n (minus infinity off the period lattice).
    Returns the joint fit, a fit with R pinned to ``r_hat``, and a
    finite-difference ratio estimator.
    """
    n_min, n_max = window
    ns = [
        n
        for n in range(n_min, min(n_max, len(log_probs) - 1) + 1)
        if n % period == 0 and math.isfinite(log_probs[n])
    ]
    if len(ns) < 50:
        raise ValueError(f"only {len(ns)} usable lattice points in the window")
    ns_arr = np.array(ns, dtype=float)
    ys = np.array([log_probs[n] for n in ns])

    def joint(ns_a, ys_a):
        design = np.column_stack(
            [np.ones_like(ns_a), -ns_a, -np.log(ns_a)]
        )
        coef, *_ = np.linalg.lstsq(design, ys_a, rcond=None)
        resid = ys_a - design @ coef
        return coef, math.sqrt(float(resid @ resid) / len(ys_a))

    coef, rms = joint(ns_arr, ys)
    intercept, log_r_fit, alpha_joint = float(coef[0]), float(coef[1]), float(coef[2])

    log_r = math.log(r_hat)
    pinned = ys + ns_arr * log_r
    design2 = np.column_stack([np.ones_like(ns_arr), -np.log(ns_arr)])
    coef2, *_ = np.linalg.lstsq(design2, pinned, rcond=None)
    alpha_fixed = float(coef2[1])

    # finite-difference estimator on the upper half of the window
    half = ns[len(ns) // 2 :]
    diffs = []
    for n0, n1 in zip(half, half[1:]):
        dlp = log_probs[n1] - log_probs[n0]
        diffs.append(-(dlp + (n1 - n0) * log_r) / (math.log(n1) - math.log(n0)))
    alpha_ratio = float(np.median(diffs)) if diffs else math.nan

    mid = len(ns) // 2
    lo_coef, _ = joint(ns_arr[:mid], ys[:mid])
    hi_coef, _ = joint(ns_arr[mid:], ys[mid:])

    return LltFit(
        alpha=alpha_joint,
        log_r=log_r_fit,
        intercept=intercept,
        alpha_fixed=alpha_fixed,
        alpha_ratio=alpha_ratio,
        r_hat_used=r_hat,
        window=(n_min, n_max),
        period=period,
        residual_rms=rms,
        window_halves=(float(lo_coef[2]), float(hi_coef[2])),
    )


def synthetic_log_probs(alpha, r_growth, n_max, period=1, c=1.0):
    """log(C r^{-n} n^{-alpha}) on the period lattice, for fit calibration."""
    out = [-math.inf] * (n_max + 1)
    for n in range(period, n_max + 1, period):
        out[n] = math.log(c) - n * math.log(r_growth) - alpha * math.log(n)
    return out


# -- near-radius ratio report -------------------------------------------------


@dataclass
class RatioRow:
    r: float
    i1: float
    i2: float
    i1_scaled: float  # I1 * sqrt(R - r)
    i2_over_i1_cubed: float
    dgreen: float  # d/dr ( r G(e,e|r) )
    dgreen_scaled: float  # dgreen * sqrt(R - r)


@dataclass
class RatioReport:
    r_hat: float
    rows: list
    band_i1: float  # (max - min) / min over the grid
    band_i2_ratio: float
    band_dgreen: float
    non_monotone: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(
            {
                "r_hat": self.r_hat,
                "rows": [vars(row) for row in self.rows],
                "band_i1_scaled": self.band_i1,
                "band_i2_over_i1_cubed": self.band_i2_ratio,
                "band_dgreen_scaled": self.band_dgreen,
                "non_monotone": self.non_monotone,
            },
            indent=2,
        )

    def to_csv_rows(self):
        header = [
            "r",
            "i1",
            "i2",
            "i1_sqrt_gap",
            "i2_over_i1_cubed",
            "dgreen",
            "dgreen_sqrt_gap",
        ]
        yield header
        for row in self.rows:
            yield [
                row.r,
                row.i1,
                row.i2,
                row.i1_scaled,
                row.i2_over_i1_cubed,
                row.dgreen,
                row.dgreen_scaled,
            ]


def _band(values):
    lo, hi = min(values), max(values)
    return (hi - lo) / lo if lo > 0 else math.inf


def ratio_report(evaluator, r_grid, **isum_kwargs):
    """Tabulate I1*sqrt(R-r), I2/I1^3 and G'*sqrt(R-r) over an r grid."""
    r_hat = evaluator.R_hat
    rows = []
    for r in sorted(r_grid):
        s = evaluator.i_sums(r, **isum_kwargs)
        gap = math.sqrt(max(r_hat - r, 0.0))
        dg = evaluator.green_derivative((), (), r, mode="series").value
        rows.append(
            RatioRow(
                r=float(r),
                i1=s.i1,
                i2=s.i2,
                i1_scaled=s.i1 * gap,
                i2_over_i1_cubed=s.i2 / s.i1**3,
                dgreen=dg,
                dgreen_scaled=dg * gap,
            )
        )
    non_monotone = []
    for a, b in zip(rows, rows[1:]):
        if b.i1 < a.i1:
            non_monotone.append(b.r)
    return RatioReport(
        r_hat=r_hat,
        rows=rows,
        band_i1=_band([row.i1_scaled for row in rows]),
        band_i2_ratio=_band([row.i2_over_i1_cubed for row in rows]),
        band_dgreen=_band([row.dgreen_scaled for row in rows]),
        non_monotone=non_monotone,
    )
