"""Green functions G(x,y|r), first-passage series, spectral radius, and I-sums.

Two coefficient sources back every evaluation: a radial table (isotropic
walks, sphere masses from the distance chain divided by sphere sizes) and a
truncated exact convolution table.  On top of either, single-syllable
first-passage values give a product evaluation of G(e,gamma|r) across
syllables; in a free product every syllable prefix is a cut vertex of the
Cayley graph, so the first-visit decomposition at prefixes is an exact
identity whenever the step measure is supported on single syllables.

Every reported value carries a tail estimate and a method tag; tails are
closed geometrically away from the convergence radius and with a power-law
model near it, never hidden.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DegenerateInputError,
    DivergenceError,
    GroupSpecError,
    NonConvergenceError,
)
from . import walks

NEG_INF = -math.inf


# ---------------------------------------------------------------------------
# sphere sizes with linear-recurrence extension

def sphere_sizes(group, n_max, enumerate_to=10, budget=5 * 10**5):
    """|S_m| for m = 0..n_max; enumerated prefix extended by a fitted
    integer linear recurrence (order <= 3), validated on a held-out term."""
    counts = {}
    for g in group.ball(enumerate_to, metric="word", budget=budget):
        counts[group.word_length(g)] = counts.get(group.word_length(g), 0) + 1
    sizes = [counts.get(m, 0) for m in range(enumerate_to + 1)]
    if n_max <= enumerate_to:
        return sizes[: n_max + 1]
    rec = _fit_recurrence(sizes)
    if rec is None:
        raise NonConvergenceError(
            "sphere sizes admit no short linear recurrence; raise enumerate_to",
            diagnostics={"sizes": sizes},
        )
    while len(sizes) <= n_max:
        sizes.append(sum(c * sizes[-i - 1] for i, c in enumerate(rec)))
    return sizes


def _fit_recurrence(sizes, max_order=3):
    for order in range(1, max_order + 1):
        if len(sizes) < 2 * order + 2:
            continue
        # solve on one window, validate on everything after it
        a = [[Fraction(sizes[j + order - 1 - i]) for i in range(order)]
             for j in range(order)]
        b = [Fraction(sizes[j + order]) for j in range(order)]
        coeffs = _solve_exact(a, b)
        if coeffs is None:
            continue
        ok = all(
            sum(c * sizes[m - 1 - i] for i, c in enumerate(coeffs)) == sizes[m]
            for m in range(2 * order, len(sizes))
        )
        if ok:
            return coeffs
    return None


def _solve_exact(a, b):
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [v - f * w for v, w in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


# ---------------------------------------------------------------------------
# tail closure

def _close_tail(log_terms, period):
    """(tail, method) for a positive series from its trailing log-terms.

    log_terms: log of the nonzero terms c_n r^n on the lattice n = n0 + j*p.
    Geometric closure when the measured step ratio is safely below 1; a
    q^n * n^(-3/2) model otherwise (ratio -> 1 polynomially at the radius).
    """
    finite = [(n, lt) for n, lt in log_terms if lt > NEG_INF]
    if len(finite) < 4:
        return 0.0, "none"
    (n1, l1), (n2, l2) = finite[-2], finite[-1]
    p = n2 - n1
    q = math.exp(l2 - l1)
    last = math.exp(l2)
    if q < 0.995:
        return last * q / (1.0 - q), "geometric"
    qt_p = min(q * (n2 / n1) ** 1.5, 1.0)  # q-tilde^p of the power-law model
    j = np.arange(1, 200001)
    terms = last * qt_p**j * (n2 / (n2 + p * j)) ** 1.5
    return float(terms.sum()), "power-law"


@dataclass(frozen=True)
class GreenValue:
    value: float
    tail: float
    method: str
    n_terms: int

    def __float__(self):
        return self.value


# ---------------------------------------------------------------------------
# coefficient tables

class RadialGreenTable:
    """log p_n(e, gamma) per word distance, from the distance chain."""

    def __init__(self, group, chain, horizon):
        self.group = group
        self.chain = chain
        self.horizon = horizon
        masses, logscales = chain.float_masses(horizon)
        sizes = sphere_sizes(group, masses.shape[1] - 1)
        logsz = np.array([math.log(s) if s else math.inf for s in sizes])
        with np.errstate(divide="ignore"):
            self.logc = np.log(masses) + logscales[:, None] - logsz[None, :]
        # first-visit-at-0 series per starting distance, for F(e, gamma)
        self._fp_logs = {}

    def log_coefficients(self, m):
        """log p_n(e, gamma) for n = 0..horizon, |gamma| = m."""
        return self.logc[:, m]

    def first_visit_logs(self, m):
        """log of the first-visit-to-e mass at each time, starting distance m."""
        if m not in self._fp_logs:
            self._fp_logs[m] = _absorbing_chain_logs(self.chain, m, self.horizon)
        return self._fp_logs[m]


def _absorbing_chain_logs(chain, start, horizon):
    max_m = horizon + start + 1
    down = np.empty(max_m + 1)
    stay = np.empty(max_m + 1)
    up = np.empty(max_m + 1)
    for k in range(max_m + 1):
        d, s, u = chain.row(k)
        down[k], stay[k], up[k] = float(d), float(s), float(u)
    v = np.zeros(max_m + 1)
    logs = np.full(horizon + 1, NEG_INF)
    if start == 0:
        logs[0] = 0.0
        return logs
    v[start] = 1.0
    logscale = 0.0
    for n in range(1, horizon + 1):
        nv = stay * v
        nv[:-1] += down[1:] * v[1:]
        nv[1:] += up[:-1] * v[:-1]
        absorbed = nv[0]
        nv[0] = 0.0  # state 0 is absorbing: harvest, do not propagate
        if absorbed > 0.0:
            logs[n] = logscale + math.log(absorbed)
        total = nv.sum()
        if total <= 0.0:
            break
        nv /= total
        logscale += math.log(total)
        v = nv
    return logs


class ConvolutionGreenTable:
    """log p_n(e, gamma) from one truncated exact convolution pass."""

    def __init__(self, measure, horizon, ball_bound, budget=5 * 10**6):
        self.measure = measure
        self.group = measure.group
        self.horizon = horizon
        self.ball_bound = ball_bound
        self.dists = walks.convolve_powers(
            measure, horizon, ball_bound=ball_bound, budget=budget
        )
        self._cache = {}

    def log_coefficients(self, gamma):
        if gamma not in self._cache:
            logs = np.full(self.horizon + 1, NEG_INF)
            for n, dist in enumerate(self.dists):
                num = dist.numerators.get(gamma, 0)
                if num:
                    logs[n] = math.log(num) - math.log(dist.denominator)
            self._cache[gamma] = logs
        return self._cache[gamma]

    def first_visit_logs(self, gamma):
        """log first-visit masses f_n(e, gamma) via a taboo convolution."""
        group = self.group
        index = walks._Index(self.measure, ball_bound=self.ball_bound)
        target = index.intern(gamma)
        cur = {0: 1}
        denom = 1
        logs = np.full(self.horizon + 1, NEG_INF)
        if target == 0:
            logs[0] = 0.0
            return logs
        for n in range(1, self.horizon + 1):
            denom *= index.step_denom
            nxt = {}
            for eid, num in cur.items():
                for tid, wnum in index.neighbors(eid):
                    if tid < 0:
                        continue
                    nxt[tid] = nxt.get(tid, 0) + num * wnum
            hit = nxt.pop(target, 0)
            if hit:
                logs[n] = math.log(hit) - math.log(denom)
            cur = nxt
            if not cur:
                break
        return logs


def _eval_series(logs, r, period_hint=1):
    """(value, tail, method, n_terms) for sum_n c_n r^n from log c_n."""
    if r < 0:
        raise ValueError("r must be >= 0")
    logr = math.log(r) if r > 0 else NEG_INF
    log_terms = []
    for n, lc in enumerate(logs):
        if lc > NEG_INF:
            log_terms.append((n, lc + n * logr if n else lc))
    if not log_terms:
        return 0.0, 0.0, "empty", 0
    peak = max(lt for _, lt in log_terms)
    value = math.exp(peak) * sum(math.exp(lt - peak) for _, lt in log_terms)
    tail, method = _close_tail(log_terms, period_hint)
    return value + tail, tail, method, len(log_terms)


# ---------------------------------------------------------------------------
# spectral radius

@dataclass
class SpectralRadiusEstimate:
    rho_lower: float  # rigorous: sup_n p_{2n}^{1/2n}
    rho_hat: float  # extrapolated 1/R
    R_hat: float
    n_used: int
    ratio_tail: list
    richardson_tail: list
    exceeds_one: bool  # R_hat > 1, expected for non-amenable groups

    def uncertainty(self):
        if len(self.richardson_tail) < 2:
            return math.inf
        return max(abs(v - self.rho_hat) for v in self.richardson_tail[-3:])


def spectral_radius(seq, period=None):
    """Estimate rho = 1/R from a return sequence.

    Rigorous lower bound from supermultiplicativity of p_{2n}(e,e); the point
    estimate extrapolates the even-step ratio with one n^{-1} Richardson
    stage, which removes the leading correction of a C R^{-2n} n^{-alpha}
    tail.
    """
    logs = seq.log_values
    even = [(n, logs[n]) for n in range(2, seq.horizon + 1, 2) if logs[n] > NEG_INF]
    if len(even) < 10:
        raise DegenerateInputError(
            "spectral radius estimation needs at least 10 nonzero even terms"
        )
    return _spectral_radius_from_even(even)


def _spectral_radius_from_even(even):
    rho_lower = max(math.exp(l / n) for n, l in even)
    ratios = []
    for (n1, l1), (n2, l2) in zip(even, even[1:]):
        ratios.append((n1 // 2, math.exp((l2 - l1) / (n2 - n1) * 2)))
    # Richardson on x_k = p_{2k+2}/p_{2k}: y_k = (k+1) x_{k+1} - k x_k
    rich = []
    for (k1, x1), (k2, x2) in zip(ratios, ratios[1:]):
        rich.append(k2 * x2 - k1 * x1)
    window = rich[-10:]
    rho_sq = sum(window) / len(window)
    rho_hat = math.sqrt(max(rho_sq, rho_lower**2))
    return SpectralRadiusEstimate(
        rho_lower=rho_lower,
        rho_hat=rho_hat,
        R_hat=1.0 / rho_hat,
        n_used=even[-1][0],
        ratio_tail=[x for _, x in ratios[-5:]],
        richardson_tail=rich[-5:],
        exceeds_one=1.0 / rho_hat > 1.0,
    )


# ---------------------------------------------------------------------------
# I-sums

@dataclass
class ISums:
    r: float
    i1: float
    i2: float
    sphere_sums: list  # relative-sphere contributions to I1 (m = 1, 2, ...)
    syllable_cap: int
    stop_reason: str
    i2_method: str


# ---------------------------------------------------------------------------
# the evaluator facade

class GreenEvaluator:
    """Green functions for one (group, measure) pair at a fixed horizon."""

    def __init__(
        self,
        measure,
        horizon=None,
        ball_bound=None,
        radius_horizon=4000,
        budget=5 * 10**6,
    ):
        self.measure = measure
        self.group = measure.group
        self.chain = walks.is_radial(measure)
        if self.chain is not None:
            self.horizon = horizon or 600
            self.table = RadialGreenTable(self.group, self.chain, self.horizon)
            seq = walks.ReturnSequence(
                horizon=radius_horizon,
                method="radial",
                log_values=self.chain.return_log_probs(radius_horizon),
            )
        else:
            self.horizon = horizon or 80
            if ball_bound is None:
                ball_bound = max(12, (self.horizon // 4) * measure.max_step_length)
            self.table = ConvolutionGreenTable(
                measure, self.horizon, ball_bound, budget=budget
            )
            # radius estimate from the same truncation ball as the table;
            # beyond n = 2*ball_bound/max_step the returns are slightly
            # undercounted, which can only nudge R_hat upward and is
            # covered by the slop in _check_r
            seq_h = min(self.horizon, 60)
            dists = walks.convolve_powers(
                measure, seq_h, ball_bound=ball_bound, budget=budget
            )
            seq = walks.ReturnSequence(
                horizon=seq_h,
                method="exact",
                values=[d.mass(self.group.identity) for d in dists],
            )
        self.period = walks.detect_period(seq).period
        even = [
            (n, seq.log_values[n])
            for n in range(2, seq.horizon + 1, 2)
            if seq.log_values[n] > NEG_INF
        ]
        self.radius_estimate = _spectral_radius_from_even(even)
        self.single_syllable_support = all(
            len(g) <= 1 for g, _ in measure.support
        )
        self._fp_cache = {}
        self._val_cache = {}

    @property
    def R_hat(self):
        return self.radius_estimate.R_hat

    def _check_r(self, r):
        if r > self.R_hat * 1.002:
            raise DivergenceError(
                f"r = {r} exceeds the estimated convergence radius {self.R_hat}"
            )

    def _logs_for(self, gamma):
        if self.chain is not None:
            return self.table.log_coefficients(self.group.word_length(gamma))
        return self.table.log_coefficients(gamma)

    # -- Green function and first passage -----------------------------------

    def green(self, x, y, r, method="auto"):
        """G(x,y|r) with tail estimate; series, factored, or auto."""
        self._check_r(r)
        gamma = self.group.multiply(self.group.invert(x), y)
        if method == "auto":
            method = (
                "factored"
                if self.single_syllable_support and len(gamma) > 1
                else "series"
            )
        key = (gamma, r, method)
        cached = self._val_cache.get(key)
        if cached is not None:
            return cached
        if method == "series":
            v, tail, tag, n = _eval_series(self._logs_for(gamma), r, self.period)
            out = GreenValue(v, tail, f"series/{tag}", n)
        elif method == "factored":
            out = self._green_factored(gamma, r)
        else:
            raise ValueError(f"unknown method {method!r}")
        self._val_cache[key] = out
        return out

    def _green_factored(self, gamma, r):
        if not self.single_syllable_support:
            raise GroupSpecError(
                "factored Green evaluation needs single-syllable support "
                "(steps cannot jump across cut vertices)"
            )
        gee = self.green((), (), r, method="series")
        value = gee.value
        rel_tail = gee.tail / gee.value if gee.value else 0.0
        for syl in gamma:
            fp = self.first_passage((), (syl,), r)
            value *= fp.value
            rel_tail += fp.tail / fp.value if fp.value else 0.0
        return GreenValue(value, abs(value) * rel_tail, "factored", gee.n_terms)

    def first_passage(self, x, y, r, method="series"):
        """F(x,y|r): first-visit series; satisfies G(x,y|r)=F(x,y|r)G(e,e|r)."""
        self._check_r(r)
        gamma = self.group.multiply(self.group.invert(x), y)
        if method == "ratio":
            g = self.green(x, y, r, method="series")
            gee = self.green((), (), r, method="series")
            return GreenValue(
                g.value / gee.value, g.tail / gee.value, "ratio", g.n_terms
            )
        key = ("F", gamma, r)
        cached = self._val_cache.get(key)
        if cached is not None:
            return cached
        if gamma not in self._fp_cache:
            if self.chain is not None:
                logs = self.table.first_visit_logs(self.group.word_length(gamma))
            else:
                logs = self.table.first_visit_logs(gamma)
            self._fp_cache[gamma] = logs
        v, tail, tag, n = _eval_series(self._fp_cache[gamma], r, self.period)
        out = GreenValue(v, tail, f"first-visit/{tag}", n)
        self._val_cache[key] = out
        return out

    def h_value(self, gamma, r):
        """H(e,gamma|r) = G(e,gamma|r) G(gamma,e|r)."""
        a = self.green((), gamma, r)
        b = self.green(gamma, (), r)
        return a.value * b.value

    # -- derivative ----------------------------------------------------------

    def green_derivative(self, x, y, r, mode="series", **isum_kwargs):
        """d/dr ( r G(x,y|r) ), by series or by the sum-over-gamma identity."""
        self._check_r(r)
        if mode == "series":
            gamma = self.group.multiply(self.group.invert(x), y)
            logs = self._logs_for(gamma)
            shifted = np.array(
                [
                    lc + math.log(n + 1) if lc > NEG_INF else NEG_INF
                    for n, lc in enumerate(logs)
                ]
            )
            v, tail, tag, n = _eval_series(shifted, r, self.period)
            return GreenValue(v, tail, f"derivative-series/{tag}", n)
        if mode == "identity":
            if x == () and y == ():
                s = self.i_sums(r, want_i2=False, **isum_kwargs)
                return GreenValue(s.i1, 0.0, "derivative-identity/sphere", 0)
            return self._derivative_identity_ball(x, y, r, **isum_kwargs)
        raise ValueError(f"unknown mode {mode!r}")

    def _derivative_identity_ball(self, x, y, r, radius=8, syllable_cap=8):
        total = 0.0
        for g in self.group.ball(radius, metric="word"):
            total += self.green(x, g, r).value * self.green(g, y, r).value
        return GreenValue(total, 0.0, "derivative-identity/ball", 0)

    # -- I sums --------------------------------------------------------------

    def _syllable_weights(self, r, syllable_cap, weight):
        """Per-factor sums of weight(h) over nontrivial factor elements."""
        out = []
        for fid, factor in enumerate(self.group.factors):
            cap = syllable_cap if factor.kind == "lattice" else None
            t = 0.0
            for p in factor.nontrivial_elements(cap):
                t += weight(fid, p)
            out.append(t)
        return out

    def _u_weight(self, fid, p, r):
        syl = ((fid, p),)
        f1 = self.first_passage((), syl, r).value
        f2 = self.first_passage((), self.group.invert(syl), r).value
        return f1 * f2

    def i_sums(
        self,
        r,
        sphere_stop_tol=1e-4,
        syllable_cap=30,
        max_spheres=200000,
        want_i2=True,
        i2_budget=2 * 10**5,
    ):
        """I1 = sum_gamma H(e,gamma|r) and the 3-fold Green sum I2.

        Relative spheres are summed via the per-syllable first-passage
        weights (exact across cut vertices); summation stops when a sphere's
        relative contribution drops below ``sphere_stop_tol``.
        """
        self._check_r(r)
        if not self.single_syllable_support:
            raise GroupSpecError(
                "i_sums requires single-syllable support for the factored route"
            )
        gee = self.green((), (), r, method="series").value
        t = self._syllable_weights(r, syllable_cap, lambda fid, p: self._u_weight(fid, p, r))
        n_fac = len(t)
        h_ee = gee * gee
        v = list(t)  # v[k]: sum over m-syllable words ending in factor k
        total = h_ee
        sphere_sums = []
        stop_reason = "max_spheres"
        history = []
        for m in range(1, max_spheres + 1):
            sphere = h_ee * sum(v)
            sphere_sums.append(sphere)
            total += sphere
            history.append(sphere)
            if sphere < sphere_stop_tol * total:
                stop_reason = f"sphere tolerance at m={m}"
                break
            if len(history) > 25 and history[-1] > history[-26]:
                raise NonConvergenceError(
                    "relative-sphere sums are not decaying",
                    diagnostics={"r": r, "sphere_sums": sphere_sums},
                )
            other = sum(v)
            v = [t[k] * (other - v[k]) for k in range(n_fac)]
        i2 = math.nan
        i2_method = "skipped"
        if want_i2:
            i2, i2_method = self._i2(r, syllable_cap, sphere_stop_tol, i2_budget)
        return ISums(
            r=r,
            i1=total,
            i2=i2,
            sphere_sums=sphere_sums,
            syllable_cap=syllable_cap,
            stop_reason=stop_reason,
            i2_method=i2_method,
        )

    def _is_tree(self):
        for f in self.group.factors:
            if f.kind == "lattice" and f.rank == 1:
                continue
            if f.kind == "finite" and f.order == 2:
                continue
            return False
        return True

    def _i2(self, r, syllable_cap, tol, budget):
        if self.chain is not None and self._is_tree():
            return self._i2_tree(r, tol), "tree-radial"
        return self._i2_enumerate(r, tol, syllable_cap, budget), "enumeration"

    def _i2_tree(self, r, tol):
        """Triangle-count route on a regular tree: one inner distance sum."""
        deg = len(self.group.generators())
        b = deg - 1
        # outer radius: where word-sphere contributions to I1 have died out
        g = []
        sizes = []
        ell = 0
        while True:
            gv = _eval_series(self.table.log_coefficients(ell), r, self.period)[0]
            g.append(gv)
            sizes.append(1 if ell == 0 else deg * b ** (ell - 1))
            contrib = sizes[ell] * gv * gv
            if ell > 5 and contrib < tol * 1e-3:
                break
            if ell > self.horizon - 2:
                break
            ell += 1
        L = len(g) - 1
        garr = np.array(g)
        total = 0.0
        for l1 in range(0, L + 1):
            phi = 0.0
            for tpos in range(0, l1 + 1):
                # gamma' = path point at distance tpos from e plus a branch of
                # length s; off-path branching depends on the anchor's degree
                smax = min(L - tpos, L - (l1 - tpos))
                if smax < 0:
                    continue
                s = np.arange(0, smax + 1)
                if l1 == 0:
                    off = deg
                elif tpos == 0 or tpos == l1:
                    off = deg - 1
                else:
                    off = deg - 2
                branches = np.where(
                    s == 0, 1.0, off * np.power(float(b), np.maximum(s - 1, 0))
                )
                phi += float(np.sum(branches * garr[tpos + s] * garr[l1 - tpos + s]))
            total += sizes[l1] * g[l1] * phi
        return total

    def _i2_enumerate(self, r, tol, syllable_cap, budget):
        """Outer sum over relative spheres, inner sum over an adaptive ball."""
        group = self.group
        inner = group.ball(
            6, metric="relative", syllable_cap=min(syllable_cap, 3), budget=budget
        )
        g_inner = {gp: self.green((), gp, r).value for gp in inner}
        total = 0.0
        m = 0
        while True:
            outer = group.sphere(
                m, metric="relative", syllable_cap=min(syllable_cap, 3), budget=budget
            )
            contrib = 0.0
            for gamma in outer:
                back = self.green(gamma, (), r).value
                phi = 0.0
                for gp, ggp in g_inner.items():
                    phi += ggp * self.green(gp, gamma, r).value
                contrib += back * phi
            total += contrib
            if m > 2 and contrib < tol * total:
                break
            if m >= 6:
                break
            m += 1
        return total

    def parabolic_i_sums(self, factor_id, r, order=1, factor_cap=60, tol=1e-10):
        """I^(k) restricted to one parabolic factor, k in {1, 2}."""
        self._check_r(r)
        factor = self.group.factors[factor_id]
        cap = factor_cap if factor.kind == "lattice" else None
        elems = [()] + [
            ((factor_id, p),) for p in factor.nontrivial_elements(cap)
        ]
        gvals = {g: self.green((), g, r).value for g in elems}
        if order == 1:
            shells = {}
            for g in elems:
                l = self.group.word_length(g)
                shells[l] = shells.get(l, 0.0) + gvals[g] * self.green(g, (), r).value
            series = [shells[l] for l in sorted(shells)]
            _check_shell_decay(series, r)
            return sum(series)
        if order == 2:
            total = 0.0
            shells = {}
            for g1 in elems:
                for g2 in elems:
                    mid = self.green(g1, g2, r).value
                    val = gvals[g1] * mid * self.green(g2, (), r).value
                    l = max(
                        self.group.word_length(g1), self.group.word_length(g2)
                    )
                    shells[l] = shells.get(l, 0.0) + val
                    total += val
            _check_shell_decay([shells[l] for l in sorted(shells)], r)
            return total
        raise ValueError("order must be 1 or 2")


def _check_shell_decay(series, r):
    if len(series) > 12 and series[-1] > series[-6]:
        raise NonConvergenceError(
            "parabolic shell sums are not decaying",
            diagnostics={"r": r, "shells": series[-12:]},
        )
