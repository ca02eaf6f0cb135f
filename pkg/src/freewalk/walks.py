"""Finitely supported measures, exact convolution powers, and the radial fast path.

Exact convolutions run on interned elements with integer numerators over a
common power denominator, so only integer arithmetic happens in the hot loop.
The radial path projects isotropic nearest-neighbor walks to a birth-death
chain on distances; it is validated against the full walk on an overlap window
and runs in log-scaled floats for large horizons.
"""

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    BudgetError,
    DegenerateInputError,
    GroupSpecError,
    NonRadialError,
)


class StepMeasure:
    """A finitely supported exact-rational probability measure on the group."""

    def __init__(self, group, weights, name=""):
        self.group = group
        self.name = name
        items = []
        for elem, w in weights.items():
            w = Fraction(w)
            if w <= 0:
                raise GroupSpecError("step weights must be positive")
            if not group.is_valid(elem):
                raise GroupSpecError(f"support element {elem!r} is not in normal form")
            items.append((elem, w))
        items.sort(key=lambda it: group.canonical_key(it[0]))
        if sum(w for _, w in items) != 1:
            raise GroupSpecError("step weights must sum to exactly 1")
        self.support = tuple(items)
        self.weights = dict(items)
        self.max_step_length = max(
            (group.word_length(g) for g, _ in items), default=0
        )
        self._check_admissible_reach()

    def _check_admissible_reach(self):
        # Admissibility is undecidable in general at this layer; warn if the
        # support's closure misses part of the radius-3 ball.
        try:
            target = set(self.group.ball(3, metric="word", budget=200000))
        except BudgetError:
            return
        reached = {self.group.identity}
        frontier = [self.group.identity]
        for _ in range(3 * max(1, self.max_step_length) + 3):
            nxt = []
            for g in frontier:
                for s, _ in self.support:
                    h = self.group.multiply(g, s)
                    if h not in reached and self.group.word_length(h) <= 3:
                        reached.add(h)
                        nxt.append(h)
            if not nxt:
                break
            frontier = nxt
        if not target <= reached:
            warnings.warn(
                f"measure {self.name or '<unnamed>'} may not be admissible: "
                "its support does not reach the full radius-3 ball",
                stacklevel=3,
            )

    def is_symmetric(self):
        for g, w in self.support:
            if self.weights.get(self.group.invert(g)) != w:
                return False
        return True

    def common_denominator(self):
        d = 1
        for _, w in self.support:
            d = d * w.denominator // math.gcd(d, w.denominator)
        return d


def uniform_on_generators(group, lazy=None, name=""):
    """Uniform measure on the relative generating set S (optionally lazy at e)."""
    gens = [tuple(s) for s in group.generators()]
    if lazy is None:
        w = Fraction(1, len(gens))
        weights = {g: w for g in gens}
    else:
        lazy = Fraction(lazy)
        w = (1 - lazy) / len(gens)
        weights = {g: w for g in gens}
        weights[group.identity] = lazy
    return StepMeasure(group, weights, name=name)


class _Index:
    """Interns elements and caches right-multiplication by the support."""

    def __init__(self, measure, ball_bound=None):
        self.group = measure.group
        self.ball_bound = ball_bound
        denom = measure.common_denominator()
        self.step_denom = denom
        self.steps = [
            (s, int(w * denom)) for s, w in measure.support
        ]
        self.elems = [self.group.identity]
        self.ids = {self.group.identity: 0}
        self.nbrs = [None]

    def intern(self, elem):
        eid = self.ids.get(elem)
        if eid is None:
            eid = len(self.elems)
            self.ids[elem] = eid
            self.elems.append(elem)
            self.nbrs.append(None)
        return eid

    def neighbors(self, eid):
        cached = self.nbrs[eid]
        if cached is None:
            g = self.elems[eid]
            cached = []
            for s, num in self.steps:
                h = self.group.multiply(g, s)
                if (
                    self.ball_bound is not None
                    and self.group.word_length(h) > self.ball_bound
                ):
                    cached.append((-1, num))  # escape sink
                else:
                    cached.append((self.intern(h), num))
            self.nbrs[eid] = cached
        return cached


@dataclass
class Distribution:
    """mu^{*n} restricted to a ball, as integer numerators over denom."""

    n: int
    denominator: int
    numerators: dict  # element -> int
    escaped_numerator: int
    ball_bound: int

    def mass(self, elem):
        return Fraction(self.numerators.get(elem, 0), self.denominator)

    @property
    def escaped_mass(self):
        return Fraction(self.escaped_numerator, self.denominator)

    def total_mass(self):
        return Fraction(sum(self.numerators.values()), self.denominator)

    def masses(self):
        return {g: Fraction(v, self.denominator) for g, v in self.numerators.items()}


def convolve_power(measure, n, ball_bound=None, budget=5 * 10**6):
    """Exact mu^{*n} on the ball; records escaped mass when truncated."""
    return convolve_powers(measure, n, ball_bound, budget)[-1]


def convolve_powers(measure, n, ball_bound=None, budget=5 * 10**6):
    """All mu^{*k} for k = 0..n in one pass (shared element index)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    full_bound = n * measure.max_step_length
    if ball_bound is None:
        ball_bound = full_bound
    index = _Index(measure, ball_bound=ball_bound)
    denom = 1
    cur = {0: 1}
    escaped = 0
    out = [Distribution(0, 1, {measure.group.identity: 1}, 0, ball_bound)]
    for step in range(1, n + 1):
        escaped *= index.step_denom  # rescale to this step's denominator
        nxt = {}
        for eid, num in cur.items():
            for tid, wnum in index.neighbors(eid):
                if tid < 0:
                    escaped += num * wnum
                else:
                    nxt[tid] = nxt.get(tid, 0) + num * wnum
        denom *= index.step_denom
        cur = nxt
        if len(index.elems) > budget:
            raise BudgetError(
                "convolution exceeded element budget",
                consumed=len(index.elems),
                budget=budget,
            )
        numerators = {index.elems[eid]: num for eid, num in cur.items()}
        out.append(Distribution(step, denom, numerators, escaped, ball_bound))
    return out


@dataclass
class RadialChain:
    """Distance projection of an isotropic nearest-neighbor walk.

    ``rows[m]`` holds exact (down, stay, up) step probabilities at distance m;
    the final row repeats for all larger distances.  ``checked_radius`` is the
    radius over which sphere-constancy and row stabilization were verified.
    """

    rows: list  # [(down, stay, up)] with rows[-1] reused beyond
    checked_radius: int

    def row(self, m):
        return self.rows[min(m, len(self.rows) - 1)]

    def return_log_probs(self, horizon):
        """log p_n(e,e) for n = 0..horizon (-inf where zero), float path."""
        max_m = horizon + 1
        down = np.empty(max_m + 1)
        stay = np.empty(max_m + 1)
        up = np.empty(max_m + 1)
        for m in range(max_m + 1):
            d, s, u = self.row(m)
            down[m], stay[m], up[m] = float(d), float(s), float(u)
        v = np.zeros(max_m + 1)
        v[0] = 1.0
        logscale = 0.0
        logs = np.full(horizon + 1, -np.inf)
        logs[0] = 0.0
        for n in range(1, horizon + 1):
            nv = stay * v
            nv[:-1] += down[1:] * v[1:]
            nv[1:] += up[:-1] * v[:-1]
            total = nv.sum()
            if total <= 0.0:
                v = nv
                continue
            v = nv / total
            logscale += math.log(total)
            if v[0] > 0.0:
                logs[n] = logscale + math.log(v[0])
        return logs

    def exact_masses(self, horizon):
        """Exact per-distance masses for n = 0..horizon (list of lists)."""
        max_m = horizon + 1
        v = [Fraction(0)] * (max_m + 1)
        v[0] = Fraction(1)
        out = [list(v)]
        for _ in range(horizon):
            nv = [Fraction(0)] * (max_m + 1)
            for m in range(max_m + 1):
                if not v[m]:
                    continue
                d, s, u = self.row(m)
                if s:
                    nv[m] += s * v[m]
                if m > 0 and d:
                    nv[m - 1] += d * v[m]
                if m < max_m and u:
                    nv[m + 1] += u * v[m]
            v = nv
            out.append(list(v))
        return out

    def float_masses(self, horizon):
        """(masses, logscales): masses[n, m] * exp(logscales[n]) = p_n(0 -> m)."""
        max_m = horizon + 1
        down = np.empty(max_m + 1)
        stay = np.empty(max_m + 1)
        up = np.empty(max_m + 1)
        for m in range(max_m + 1):
            d, s, u = self.row(m)
            down[m], stay[m], up[m] = float(d), float(s), float(u)
        masses = np.zeros((horizon + 1, max_m + 1))
        logscales = np.zeros(horizon + 1)
        v = np.zeros(max_m + 1)
        v[0] = 1.0
        masses[0] = v
        for n in range(1, horizon + 1):
            nv = stay * v
            nv[:-1] += down[1:] * v[1:]
            nv[1:] += up[:-1] * v[:-1]
            total = nv.sum()
            v = nv / total
            logscales[n] = logscales[n - 1] + math.log(total)
            masses[n] = v
        return masses, logscales


def is_radial(measure, check_radius=8, budget=10**6):
    """Distance-projection chain for mu, or None if the projection fails.

    Requires single-syllable support (plus possibly e) with every step moving
    distance by at most 1, constant transition profiles on each sphere, and
    row stabilization before ``check_radius`` so the last row can be repeated.
    """
    group = measure.group
    for g, _ in measure.support:
        if len(g) > 1 or (len(g) == 1 and group.word_length(g) != 1):
            return None
    try:
        ball = group.ball(check_radius, metric="word", budget=budget)
    except BudgetError:
        return None
    dist = {g: group.word_length(g) for g in ball}
    profiles = {}
    for g in ball:
        m = dist[g]
        if m >= check_radius:
            continue
        down = stay = up = Fraction(0)
        for s, w in measure.support:
            h = group.multiply(g, s)
            dh = group.word_length(h)
            if dh == m - 1:
                down += w
            elif dh == m:
                stay += w
            elif dh == m + 1:
                up += w
            else:
                return None
        prof = (down, stay, up)
        if m in profiles and profiles[m] != prof:
            return None
        profiles[m] = prof
    rows = [profiles[m] for m in range(check_radius)]
    # need at least two identical trailing rows to certify the repeated tail
    if len(rows) < 3 or rows[-1] != rows[-2]:
        return None
    return RadialChain(rows=rows, checked_radius=check_radius)


@dataclass
class ReturnSequence:
    """p_n(e,e) for n = 0..horizon, exact or float-log, with provenance."""

    horizon: int
    method: str  # "exact" | "radial"
    values: list = None  # exact Fractions, when method == "exact"
    log_values: np.ndarray = None

    def __post_init__(self):
        if self.log_values is None and self.values is not None:
            self.log_values = np.array(
                [math.log(v) if v > 0 else -math.inf for v in self.values]
            )

    def nonzero_indices(self):
        return [n for n in range(1, self.horizon + 1) if self.log_values[n] > -math.inf]


def return_probabilities(measure, horizon, method="exact", budget=5 * 10**6):
    """p_n(e,e) for n = 0..horizon.

    The exact path may prune at ball radius ceil(horizon/2)*max_step: a path
    from e back to e within the horizon cannot reach farther.
    """
    if method == "exact":
        bound = ((horizon + 1) // 2) * measure.max_step_length
        dists = convolve_powers(measure, horizon, ball_bound=bound, budget=budget)
        vals = [d.mass(measure.group.identity) for d in dists]
        return ReturnSequence(horizon=horizon, method="exact", values=vals)
    if method == "radial":
        chain = is_radial(measure)
        if chain is None:
            raise NonRadialError(
                "radial method requested but the measure has no valid "
                "distance projection"
            )
        logs = chain.return_log_probs(horizon)
        return ReturnSequence(horizon=horizon, method="radial", log_values=logs)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class PeriodInfo:
    period: int
    first_positive: int


def detect_period(seq):
    """Period gcd{n >= 1 : p_n(e,e) > 0} over the available horizon."""
    positive = seq.nonzero_indices()
    if not positive:
        raise DegenerateInputError("no positive return probability found")
    p = 0
    for n in positive:
        p = math.gcd(p, n)
    return PeriodInfo(period=p, first_positive=positive[0])
