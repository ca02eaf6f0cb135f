"""Green potential on the coded shift, transfer matrices, and pressure.

The potential of a nonempty symbol path x with element g and first syllable
g_1 is phi_r(x) = log( H(e,g|r) / H(g_1,g|r) ), with H(x,y|r) the product of
the two Green functions between x and y.  Summing phi_r along the shift
telescopes, which yields the sphere identity

    (L_r^n 1)(empty) * H(e,e|r) = sum over the relative n-sphere of H(e,g|r)

used here both as a consistency check and as the route to the Gurevich
pressure P(r) = log of the leading transfer eigenvalue.

The empty path is excluded from the potential's domain; iteration at the
empty word is seeded directly with the single-symbol values.
"""

import json
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .automaton import build_automaton
from .errors import NonConvergenceError


def potential_eval(evaluator, path, r):
    """phi_r of a nonempty symbol path, via Green function ratios."""
    if not path:
        raise ValueError("the potential is not defined on the empty path")
    group = evaluator.group
    g = tuple(path)
    num = evaluator.h_value(g, r)
    if len(path) == 1:
        den = evaluator.h_value((), r)
    else:
        den = evaluator.h_value(g[1:], r)
    if num <= 0 or den <= 0:
        raise NonConvergenceError(
            "Green function vanished in a potential ratio",
            diagnostics={"path": path, "r": r},
        )
    return math.log(num / den)


def _representative(symbols, start, depth, follows):
    """A canonical depth-``depth`` continuation beginning with ``start``."""
    path = [start]
    while len(path) < depth:
        nxt = next(s for s in symbols if follows(path[-1], s))
        path.append(nxt)
    return tuple(path)


@dataclass
class TransferMatrix:
    r: float
    cap: int
    depth: int
    symbols: tuple
    matrix: np.ndarray  # matrix[i, j] = e^{phi_r(symbols[i] . rep(symbols[j]))}
    seed: np.ndarray  # seed[i] = e^{phi_r((symbols[i],))}

    def index(self, symbol):
        return self.symbols.index(symbol)


def build_transfer(evaluator, r, cap, depth=3):
    """Truncated transfer matrix over the cap-D symbol set at cylinder depth m."""
    auto = build_automaton(evaluator.group, cap)
    symbols = auto.symbols()
    n = len(symbols)
    mat = np.zeros((n, n))
    seed = np.zeros(n)
    for i, s in enumerate(symbols):
        seed[i] = math.exp(potential_eval(evaluator, (s,), r))
        for j, t in enumerate(symbols):
            if not auto.follows(s, t):
                continue
            rep = _representative(symbols, t, depth, auto.follows)
            mat[i, j] = math.exp(potential_eval(evaluator, (s,) + rep, r))
    return TransferMatrix(
        r=float(r), cap=cap, depth=depth, symbols=symbols, matrix=mat, seed=seed
    )


def transfer_apply(tm, f):
    """One application of the truncated transfer operator to a symbol vector."""
    f = np.asarray(f, dtype=float)
    if f.shape != (len(tm.symbols),):
        raise ValueError("vector length must match the symbol set")
    return tm.matrix @ f


def iterate_empty(tm, n_max):
    """(L_r^k 1)(empty word) for k = 1..n_max.

    v_k[s] accumulates the Birkhoff weights of length-k paths whose first
    symbol is s; the value at the empty word is the sum over s.
    """
    out = []
    v = tm.seed.copy()
    out.append(float(v.sum()))
    for _ in range(n_max - 1):
        v = tm.matrix @ v
        out.append(float(v.sum()))
    return out


def sphere_identity_check(evaluator, r, cap, n_max, depth=3):
    """Compare (L^n 1)(empty)*H(e,e|r) against direct relative-sphere sums.

    Returns a list of (n, transfer_value, direct_value, rel_err).
    """
    tm = build_transfer(evaluator, r, cap, depth)
    lhs_seq = iterate_empty(tm, n_max)
    hee = evaluator.h_value((), r)
    auto = build_automaton(evaluator.group, cap)
    rows = []
    for n in range(1, n_max + 1):
        direct = sum(
            evaluator.h_value(g, r) for _, g in auto.enumerate_sphere(n)
        )
        lhs = lhs_seq[n - 1] * hee
        rel = abs(lhs - direct) / direct if direct else math.inf
        rows.append((n, lhs, direct, rel))
    return rows


@dataclass
class ComponentInfo:
    size: int
    eigenvalue: float
    is_maximal: bool


@dataclass
class PressureEstimate:
    r: float
    eigenvalue: float
    value: float  # log eigenvalue
    cap: int
    depth: int
    ladder: list  # [(cap, depth, P_hat)]
    stabilized: bool
    components: list = field(default_factory=list)
    semisimple_proxy: bool = True

    def to_json(self):
        return json.dumps(
            {
                "r": self.r,
                "eigenvalue": self.eigenvalue,
                "pressure": self.value,
                "cap": self.cap,
                "depth": self.depth,
                "ladder": self.ladder,
                "stabilized": self.stabilized,
                "semisimple_proxy": self.semisimple_proxy,
                "components": [
                    {"size": c.size, "eigenvalue": c.eigenvalue, "maximal": c.is_maximal}
                    for c in self.components
                ],
            },
            indent=2,
        )


def _power_eigenvalue(mat, tol=1e-10, max_iter=10**5):
    """Perron root of a non-negative matrix by shifted power iteration.

    The identity shift makes periodic (e.g. bipartite) sparsity patterns
    aperiodic without moving the Perron eigenvector.
    """
    n = mat.shape[0]
    if n == 0 or not mat.any():
        return 0.0
    shift = float(mat.max())
    shifted = mat + shift * np.eye(n)
    v = np.full(n, 1.0 / math.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        w = shifted @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        w /= norm
        new_lam = float(w @ (shifted @ w))
        if abs(new_lam - lam) < tol:
            return new_lam - shift
        lam = new_lam
        v = w
    raise NonConvergenceError("power iteration did not converge")


def pressure(evaluator, r, ladder=((3, 2), (3, 3), (4, 3)), stab_tol=5e-3):
    """Gurevich pressure estimate with a (cap, depth) stabilization ladder.

    The leading eigenvalue is computed per strongly connected component of
    the symbol graph; the estimate is the maximum.  The semisimplicity proxy
    checks that no maximal component can reach another maximal component.
    """
    rungs = []
    tm = None
    for cap, depth in ladder:
        tm = build_transfer(evaluator, r, cap, depth)
        lam = _power_eigenvalue(tm.matrix)
        rungs.append((cap, depth, math.log(lam) if lam > 0 else -math.inf))
    graph = nx.DiGraph()
    n = len(tm.symbols)
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(n):
            if tm.matrix[i, j] > 0:
                graph.add_edge(j, i)  # j can be followed by i in a path
    components = []
    comp_lams = []
    sccs = list(nx.strongly_connected_components(graph))
    for comp in sccs:
        idx = sorted(comp)
        sub = tm.matrix[np.ix_(idx, idx)]
        comp_lams.append(_power_eigenvalue(sub))
    top = max(comp_lams) if comp_lams else 0.0
    maximal = [lam >= top * (1 - 1e-9) for lam in comp_lams]
    for comp, lam, mx in zip(sccs, comp_lams, maximal):
        components.append(ComponentInfo(size=len(comp), eigenvalue=lam, is_maximal=mx))
    cond = nx.condensation(graph, sccs)
    semisimple = True
    for a in cond.nodes:
        for b in cond.nodes:
            if a != b and maximal[a] and maximal[b] and nx.has_path(cond, a, b):
                semisimple = False
    p_hat = rungs[-1][2]
    stabilized = (
        len(rungs) > 1 and abs(rungs[-1][2] - rungs[-2][2]) < stab_tol
    )
    return PressureEstimate(
        r=float(r),
        eigenvalue=math.exp(p_hat) if p_hat > -math.inf else 0.0,
        value=p_hat,
        cap=rungs[-1][0],
        depth=rungs[-1][1],
        ladder=rungs,
        stabilized=stabilized,
        components=components,
        semisimple_proxy=semisimple,
    )


def partition_function(tm, n, symbol):
    """Z_n at a marked symbol by explicit periodic-orbit enumeration.

    Sums the Birkhoff weight e^{S_n phi} over length-n symbol cycles through
    ``symbol``, with phi read off the transfer matrix entries.  Independent
    of matrix powers; used as a small-n consistency check.
    """
    syms = tm.symbols
    start = tm.index(symbol)
    follows = lambda i, j: syms[i][0] != syms[j][0]
    total = 0.0
    stack = [((start,), 1.0)]
    while stack:
        cycle, weight = stack.pop()
        if len(cycle) == n:
            if follows(cycle[-1], cycle[0]):
                total += weight * tm.matrix[cycle[-1], cycle[0]]
            continue
        for j in range(len(syms)):
            if follows(cycle[-1], j):
                stack.append((cycle + (j,), weight * tm.matrix[cycle[-1], j]))
    if n == 1:
        # a period-1 cycle must be self-admissible, which alternation forbids
        return 0.0
    return total


def partition_growth(tm, n, symbol, period=2):
    """log( Z_{n+period}(s) / Z_n(s) ) / period: a bias-free growth rate.

    The raw quantity log Z_n(s)/n carries the marked-symbol weight as a
    log u(s)/n bias; the ratio over one symbol-graph period cancels it and
    converges to the pressure.  For two-factor products the symbol graph is
    bipartite, so odd-length cycles vanish and n must match the period's
    parity.
    """
    z0 = partition_function(tm, n, symbol)
    z1 = partition_function(tm, n + period, symbol)
    if z0 <= 0 or z1 <= 0:
        raise ValueError("no periodic orbits at the requested lengths")
    return math.log(z1 / z0) / period


def recurrence_band(tm, n_max=8):
    """lambda^{-n} (L^n 1)(empty) for n = 1..n_max; bounded for recurrence."""
    lam = _power_eigenvalue(tm.matrix)
    seq = iterate_empty(tm, n_max)
    return [v / lam**n for n, v in enumerate(seq, start=1)]
