"""Independent oracles used to freeze expected values in the test suite.

Everything here is deliberately written against its own representations
(reduced words as strings, closed-form generating functions, plain BFS)
rather than the package's data structures, so agreement is meaningful.
"""

import math
from fractions import Fraction

# -- brute-force simple random walk on the rank-2 free group ------------------

_LETTERS = "aAbB"
_INVERSE = {"a": "A", "A": "a", "b": "B", "B": "b"}


def _append(word, letter):
    if word and word[-1] == _INVERSE[letter]:
        return word[:-1]
    return word + letter


def _endpoint_counts(n):
    """Map reduced word -> number of length-n generator paths reaching it."""
    counts = {"": 1}
    for _ in range(n):
        nxt = {}
        for word, c in counts.items():
            for letter in _LETTERS:
                w = _append(word, letter)
                nxt[w] = nxt.get(w, 0) + c
        counts = nxt
    return counts


def f2_return_probability(n):
    """p_n(e,e) for SRW on the rank-2 free group, by path counting.

    Meet in the middle: paths of length n returning to e split into a
    length-floor(n/2) path to some word w and a length-ceil(n/2) path from w
    back, counted via inverses.
    """
    if n == 0:
        return Fraction(1)
    half = n // 2
    rest = n - half
    first = _endpoint_counts(half)
    second = _endpoint_counts(rest)
    total = 0
    for word, c in first.items():
        back = "".join(_INVERSE[ch] for ch in reversed(word))
        total += c * second.get(back, 0)
    return Fraction(total, 4**n)


# -- closed forms for SRW on the rank-2 free group ----------------------------

F2_RADIUS = 2.0 * math.sqrt(3.0) / 3.0  # R: reciprocal of the Kesten norm


def f2_first_passage(r):
    """F(e,a|r): probability generating function of ever stepping one out."""
    return (1.0 - math.sqrt(1.0 - 0.75 * r * r)) / (1.5 * r)


def f2_green(r):
    """G(e,e|r) on the 4-regular tree: each step out returns with weight f,
    so G = 1 / (1 - 4 (r/4) f) = 1 / (1 - r f)."""
    return 1.0 / (1.0 - r * f2_first_passage(r))


def z2z2z2_radius():
    """R for uniform involutions on the triple free product of order-2 groups."""
    return 3.0 / (2.0 * math.sqrt(2.0))


def z_log_return_probs(n_max):
    """log p_n for SRW on the integers, via the exact binomial formula."""
    out = [-math.inf] * (n_max + 1)
    out[0] = 0.0
    for n in range(2, n_max + 1, 2):
        k = n // 2
        out[n] = math.lgamma(n + 1) - 2 * math.lgamma(k + 1) - n * math.log(2)
    return out


# -- independent relative-sphere BFS ------------------------------------------


def bfs_relative_spheres(group, n_max, cap=None):
    """Sphere lists by plain BFS over capped syllable moves, from scratch."""
    moves = []
    for fid, factor in enumerate(group.factors):
        limit = cap if factor.kind == "lattice" else None
        for p in factor.nontrivial_elements(limit):
            moves.append(((fid, p),))
    dist = {(): 0}
    frontier = [()]
    for d in range(1, n_max + 1):
        nxt = []
        for g in frontier:
            for m in moves:
                h = group.multiply(g, m)
                if h not in dist:
                    # respect the cap on every syllable, not just the new one
                    if cap is not None and any(
                        group.factors[fid].length(p) > cap for fid, p in h
                    ):
                        continue
                    dist[h] = d
                    nxt.append(h)
        frontier = nxt
    spheres = [[] for _ in range(n_max + 1)]
    for g, d in dist.items():
        spheres[d].append(g)
    return spheres
