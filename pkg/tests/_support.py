"""Shared data and independent oracles for the test suite."""

import random
from fractions import Fraction

from affhecke.data import a1, cartan_datum, gl2
from affhecke.hecke import HeckeAlgebra
from affhecke.laurent import LaurentScalar


def suite_data():
    return {"A1": a1(), "A1_wt": a1("weight"), "GL2": gl2(), "A2": cartan_datum("A2"),
            "B2": cartan_datum("B2")}


def naive_mul(alg, a, b):
    """``N_a N_b`` from the reduced word of ``a`` and the two-case rule for ``N_s N_w``."""
    G = alg.group
    word, om = G.reduced_word(a)
    cur = {G.mul(om, b): LaurentScalar.const(1)}
    for lab in reversed(word):
        s = G.s(lab)
        gap = alg.qhalf(lab) - alg.qhalf(lab).inverse()
        nxt = {}
        for w, c in cur.items():
            sw = G.mul(s, w)
            nxt[sw] = nxt.get(sw, LaurentScalar()) + c
            if G.length(sw) < G.length(w):
                nxt[w] = nxt.get(w, LaurentScalar()) + c * gap
        cur = {k: v for k, v in nxt.items() if v}
    return cur


def random_elt(alg, rng, max_length=4, terms=3, coeff=3):
    G = alg.group
    h = alg.zero()
    for _ in range(rng.randint(1, terms)):
        g = G.random_element(rng, max_length)
        h = h + alg.N(g) * Fraction(rng.randint(-coeff, coeff) or 1)
    return h


def frac_rank(rows):
    """Exact rank of a list of dict-rows (column key -> Fraction)."""
    pivots = {}
    rank = 0
    for r in rows:
        r = {k: Fraction(v) for k, v in r.items() if v}
        while r:
            k = min(r)
            if k not in pivots:
                pivots[k] = {c: v / r[k] for c, v in r.items()}
                rank += 1
                break
            p = pivots[k]
            f = r[k]
            for c, v in p.items():
                nv = r.get(c, 0) - f * v
                if nv:
                    r[c] = nv
                else:
                    r.pop(c, None)
    return rank


def formal(d, gamma=None, box=8):
    return HeckeAlgebra(d, gamma=gamma, box=box)


def evaluated(d, value, gamma=None, box=8):
    alg = HeckeAlgebra(d, gamma=gamma, box=box)
    q = alg.q.evaluated({n: Fraction(value) for n in alg.q.names})
    return HeckeAlgebra(d, q, gamma=gamma, box=box)


def rng(seed=0):
    return random.Random(seed)
