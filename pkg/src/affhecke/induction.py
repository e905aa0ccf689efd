"""Parabolic induction, the groupoid of induction data, and extended quotients."""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (ActionUndefined, AlgebraMismatch, ConversionBoxExceeded, DomainMismatch,
                     InputError, RewriteBoxExceeded)
from .hecke import HeckeAlgebra, _word_in
from .lattice import (AffineTorusAut, FixedLocus, TorusPoint, fixed_locus, integer_inverse, matmul,
                      matvec)
from .modules import (FinModule, Weight, WeightMultiset, _block_exact, _number, character,
                      from_bernstein, multiset_of, same_character, spanning_words, weights)
from .rootdatum import (GammaAction, GammaElt, minimal_coset_reps, pairing,
                        parabolic)

_MEMO: dict = {}
_MEMO_LOCK = threading.Lock()


# -- Gamma_Q families and the condition on them -------------------------------------------

def _subsets(n: int) -> list[tuple[int, ...]]:
    return [Q for k in range(n + 1) for Q in itertools.combinations(range(n), k)]


def _stabilizes(gamma: GammaAction, g: int, Q: Sequence[int]) -> bool:
    perm = gamma.simple_permutation(g)
    return {perm[i] for i in Q} == set(Q)


@dataclass
class GammaQFamily:
    """``Q -> Gamma_Q`` as sets of element indices of a :class:`GammaAction`."""

    gamma: GammaAction
    subgroups: dict[tuple[int, ...], tuple[int, ...]]

    def __post_init__(self):
        fixed = {}
        for Q, sub in self.subgroups.items():
            s = tuple(sorted(set(sub) | {0}))
            for a in s:
                for b in s:
                    if self.gamma.mul(a, b) not in s:
                        raise InputError(f"Gamma_Q for Q={Q} is not a subgroup")
            fixed[tuple(sorted(Q))] = s
        self.subgroups = fixed

    def of(self, Q: Sequence[int]) -> tuple[int, ...]:
        return self.subgroups.get(tuple(sorted(Q)), (0,))

    @classmethod
    def trivial(cls, gamma: GammaAction) -> "GammaQFamily":
        return cls(gamma, {Q: (0,) for Q in _subsets(gamma.datum.n_simple)})

    @classmethod
    def stabilizers(cls, gamma: GammaAction) -> "GammaQFamily":
        """``Gamma_Q = Gamma(Q, Q)``, the stabilizer of ``Q``."""
        return cls(gamma, {Q: tuple(g for g in range(len(gamma)) if _stabilizes(gamma, g, Q))
                           for Q in _subsets(gamma.datum.n_simple)})


@dataclass
class ConditionReport:
    clauses: dict[int, bool]
    witnesses: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.clauses.values())


def _in_rational_span(v: Sequence[int], rows: Sequence[Sequence[int]]) -> bool:
    if not rows:
        return all(x == 0 for x in v)
    a = np.array(rows, dtype=float)
    b = np.vstack([a, np.array(v, dtype=float)])
    return np.linalg.matrix_rank(b) == np.linalg.matrix_rank(a)


def _trivial_on(t: TorusPoint, lattice: Iterable[Sequence[int]]) -> bool:
    return all(t.angle(b) == 0 and t.log_abs(b) == 0 for b in lattice)


def _sample_points(pd) -> list[TorusPoint]:
    """Identity and a few rational points of ``T^Q`` along each direction of ``Y^Q``."""
    n = pd.datum.rank
    pts = [TorusPoint.identity(n)]
    for y in pd.Y_upper_basis:
        pts.append(TorusPoint(tuple(Fraction(v, 3) for v in y), tuple(Fraction(v, 2) for v in y)))
        pts.append(TorusPoint(tuple(Fraction(v, 5) for v in y)))
    return pts


def check_condition_gamma(fam: GammaQFamily) -> ConditionReport:
    gamma = fam.gamma
    d = gamma.datum
    subsets = _subsets(d.n_simple)
    clauses = {1: True, 2: True, 3: True}
    wit: list[dict] = []
    for Q in subsets:
        for Q2 in subsets:
            if set(Q) < set(Q2):
                extra = set(fam.of(Q)) - set(fam.of(Q2))
                if extra:
                    clauses[1] = False
                    wit.append({"clause": 1, "Q": Q, "Q'": Q2, "gamma": min(extra)})
    for Q in subsets:
        pd = parabolic(d, Q)
        simple_Q = [d.simple_roots[i] for i in Q]
        for g in fam.of(Q):
            ge = gamma.elements[g]
            aut = ge.torus_aut()
            lin = ge.linear
            ok = all(all(pairing(matvec(lin, a), d.simple_coroots[i]) == 0 for i in Q) for a in pd.ann_lower)
            ok = ok and all(_in_rational_span(matvec(lin, b), simple_Q) for b in pd.ann_upper)
            ok = ok and _trivial_on(aut.translation, pd.ann_lower) and _trivial_on(aut.translation, pd.ann_upper)
            if not ok:
                clauses[2] = False
                wit.append({"clause": 2, "Q": Q, "gamma": g})
            mult = None
            for p in _sample_points(pd):
                k = aut(p) * p.inverse()
                in_K = pd.in_TQ_upper(k) and pd.in_TQ_lower(k)
                if not in_K or (mult is not None and k != mult):
                    clauses[3] = False
                    wit.append({"clause": 3, "Q": Q, "gamma": g, "point": str(p), "multiplier": str(k),
                                "in_K_Q": in_K})
                    break
                mult = k
    return ConditionReport(clauses, wit)


# -- lower algebras with Gamma_Q ---------------------------------------------------------------

def _project_gamma(alg: HeckeAlgebra, Q: tuple[int, ...], g: int) -> GammaElt:
    pd = parabolic(alg.datum, Q)
    ge = alg.gamma.elements[g]
    k = len(Q)
    if not _trivial_on(ge.z, pd.ann_lower):
        raise ActionUndefined(f"Gamma element {g} twists theta nontrivially on X cap (Q^vee)^perp")
    if not k:
        return GammaElt((), TorusPoint(()))
    lin = tuple(tuple(int(v) for v in row) for row in matmul(matmul(pd.to_lower, ge.linear), pd.section))
    return GammaElt(lin, ge.z.pullback(pd.section))


def lower_crossed(alg: HeckeAlgebra, Q: Sequence[int], gamma_Q: Sequence[int] = (0,)) -> HeckeAlgebra:
    """``H_Q x Gamma_Q`` (``Gamma_Q`` acting through its image on ``X_Q``)."""
    Q = tuple(sorted(Q))
    low = alg.lower(Q)
    gens = [_project_gamma(alg, Q, g) for g in sorted(set(gamma_Q))]
    gens = [g for g in gens if not g.is_identity()]
    if not gens:
        return low
    key = ("lowerG", Q, tuple(sorted(set(gamma_Q))))
    with alg._lock:
        if key not in alg._sub:
            alg._sub[key] = HeckeAlgebra(low.datum, low.q, gamma=GammaAction(low.datum, gens),
                                         box=alg.box, max_shift=alg.max_shift)
        return alg._sub[key]


def _lower_gamma_index(alg: HeckeAlgebra, Q, low: HeckeAlgebra, g: int) -> int:
    pg = _project_gamma(alg, Q, g)
    if pg.is_identity():
        return 0
    return low.gamma.index(pg)


# -- induction data -------------------------------------------------------------------------------

class InductionDatum:
    """``(Q, sigma, t)`` with ``sigma`` a module over ``H_Q x Gamma_Q`` and ``t in T^Q``."""

    def __init__(self, alg: HeckeAlgebra, Q: Sequence[int], sigma: FinModule, t=None,
                 family: GammaQFamily | None = None, tol: float = 1e-9):
        self.alg = alg
        self.Q = tuple(sorted(Q))
        self.family = family if family is not None else GammaQFamily.trivial(alg.gamma)
        if self.family.gamma is not alg.gamma:
            raise AlgebraMismatch("Gamma_Q family belongs to another Gamma")
        self.gamma_Q = self.family.of(self.Q)
        self.lower = lower_crossed(alg, self.Q, self.gamma_Q)
        if sigma.alg is not self.lower:
            raise AlgebraMismatch("sigma must be a module over H_Q x Gamma_Q")
        self.sigma = sigma
        n = alg.datum.rank
        self.t = Weight(tuple(Fraction(1) for _ in range(n))) if t is None else Weight.coerce(t)
        if self.t.rank != n:
            raise InputError(f"t must have {n} coordinates")
        pd = parabolic(alg.datum, self.Q)
        for b in pd.ann_upper:
            v = self.t.value(b)
            if (v != 1) if isinstance(v, Fraction) else abs(complex(v) - 1) > tol:
                raise DomainMismatch(f"t = {self.t} is not trivial on X cap QQ")

    def __repr__(self) -> str:
        return f"InductionDatum(Q={self.Q}, dim sigma={self.sigma.dim}, t={self.t})"


def gamma_coset_reps(gamma: GammaAction, sub: Sequence[int]) -> list[int]:
    """Representatives of ``Gamma / Gamma_Q`` (first element of each left coset)."""
    sub = tuple(sub)
    reps, seen = [], set()
    for c in range(len(gamma)):
        if c in seen:
            continue
        reps.append(c)
        seen.update(gamma.mul(c, s) for s in sub)
    return reps


def _coset_of(gamma: GammaAction, reps: list[int], sub: Sequence[int], g: int) -> tuple[int, int]:
    """``g = reps[i] * delta`` with ``delta in Gamma_Q``; returns ``(i, delta)``."""
    for i, c in enumerate(reps):
        delta = gamma.mul(gamma.inv(c), g)
        if delta in sub:
            return i, delta
    raise InputError("element outside every coset")


def _bernstein_right(alg: HeckeAlgebra, Q, c: int, gen_key, w: int):
    key = (id(alg), Q, c, gen_key, w)
    hit = _MEMO.get(key)
    if hit is not None and hit[0] is alg:
        return hit[1]
    G = alg.group
    g = G.s(gen_key) if isinstance(gen_key, str) else G.omega.generators[gen_key]
    h = alg.ad_gamma(alg.gamma.inv(c), alg.N(g)) * alg.Nw(w)
    try:
        terms = alg.to_bernstein(h, right=True)
    except ConversionBoxExceeded as exc:
        raise RewriteBoxExceeded(str(exc)) from None
    with _MEMO_LOCK:
        _MEMO[key] = (alg, terms)
    return terms


def induce(d: InductionDatum, check: bool = True) -> FinModule:
    """``ind_{H^Q x Gamma_Q}^{H x Gamma}(sigma (x) t)`` on the basis ``N_c N_w (x) v``."""
    alg, D, G = d.alg, d.alg.datum, d.alg.group
    Q = d.Q
    pd = parabolic(D, Q)
    sig, low = d.sigma, d.lower
    ga = alg.gamma
    creps = gamma_coset_reps(ga, d.gamma_Q)
    wq = minimal_coset_reps(D, Q)
    wq_pos = {w: j for j, w in enumerate(wq)}
    split: dict[int, tuple[int, int]] = {}
    up = pd.datum_upper
    for w in wq:
        for v in pd.weyl_Q:
            word = up.weyl[up.weyl_index(D.weyl[v].matrix)].word
            split[D.weyl_mul(w, v)] = (w, _word_in(low.datum, word))
    ds = sig.dim
    nb = len(creps) * len(wq) * ds
    exact = sig.exact and d.t.exact
    sig_fin = {v: sig.finite(v) for v in range(len(low.datum.weyl))}

    def block_index(ci, wj):
        return (ci * len(wq) + wj) * ds

    def image(gen_key):
        out = np.empty((nb, nb), dtype=object) if exact else np.zeros((nb, nb), dtype=complex)
        if exact:
            out[...] = Fraction(0)
        for ci, c in enumerate(creps):
            for wj, w in enumerate(wq):
                col = block_index(ci, wj)
                for term in _bernstein_right(alg, Q, c, gen_key, w):
                    coef = _number(term.coefficient) * d.t.value(term.x)
                    w2, v = split[term.w]
                    blk = sig_fin[v] @ sig.theta(pd.x_lower(term.x)) if Q else sig_fin[v]
                    row = block_index(ci, wq_pos[w2])
                    if exact and isinstance(coef, Fraction):
                        out[row:row + ds, col:col + ds] += blk * coef
                    else:
                        if exact:
                            raise InputError("inexact coefficient while inducing exactly")
                        out[row:row + ds, col:col + ds] += blk.astype(complex) * complex(coef)
        return out

    s_imgs = {lab: image(lab) for lab in G.labels}
    om_imgs = [image(k) for k in range(len(G.omega.generators))]
    g_imgs = []
    for gidx in ga.generator_indices:
        out = np.empty((nb, nb), dtype=object) if exact else np.zeros((nb, nb), dtype=complex)
        if exact:
            out[...] = Fraction(0)
        for ci, c in enumerate(creps):
            ci2, delta = _coset_of(ga, creps, d.gamma_Q, ga.mul(gidx, c))
            dl = ga.elements[delta].linear
            dl_inv = integer_inverse(dl)
            sdelta = sig.gamma_matrix(_lower_gamma_index(alg, Q, low, delta))
            for wj, w in enumerate(wq):
                w2 = D.weyl_index(matmul(matmul(dl, D.weyl[w].matrix), dl_inv))
                row, col = block_index(ci2, wq_pos[w2]), block_index(ci, wj)
                out[row:row + ds, col:col + ds] = sdelta if exact else sdelta.astype(complex)
        g_imgs.append(out)
    return FinModule(alg, s_imgs, om_imgs, g_imgs, exact=exact, check=check,
                     name=f"ind(Q={Q}, t={d.t})")


def weights_of_induced(d: InductionDatum) -> WeightMultiset:
    """Predicted weights ``{c w (t * wt)}``: ``wt`` over weights of ``sigma`` pulled back to ``X``."""
    alg, D = d.alg, d.alg.datum
    pd = parabolic(D, d.Q)
    ws = weights(d.sigma)
    ga = alg.gamma
    creps = gamma_coset_reps(ga, d.gamma_Q)
    wq = minimal_coset_reps(D, d.Q)
    out = []
    for mu, mult in ws.entries:
        base = d.t * (mu.pullback(pd.to_lower) if d.Q else Weight(tuple(Fraction(1) for _ in range(D.rank))))
        for c in creps:
            aut = ga.elements[c].torus_aut()
            for w in wq:
                p = base.transform(D.weyl[w].matrix).apply(aut) if D.rank else base
                out.extend([p] * mult)
    return multiset_of(out, exact=ws.exact and d.t.exact)


# -- the groupoid ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupoidArrow:
    """``(g, u)`` with ``g = w gamma`` in ``W Gamma`` sending ``Q`` to ``Q2`` and ``u in K_Q``."""

    Q: tuple[int, ...]
    Q2: tuple[int, ...]
    w: int
    gamma: int
    u: TorusPoint


def _wg_matrix(alg: HeckeAlgebra, w: int, g: int):
    return matmul(alg.datum.weyl[w].matrix, alg.gamma.elements[g].linear)


def _wg_aut(alg: HeckeAlgebra, w: int, g: int) -> AffineTorusAut:
    return AffineTorusAut.linear_only(alg.datum.weyl[w].matrix) @ alg.gamma.elements[g].torus_aut()


def _image_of_Q(alg: HeckeAlgebra, m, Q) -> tuple[int, ...] | None:
    d = alg.datum
    out = []
    for i in Q:
        img = tuple(matvec(m, d.simple_roots[i]))
        if img not in d.simple_roots:
            return None
        out.append(d.simple_roots.index(img))
    return tuple(sorted(out))


def groupoid_arrows(alg: HeckeAlgebra, Q: Sequence[int], Q2: Sequence[int]) -> list[GroupoidArrow]:
    Q, Q2 = tuple(sorted(Q)), tuple(sorted(Q2))
    K = parabolic(alg.datum, Q).K.elements() if alg.datum.rank else [TorusPoint(())]
    out = []
    for w in alg.datum.weyl:
        for g in range(len(alg.gamma)):
            if _image_of_Q(alg, _wg_matrix(alg, w.index, g), Q) == Q2:
                out.extend(GroupoidArrow(Q, Q2, w.index, g, u) for u in K)
    return out


def compose(alg: HeckeAlgebra, a2: GroupoidArrow, a1: GroupoidArrow) -> GroupoidArrow:
    """``(g', u') (g, u) = (g' g, g^{-1}(u') u)``."""
    if a1.Q2 != a2.Q:
        raise ActionUndefined("arrows are not composable")
    d, ga = alg.datum, alg.gamma
    l2 = ga.elements[a2.gamma].linear
    conj = matmul(matmul(l2, d.weyl[a1.w].matrix), integer_inverse(l2))
    w = d.weyl_mul(a2.w, d.weyl_index(conj))
    g = ga.mul(a2.gamma, a1.gamma)
    m1 = _wg_matrix(alg, a1.w, a1.gamma)
    u = a2.u.pullback(m1) * a1.u if d.rank else a1.u
    return GroupoidArrow(a1.Q, a2.Q2, w, g, u)


def groupoid_act(a: GroupoidArrow, d: InductionDatum) -> InductionDatum:
    """``(g, u) . (Q, sigma, t) = (g(Q), sigma o psi_u^{-1} o psi_g^{-1}, g(u t))``."""
    alg, D = d.alg, d.alg.datum
    if a.Q != d.Q:
        raise ActionUndefined("arrow does not start at Q")
    m = _wg_matrix(alg, a.w, a.gamma)
    if _image_of_Q(alg, m, d.Q) != a.Q2:
        raise ActionUndefined("g(Q) is not a subset of the simple roots")
    Q, Q2 = d.Q, a.Q2
    pd, pd2 = parabolic(D, Q), parabolic(D, Q2)
    ga = alg.gamma
    sig = d.sigma
    minv = integer_inverse(m)
    fam = d.family
    low2 = lower_crossed(alg, Q2, fam.of(Q2))
    uq = pd.lower_point(a.u) if Q else None
    thetas = []
    for j in range(len(Q2)):
        e = tuple(int(i == j) for i in range(len(Q2)))
        y = tuple(matvec(pd.to_lower, matvec(minv, pd2.lift(e))))
        c = 1 / uq.value(y)
        th = sig.theta(y)
        thetas.append(th * c if sig.exact and isinstance(c, Fraction) else th.astype(complex) * complex(c))
    fins = []
    for jj, j in enumerate(Q2):
        src = tuple(matvec(minv, D.simple_roots[j]))
        i = Q.index(D.simple_roots.index(src))
        fins.append(sig.s_images[f"s{i + 1}"])
    gam = {}
    wm = D.weyl[a.w].matrix
    for k, g2 in enumerate(low2.gamma.generator_indices):
        target = low2.gamma.elements[g2]
        # find an element of Gamma_{Q2} projecting to this generator
        dq = next(g for g in fam.of(Q2) if _project_gamma(alg, Q2, g) == target)
        dl = ga.elements[dq].linear
        if matmul(matmul(dl, wm), integer_inverse(dl)) != wm:
            raise ActionUndefined("Gamma_Q' element does not commute with the Weyl part of g")
        back = ga.mul(ga.mul(ga.inv(a.gamma), dq), a.gamma)
        if back not in fam.of(Q):
            raise ActionUndefined("conjugated Gamma_Q' element is not in Gamma_Q")
        gam[k] = sig.gamma_matrix(_lower_gamma_index(alg, Q, d.lower, back))
    exact = sig.exact and all(t.dtype == object for t in thetas)
    sigma2 = from_bernstein(low2, thetas, fins, gam, exact=exact, name=f"{sig.name}^g")
    t2 = (Weight.from_point(a.u) * d.t).apply(_wg_aut(alg, a.w, a.gamma)) if D.rank else d.t
    return InductionDatum(alg, Q2, sigma2, t2, fam)


def same_constituents(d1: InductionDatum, d2: InductionDatum, box: int = 1, tol: float = 1e-8) -> bool:
    if d1.alg is not d2.alg:
        raise AlgebraMismatch("data over different algebras")
    words = spanning_words(d1.alg, box)
    return same_character(character(induce(d1), words), character(induce(d2), words), tol)


def fourier_specialize(h, data: Sequence) -> np.ndarray:
    """Block-diagonal matrix of ``h`` acting on ``pi(Q, sigma, t)`` for each datum."""
    mods = [induce(x) if isinstance(x, InductionDatum) else x for x in data]
    blocks = [m.act(h) for m in mods]
    if all(b.dtype == object for b in blocks):
        return _block_exact(blocks)
    return sla.block_diag(*[b.astype(complex) for b in blocks])


# -- extended quotient ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtQuotEntry:
    w: int
    gamma: int
    word: tuple[int, ...]
    class_size: int
    dim: int
    components: int
    survives: bool
    surviving_elements: int


def extended_quotient(alg_or_datum, gamma: GammaAction | None = None,
                      family: GammaQFamily | None = None) -> list[ExtQuotEntry]:
    """One entry per ``W Gamma``-conjugacy class with the fixed locus of a representative."""
    if isinstance(alg_or_datum, HeckeAlgebra):
        d = alg_or_datum.datum
        gamma = alg_or_datum.gamma if gamma is None else gamma
    else:
        d = alg_or_datum
        gamma = GammaAction.trivial(d) if gamma is None else gamma
    family = family if family is not None else GammaQFamily.trivial(gamma)
    elems = [(w.index, g) for w in d.weyl for g in range(len(gamma))]

    def mul(a, b):
        lg = gamma.elements[a[1]].linear
        conj = matmul(matmul(lg, d.weyl[b[0]].matrix), integer_inverse(lg))
        return (d.weyl_mul(a[0], d.weyl_index(conj)), gamma.mul(a[1], b[1]))

    def inv(a):
        return next(b for b in elems if mul(a, b) == (0, 0))

    inverse = {a: inv(a) for a in elems}
    proper = [Q for Q in _subsets(d.n_simple) if len(Q) < d.n_simple]
    weyl_Q = {Q: set(parabolic(d, Q).weyl_Q) for Q in proper}

    def survives(a):
        return not any(a[0] in weyl_Q[Q] and a[1] in family.of(Q) for Q in proper)

    seen, out = set(), []
    for a in elems:
        if a in seen:
            continue
        cls = {mul(mul(k, a), inverse[k]) for k in elems}
        seen |= cls
        aut = AffineTorusAut.linear_only(d.weyl[a[0]].matrix) @ gamma.elements[a[1]].torus_aut() \
            if d.rank else None
        fl = fixed_locus(aut) if aut is not None else FixedLocus(0, 1, None)
        nsurv = sum(1 for b in cls if survives(b))
        out.append(ExtQuotEntry(a[0], a[1], d.weyl[a[0]].word, len(cls), fl.dim, fl.components,
                                nsurv > 0, nsurv))
    return out
