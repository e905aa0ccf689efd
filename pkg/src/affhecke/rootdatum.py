"""Based root data, their Weyl groups, parabolic sub-data and dominance cones.

Coordinates: ``X = Z^n`` and ``Y = Z^n`` with the standard pairing. Roots live
in ``X``, coroots in ``Y``; ``a = Y (x) R`` and ``a* = X (x) R``. The Weyl group
acts on ``X`` by integer matrices and on ``Y`` by their inverse transposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import (InfiniteRootSystem, InputError, InvalidGammaAction,
                     NotCrystallographic, NotReduced)
from .lattice import (AffineTorusAut, FiniteTorusSubgroup, IntMatrix, TorusPoint,
                      as_matrix, finite_intersection, identity, integer_inverse,
                      integer_kernel, matmul, matvec, rational_inverse, saturation,
                      smith_normal_form, transpose)

Vector = tuple[int, ...]


def pairing(x: Sequence, y: Sequence):
    return sum(a * b for a, b in zip(x, y))


@dataclass(frozen=True)
class WeylElement:
    index: int
    matrix: IntMatrix
    word: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.word)


class BasedRootDatum:
    """A based root datum ``(X, R, Y, R^vee, Delta)`` with ``X = Z^rank``.

    Build through :func:`build_root_datum` (simple roots and coroots) or
    :meth:`from_cartan`.
    """

    def __init__(self, rank: int, simple_roots: Sequence[Sequence[int]],
                 simple_coroots: Sequence[Sequence[int]], bound: int = 2000, name: str = ""):
        self.rank = rank
        self.name = name
        self.simple_roots: tuple[Vector, ...] = tuple(tuple(int(v) for v in a) for a in simple_roots)
        self.simple_coroots: tuple[Vector, ...] = tuple(tuple(int(v) for v in a) for a in simple_coroots)
        if len(self.simple_roots) != len(self.simple_coroots):
            raise InputError("need one coroot per simple root")
        for a in self.simple_roots + self.simple_coroots:
            if len(a) != rank:
                raise InputError(f"vector {a} does not have length {rank}")
        self._check_cartan()
        self._close_roots(bound)
        self._build_weyl(bound)

    @classmethod
    def from_cartan(cls, cartan: Sequence[Sequence[int]], name: str = "") -> "BasedRootDatum":
        """Root lattice datum: ``X`` has the simple roots as basis."""
        n = len(cartan)
        roots = [tuple(int(i == j) for j in range(n)) for i in range(n)]
        coroots = [tuple(int(cartan[i][j]) for i in range(n)) for j in range(n)]
        return cls(n, roots, coroots, name=name)

    # -- construction -------------------------------------------------------
    def _check_cartan(self):
        n = len(self.simple_roots)
        c = [[pairing(self.simple_roots[i], self.simple_coroots[j]) for j in range(n)]
             for i in range(n)]
        for i in range(n):
            if c[i][i] != 2:
                raise InputError(f"<alpha_{i+1}, alpha_{i+1}^vee> = {c[i][i]}, expected 2")
            for j in range(n):
                if i == j:
                    continue
                if c[i][j] > 0 or (c[i][j] == 0) != (c[j][i] == 0):
                    raise NotCrystallographic(f"invalid Cartan entries at ({i+1},{j+1})")
                if c[i][j] * c[j][i] > 3:
                    raise InfiniteRootSystem(f"simple roots {i+1},{j+1} generate an infinite system")
        self.cartan = tuple(tuple(r) for r in c)
        if n and _rank_q([list(a) for a in self.simple_roots]) < n:
            raise NotCrystallographic("simple roots are linearly dependent")

    def simple_reflection_matrix(self, i: int) -> IntMatrix:
        a, av = self.simple_roots[i], self.simple_coroots[i]
        n = self.rank
        return tuple(tuple(int(r == c) - a[r] * av[c] for c in range(n)) for r in range(n))

    def _close_roots(self, bound: int):
        n = len(self.simple_roots)
        roots: dict[Vector, tuple[Vector, tuple[int, ...]]] = {}
        for i in range(n):
            roots[self.simple_roots[i]] = (self.simple_coroots[i], tuple(int(i == j) for j in range(n)))
        frontier = list(roots)
        while frontier:
            nxt = []
            for b in frontier:
                bv, coeff = roots[b]
                for i in range(n):
                    a, av = self.simple_roots[i], self.simple_coroots[i]
                    k = pairing(b, av)
                    nb = tuple(x - k * y for x, y in zip(b, a))
                    nbv = tuple(x - pairing(a, bv) * y for x, y in zip(bv, av))
                    nc = tuple(c - (k if j == i else 0) for j, c in enumerate(coeff))
                    if nb in roots:
                        if roots[nb][0] != nbv:
                            raise NotCrystallographic("coroot assignment is not W-equivariant")
                        continue
                    roots[nb] = (nbv, nc)
                    nxt.append(nb)
                    if len(roots) > bound:
                        raise InfiniteRootSystem(f"more than {bound} roots")
            frontier = nxt
        for b, (_, c) in roots.items():
            if not (all(x >= 0 for x in c) or all(x <= 0 for x in c)):
                raise NotCrystallographic(f"root {b} is not a signed combination of simple roots")
            if tuple(2 * x for x in b) in roots:
                raise NotReduced(f"both {b} and its double are roots")
        pos = sorted((b for b, (_, c) in roots.items() if sum(c) > 0),
                     key=lambda b: (sum(roots[b][1]), tuple(-c for c in roots[b][1])))
        neg = [tuple(-x for x in b) for b in pos]
        order = pos + neg
        self.roots: tuple[Vector, ...] = tuple(order)
        self.coroots: tuple[Vector, ...] = tuple(roots[b][0] for b in order)
        self.root_coefficients: tuple[tuple[int, ...], ...] = tuple(roots[b][1] for b in order)
        self.n_positive = len(pos)
        self._root_index = {b: i for i, b in enumerate(order)}
        self._coroot_index = {b: i for i, b in enumerate(self.coroots)}
        self.coroot_coefficients = tuple(self._coroot_coeffs(cv) for cv in self.coroots)

    def _coroot_coeffs(self, cv: Vector) -> tuple[int, ...]:
        n = len(self.simple_roots)
        if n == 0:
            return ()
        # <alpha_i, cv> = sum_j c_j <alpha_i, alpha_j^vee>
        rhs = [pairing(a, cv) for a in self.simple_roots]
        inv = rational_inverse(self.cartan)
        sol = matvec(inv, rhs)
        return tuple(int(x) for x in sol)

    def _build_weyl(self, bound: int):
        n = self.rank
        gens = [self.simple_reflection_matrix(i) for i in range(len(self.simple_roots))]
        e = identity(n)
        elems = {e: ()}
        order = [e]
        frontier = [e]
        while frontier:
            nxt = []
            for m in frontier:
                for i, g in enumerate(gens):
                    h = matmul(m, g)
                    if h not in elems:
                        elems[h] = elems[m] + (i,)
                        order.append(h)
                        nxt.append(h)
                        if len(order) > bound:
                            raise InfiniteRootSystem("Weyl group exceeds bound")
            frontier = nxt
        self.weyl: tuple[WeylElement, ...] = tuple(
            WeylElement(k, m, elems[m]) for k, m in enumerate(order))
        self._weyl_index = {m: k for k, m in enumerate(order)}
        size = len(order)
        self._mul = [[self._weyl_index[matmul(a, b)] for b in order] for a in order]
        self._inv = [next(j for j in range(size) if self._mul[i][j] == 0) for i in range(size)]
        self._root_perm = [tuple(self._root_index[tuple(matvec(m, b))] for b in self.roots)
                           for m in order]

    # -- queries --------------------------------------------------------------
    @property
    def n_simple(self) -> int:
        return len(self.simple_roots)

    @property
    def positive_roots(self) -> tuple[Vector, ...]:
        return self.roots[: self.n_positive]

    @property
    def positive_coroots(self) -> tuple[Vector, ...]:
        return self.coroots[: self.n_positive]

    def root_index(self, b: Sequence[int]) -> int:
        return self._root_index[tuple(b)]

    def is_root(self, b: Sequence[int]) -> bool:
        return tuple(b) in self._root_index

    def coroot_of(self, b: Sequence[int]) -> Vector:
        return self.coroots[self._root_index[tuple(b)]]

    def weyl_mul(self, a: int, b: int) -> int:
        return self._mul[a][b]

    def weyl_inv(self, a: int) -> int:
        return self._inv[a]

    def weyl_index(self, matrix) -> int:
        return self._weyl_index[as_matrix(matrix)]

    def simple_reflection_index(self, i: int) -> int:
        return self._weyl_index[self.simple_reflection_matrix(i)]

    def act(self, w: int, x: Sequence[int]) -> Vector:
        return tuple(matvec(self.weyl[w].matrix, x))

    def act_dual(self, w: int, y: Sequence) -> tuple:
        return tuple(matvec(transpose(self.weyl[self._inv[w]].matrix), y))

    def root_perm(self, w: int) -> tuple[int, ...]:
        return self._root_perm[w]

    def inversion_set(self, w: int) -> tuple[int, ...]:
        """Positive roots ``beta`` with ``w^{-1} beta < 0``."""
        perm = self._root_perm[self._inv[w]]
        return tuple(i for i in range(self.n_positive) if perm[i] >= self.n_positive)

    @cached_property
    def two_rho(self) -> Vector:
        return tuple(sum(b[k] for b in self.positive_roots) for k in range(self.rank))

    @property
    def longest_length(self) -> int:
        return max(w.length for w in self.weyl)

    @property
    def is_semisimple(self) -> bool:
        return self.n_simple == self.rank

    def is_dominant(self, x: Sequence) -> bool:
        return all(pairing(x, av) >= 0 for av in self.simple_coroots)

    def coroot_decomposition(self, lam: Sequence) -> tuple[tuple[Fraction, ...], bool]:
        """Coefficients of ``lam`` (in ``a``) on the simple coroots, and whether it
        lies in their span."""
        n = self.n_simple
        if n == 0:
            return (), all(Fraction(v) == 0 for v in lam)
        inv = rational_inverse(self.cartan)
        rhs = [pairing(a, lam) for a in self.simple_roots]
        coeffs = tuple(Fraction(c) for c in matvec(inv, rhs))
        recon = [sum(coeffs[j] * self.simple_coroots[j][k] for j in range(n)) for k in range(self.rank)]
        return coeffs, all(Fraction(a) == b for a, b in zip(lam, recon))

    @cached_property
    def maximal_coroots(self) -> tuple[int, ...]:
        """Indices of the maximal positive coroots in the dominance order."""
        out = []
        for i in range(self.n_positive):
            c = self.coroot_coefficients[i]
            bigger = False
            for j in range(self.n_positive):
                d = self.coroot_coefficients[j]
                if j != i and all(a >= b for a, b in zip(d, c)):
                    bigger = True
                    break
            if not bigger:
                out.append(i)
        return tuple(out)

    def __repr__(self) -> str:
        return (f"BasedRootDatum({self.name or 'rank ' + str(self.rank)}: |R|={len(self.roots)}, "
                f"|W|={len(self.weyl)})")


def _rank_q(rows) -> int:
    from . import _linalg
    if not rows:
        return 0
    return _linalg.rank(_linalg.frac_array(rows))


def build_root_datum(simple_roots, simple_coroots, rank: int | None = None,
                     bound: int = 2000, name: str = "") -> BasedRootDatum:
    if rank is None:
        if not simple_roots:
            raise InputError("rank is required when there are no simple roots")
        rank = len(simple_roots[0])
    return BasedRootDatum(rank, simple_roots, simple_coroots, bound=bound, name=name)


def weyl_group(d: BasedRootDatum) -> list[tuple[IntMatrix, tuple[int, ...]]]:
    return [(w.matrix, w.word) for w in d.weyl]


# -- dominance cones ----------------------------------------------------------

CONES_A = ("a+", "a*+", "a-", "a--", "X+")


def dominance(d: BasedRootDatum, v: Sequence, cone: str) -> bool:
    """Exact membership of ``v`` in one of the cones ``a+, a*+, a-, a--, X+``."""
    v = tuple(Fraction(x) for x in v)
    if len(v) != d.rank:
        raise ValueError("dimension mismatch")
    if cone == "a+":
        return all(pairing(a, v) >= 0 for a in d.simple_roots)
    if cone == "a*+":
        return all(pairing(v, av) >= 0 for av in d.simple_coroots)
    if cone == "X+":
        return all(x.denominator == 1 for x in v) and dominance(d, v, "a*+")
    coeffs, in_span = d.coroot_decomposition(v)
    if cone == "a-":
        return in_span and all(c <= 0 for c in coeffs)
    if cone == "a--":
        return d.is_semisimple and in_span and all(c < 0 for c in coeffs)
    raise ValueError(f"unknown cone {cone!r}")


def in_cone_T(d: BasedRootDatum, t: TorusPoint, cone: str, Q=None) -> bool:
    """Membership of a rational torus point in ``T-, T--, T_un, T^Q_un, T_rs``."""
    if cone == "T-":
        return dominance(d, t.real, "a-")
    if cone == "T--":
        return dominance(d, t.real, "a--")
    if cone == "T_un":
        return t.is_unitary()
    if cone == "T_rs":
        return t.is_real_positive()
    if cone == "T^Q_un":
        if Q is None:
            raise ValueError("T^Q_un needs Q")
        pd = parabolic(d, Q)
        return t.is_unitary() and pd.in_TQ_upper(t)
    raise ValueError(f"unknown cone {cone!r}")


# -- parabolic sub-data -------------------------------------------------------

@dataclass
class ParabolicData:
    """Objects attached to a subset ``Q`` of the simple roots (indices)."""

    datum: BasedRootDatum
    Q: tuple[int, ...]
    roots_Q: tuple[int, ...]
    weyl_Q: tuple[int, ...]
    ann_lower: list[Vector]        # X cap (Q^vee)^perp: T_Q is where these vanish
    ann_upper: list[Vector]        # X cap QQ: T^Q is where these vanish
    to_lower: IntMatrix            # X -> X_Q in X_Q coordinates
    section: IntMatrix             # X_Q -> X with to_lower @ section = 1
    Y_lower_basis: IntMatrix       # basis of Y_Q = Y cap QQ^vee (rows, Y-coords)
    Y_upper_basis: list[Vector]    # basis of Y^Q = Y cap Q^perp
    datum_lower: BasedRootDatum    # R_Q on X_Q
    datum_upper: BasedRootDatum    # R^Q on X
    K: FiniteTorusSubgroup

    def x_lower(self, x: Sequence[int]) -> Vector:
        return tuple(matvec(self.to_lower, x))

    def lift(self, c: Sequence[int]) -> Vector:
        return tuple(matvec(self.section, c))

    def in_TQ_upper(self, t: TorusPoint) -> bool:
        return all(t.angle(b) == 0 and t.log_abs(b) == 0 for b in self.ann_upper)

    def in_TQ_lower(self, t: TorusPoint) -> bool:
        return all(t.angle(b) == 0 and t.log_abs(b) == 0 for b in self.ann_lower)

    def lower_point(self, t: TorusPoint) -> TorusPoint:
        """View ``t`` in ``T_Q`` as a point of ``Hom(X_Q, C^x)``."""
        return t.pullback(self.section)

    def upper_from_lower(self, c: TorusPoint) -> TorusPoint:
        """Embed a point of ``Hom(X_Q, C^x)`` into ``T`` via ``X -> X_Q``."""
        return c.pullback(self.to_lower)


_PARABOLIC_CACHE: dict = {}


def parabolic(d: BasedRootDatum, Q: Sequence[int]) -> ParabolicData:
    key = (id(d), tuple(sorted(Q)))
    hit = _PARABOLIC_CACHE.get(key)
    if hit is not None and hit.datum is d:
        return hit
    Q = tuple(sorted(set(Q)))
    if any(i < 0 or i >= d.n_simple for i in Q):
        raise InputError(f"Q={Q} is not a subset of the simple roots")
    n = d.rank
    q_roots = [d.simple_roots[i] for i in Q]
    q_coroots = [d.simple_coroots[i] for i in Q]
    ann_lower = integer_kernel(q_coroots, n)
    ann_upper = saturation(q_roots, n)
    k = len(Q)
    if k:
        u, dd, v = smith_normal_form(q_coroots)
        diag = [dd.matrix[i][i] for i in range(k)]
        uinv = integer_inverse(u.matrix)
        basis = tuple(tuple(uinv[i][j] * diag[j] for j in range(k)) for i in range(k))
        binv = rational_inverse(basis)
        to_lower = as_matrix(matmul(binv, q_coroots))
        section = tuple(tuple(v.matrix[i][j] for j in range(k)) for i in range(n))
        lower_roots = [tuple(matvec(to_lower, a)) for a in q_roots]
        lower_coroots = [basis[j] for j in range(k)]
    else:
        basis = ()
        to_lower = ()
        section = tuple(() for _ in range(n))
        lower_roots, lower_coroots = [], []
    datum_lower = BasedRootDatum(k, lower_roots, lower_coroots, name=f"{d.name}_Q{Q}")
    datum_upper = BasedRootDatum(n, q_roots, q_coroots, name=f"{d.name}^Q{Q}")
    roots_Q = tuple(d.root_index(b) for b in datum_upper.roots)
    weyl_Q = tuple(sorted(d.weyl_index(w.matrix) for w in datum_upper.weyl))
    y_upper = integer_kernel(q_roots, n)
    if n:
        K = finite_intersection(ann_lower, ann_upper, n)
    else:
        K = FiniteTorusSubgroup((), 1, 0)
    pd = ParabolicData(d, Q, roots_Q, weyl_Q, ann_lower, ann_upper, to_lower, section,
                       basis, y_upper, datum_lower, datum_upper, K)
    _PARABOLIC_CACHE[key] = pd
    return pd


def minimal_coset_reps(d: BasedRootDatum, Q: Sequence[int]) -> list[int]:
    """Minimal length representatives of ``W / W_Q``, shortest-then-lex order."""
    pd = parabolic(d, Q)
    reps = []
    for w in d.weyl:
        if all(d.root_perm(w.index)[d.root_index(d.simple_roots[i])] < d.n_positive for i in pd.Q):
            reps.append(w)
    reps.sort(key=lambda w: (w.length, w.word))
    return [w.index for w in reps]


# -- diagram automorphism groups ----------------------------------------------

@dataclass(frozen=True)
class GammaElt:
    """``Ad(gamma)``: ``theta_x -> z(x) theta_{L x}``; ``z`` as a torus point."""

    linear: IntMatrix
    z: TorusPoint

    def compose(self, other: "GammaElt") -> "GammaElt":
        """``Ad(self) o Ad(other)``."""
        lt = transpose(other.linear)
        return GammaElt(as_matrix(matmul(self.linear, other.linear)),
                        other.z * TorusPoint(matvec(lt, self.z.unitary), matvec(lt, self.z.real)))

    def twist(self, x: Sequence[int]):
        return self.z.value(x)

    def torus_aut(self) -> AffineTorusAut:
        """The action on ``T`` compatible with ``Ad``: ``t -> l(z)^{-1} l(t)``."""
        return AffineTorusAut(self.linear, self.z.transform(self.linear).inverse())

    def is_identity(self) -> bool:
        return self.linear == identity(len(self.linear)) and self.z.is_identity()


class GammaAction:
    """A finite group of diagram automorphisms of a based root datum.

    Each generator is a pair ``(L, z)``: ``L`` an automorphism of ``X``
    permuting the simple roots, ``z`` the twisting point with
    ``Ad(gamma) theta_x = z(x) theta_{L x}``.
    """

    def __init__(self, datum: BasedRootDatum, generators: Sequence, bound: int = 512):
        self.datum = datum
        gens = []
        for g in generators:
            if isinstance(g, GammaElt):
                gens.append(g)
            else:
                lin, z = g
                if not isinstance(z, TorusPoint):
                    z = TorusPoint(tuple(z))
                gens.append(GammaElt(as_matrix(lin), z))
        self.generators: tuple[GammaElt, ...] = tuple(gens)
        for g in self.generators:
            self._validate(g)
        e = GammaElt(identity(datum.rank), TorusPoint.identity(datum.rank))
        elems = [e]
        seen = {e: 0}
        frontier = [e]
        while frontier:
            nxt = []
            for a in frontier:
                for g in self.generators:
                    b = g.compose(a)
                    if b not in seen:
                        seen[b] = len(elems)
                        elems.append(b)
                        nxt.append(b)
                        if len(elems) > bound:
                            raise InvalidGammaAction("Gamma does not close into a finite group")
            frontier = nxt
        self.elements: tuple[GammaElt, ...] = tuple(elems)
        self._index = seen
        m = len(elems)
        self._mul = [[seen[elems[i].compose(elems[j])] for j in range(m)] for i in range(m)]
        self._inv = [next(j for j in range(m) if self._mul[i][j] == 0) for i in range(m)]
        self.generator_indices = tuple(seen[g] for g in self.generators)

    @classmethod
    def trivial(cls, datum: BasedRootDatum) -> "GammaAction":
        return cls(datum, [])

    def _validate(self, g: GammaElt):
        d = self.datum
        lin = g.linear
        if len(lin) != d.rank or abs(_det_int(lin)) != 1:
            raise InvalidGammaAction("linear part must be a unimodular matrix on X")
        dual = transpose(integer_inverse(lin))
        simple = set(d.simple_roots)
        for a, av in zip(d.simple_roots, d.simple_coroots):
            la = tuple(matvec(lin, a))
            if la not in simple:
                raise InvalidGammaAction(f"linear part sends simple root {a} to {la}")
            if tuple(matvec(dual, av)) != d.coroot_of(la):
                raise InvalidGammaAction("dual action does not match on coroots")
        for a in d.simple_roots:
            if g.z.angle(a) != 0 or g.z.log_abs(a) != 0:
                raise InvalidGammaAction(
                    f"z must be trivial on the root lattice; z({a}) != 1")

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, g: GammaElt) -> int:
        return self._index[g]

    def mul(self, a: int, b: int) -> int:
        return self._mul[a][b]

    def inv(self, a: int) -> int:
        return self._inv[a]

    def is_trivial(self) -> bool:
        return len(self.elements) == 1

    def simple_permutation(self, g: int) -> tuple[int, ...]:
        d = self.datum
        lin = self.elements[g].linear
        return tuple(d.simple_roots.index(tuple(matvec(lin, a))) for a in d.simple_roots)


def _det_int(m) -> int:
    from .lattice import det
    return int(det(m))


def weyl_gamma_group(d: BasedRootDatum, gamma: GammaAction | None = None) -> list[AffineTorusAut]:
    """The group ``W Gamma`` acting on ``T`` (W linearly, Gamma affinely)."""
    gens = [AffineTorusAut.linear_only(d.simple_reflection_matrix(i)) for i in range(d.n_simple)]
    if gamma is not None:
        gens += [g.torus_aut() for g in gamma.generators]
    if not gens:
        return [AffineTorusAut.identity(d.rank)]
    from .lattice import close_group
    return close_group(gens)


def invariant_form(d: BasedRootDatum, gamma: GammaAction | None = None,
                   dual: bool = False) -> tuple[tuple[Fraction, ...], ...]:
    """Gram matrix on ``a`` (or on ``a*`` when ``dual``) averaged over ``W Gamma``
    from the standard form."""
    n = d.rank
    mats = []
    lin_gamma = [identity(n)] if gamma is None else sorted({g.linear for g in gamma.elements})
    for w in d.weyl:
        for lg in lin_gamma:
            m = matmul(w.matrix, lg)
            mats.append(m if dual else transpose(integer_inverse(m)))
    g = [[Fraction(0)] * n for _ in range(n)]
    for a in mats:
        for i in range(n):
            for j in range(n):
                g[i][j] += sum(Fraction(a[k][i] * a[k][j]) for k in range(n))
    return tuple(tuple(x / len(mats) for x in row) for row in g)


def form_norm(gram, v: Sequence) -> float:
    n = len(v)
    s = sum(gram[i][j] * v[i] * v[j] for i in range(n) for j in range(n))
    return math.sqrt(float(s))
