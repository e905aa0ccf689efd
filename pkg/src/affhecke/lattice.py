"""Integer lattices, Smith normal form, and rational points of complex tori.

A torus ``T = Hom(X, C^x)`` with ``X = Z^n`` is handled through its rational
points. A point ``t`` is stored by its polar decomposition: a *unitary* part
``u`` in ``(Q/Z)^n`` and a *real* part ``r`` in ``Q^n`` so that

    t(x) = exp(2 pi i <u, x>) * exp(<r, x>)

All objects here are immutable and all operations exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, prod
from typing import Iterable, Sequence

import cmath

from .errors import InfiniteIntersection, NotFiniteGroup, NotLiftable

IntMatrix = tuple[tuple[int, ...], ...]


def as_matrix(rows: Iterable[Iterable[int]]) -> IntMatrix:
    return tuple(tuple(int(v) for v in row) for row in rows)


def identity(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> tuple:
    if not a:
        return ()
    inner = len(b)
    cols = len(b[0]) if b else 0
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols))
        for i in range(len(a))
    )


def matvec(a: Sequence[Sequence], v: Sequence) -> tuple:
    return tuple(sum(r * x for r, x in zip(row, v)) for row in a)


def transpose(a: Sequence[Sequence]) -> tuple:
    if not a:
        return ()
    return tuple(zip(*a))


def det(a: Sequence[Sequence]) -> Fraction:
    n = len(a)
    m = [[Fraction(v) for v in row] for row in a]
    d = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            d = -d
        d *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            if f:
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return d


def rational_inverse(a: Sequence[Sequence]) -> tuple[tuple[Fraction, ...], ...]:
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[p] = m[p], m[c]
        pv = m[c][c]
        m[c] = [x / pv for x in m[c]]
        for i in range(n):
            if i != c and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return tuple(tuple(row[n:]) for row in m)


def integer_inverse(a: Sequence[Sequence[int]]) -> IntMatrix:
    """Inverse of a unimodular integer matrix."""
    inv = rational_inverse(a)
    if any(v.denominator != 1 for row in inv for v in row):
        raise ValueError("matrix is not unimodular")
    return tuple(tuple(int(v) for v in row) for row in inv)


@dataclass(frozen=True)
class Lattice:
    """The lattice ``Z^rank`` with its standard basis."""

    rank: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be nonnegative")


@dataclass(frozen=True)
class LatticeMap:
    """A Z-linear map given by an integer matrix (rows index target coordinates)."""

    matrix: IntMatrix
    source: Lattice
    target: Lattice

    @classmethod
    def from_rows(cls, rows, source_rank: int | None = None) -> "LatticeMap":
        m = as_matrix(rows)
        n_src = len(m[0]) if m else (source_rank or 0)
        return cls(m, Lattice(n_src), Lattice(len(m)))

    def __post_init__(self):
        if len(self.matrix) != self.target.rank:
            raise ValueError("row count does not match target rank")
        if any(len(r) != self.source.rank for r in self.matrix):
            raise ValueError("column count does not match source rank")

    def __matmul__(self, other: "LatticeMap") -> "LatticeMap":
        return LatticeMap(matmul(self.matrix, other.matrix), other.source, self.target)

    def __call__(self, v: Sequence[int]) -> tuple[int, ...]:
        return matvec(self.matrix, v)


def smith_normal_form(m) -> tuple[LatticeMap, LatticeMap, LatticeMap]:
    """Return unimodular ``u``, ``v`` and diagonal ``d`` with ``u @ m @ v == d``.

    The diagonal entries are nonnegative and each divides the next.
    ``m`` may be a :class:`LatticeMap` or a nested sequence of integers.
    """
    if isinstance(m, LatticeMap):
        rows, cols = m.target.rank, m.source.rank
        a = [list(r) for r in m.matrix]
    else:
        a = [list(map(int, r)) for r in m]
        rows = len(a)
        cols = len(a[0]) if a else 0
    u = [[int(i == j) for j in range(rows)] for i in range(rows)]
    v = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for r in a:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]

    def add_row(dst, src, f):
        a[dst] = [x + f * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x + f * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, f):
        for r in a:
            r[dst] += f * r[src]
        for r in v:
            r[dst] += f * r[src]

    for t in range(min(rows, cols)):
        while True:
            nz = [(abs(a[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if a[i][j]]
            if not nz:
                break
            _, i, j = min(nz)
            swap_rows(t, i)
            swap_cols(t, j)
            dirty = False
            for i in range(t + 1, rows):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // a[t][t]))
                    dirty = dirty or a[i][t] != 0
            for j in range(t + 1, cols):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // a[t][t]))
                    dirty = dirty or a[t][j] != 0
            if dirty:
                continue
            bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols)
                        if a[i][j] % a[t][t]), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]

    def lm(mat, r, c):
        return LatticeMap(as_matrix(mat), Lattice(c), Lattice(r))

    return lm(u, rows, rows), lm(a, rows, cols), lm(v, cols, cols)


def snf_diagonal(m) -> list[int]:
    _, d, _ = smith_normal_form(m)
    return [d.matrix[i][i] for i in range(min(d.target.rank, d.source.rank))]


def integer_kernel(rows_matrix: Sequence[Sequence[int]], n: int) -> list[tuple[int, ...]]:
    """Basis of ``{x in Z^n : A x = 0}`` for the integer matrix ``A``."""
    if not rows_matrix:
        return [tuple(int(i == j) for j in range(n)) for i in range(n)]
    _, d, v = smith_normal_form(rows_matrix)
    diag = [d.matrix[i][i] for i in range(min(len(rows_matrix), n))]
    r = sum(1 for x in diag if x)
    return [tuple(v.matrix[i][j] for i in range(n)) for j in range(r, n)]


def saturation(vectors: Sequence[Sequence[int]], n: int) -> list[tuple[int, ...]]:
    """Basis of ``Z^n`` intersected with the rational span of ``vectors``."""
    if not vectors:
        return []
    cols = transpose([tuple(v) for v in vectors])
    u, d, _ = smith_normal_form(cols)
    diag = [d.matrix[i][i] for i in range(min(n, len(vectors)))]
    r = sum(1 for x in diag if x)
    uinv = integer_inverse(u.matrix)
    return [tuple(uinv[i][j] for i in range(n)) for j in range(r)]


def _frac_mod1(x: Fraction) -> Fraction:
    return Fraction(x) % 1


@dataclass(frozen=True)
class TorusPoint:
    """Rational point of ``Hom(Z^n, C^x)`` in polar coordinates.

    ``unitary`` entries are normalized to ``[0, 1)``.
    """

    unitary: tuple[Fraction, ...]
    real: tuple[Fraction, ...] = field(default=())

    def __post_init__(self):
        u = tuple(_frac_mod1(Fraction(x)) for x in self.unitary)
        r = tuple(Fraction(x) for x in self.real) if self.real else tuple(Fraction(0) for _ in u)
        if len(r) != len(u):
            raise ValueError("unitary and real parts must have equal length")
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "real", r)

    @classmethod
    def identity(cls, n: int) -> "TorusPoint":
        return cls(tuple(Fraction(0) for _ in range(n)))

    @classmethod
    def from_real(cls, real: Sequence) -> "TorusPoint":
        return cls(tuple(Fraction(0) for _ in real), tuple(real))

    @property
    def rank(self) -> int:
        return len(self.unitary)

    def __mul__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint(tuple(a + b for a, b in zip(self.unitary, other.unitary)),
                          tuple(a + b for a, b in zip(self.real, other.real)))

    def inverse(self) -> "TorusPoint":
        return TorusPoint(tuple(-a for a in self.unitary), tuple(-a for a in self.real))

    def __pow__(self, k: int) -> "TorusPoint":
        return TorusPoint(tuple(k * a for a in self.unitary), tuple(k * a for a in self.real))

    def is_unitary(self) -> bool:
        return all(r == 0 for r in self.real)

    def is_real_positive(self) -> bool:
        return all(u == 0 for u in self.unitary)

    def is_identity(self) -> bool:
        return self.is_unitary() and self.is_real_positive()

    def order(self) -> int | None:
        """Multiplicative order, or ``None`` if the point is not torsion."""
        if not self.is_unitary():
            return None
        o = 1
        for u in self.unitary:
            o = o * u.denominator // gcd(o, u.denominator)
        return o

    def unitary_part(self) -> "TorusPoint":
        return TorusPoint(self.unitary)

    def absolute(self) -> "TorusPoint":
        return TorusPoint.from_real(self.real)

    def angle(self, x: Sequence[int]) -> Fraction:
        return _frac_mod1(sum(u * v for u, v in zip(self.unitary, x)))

    def log_abs(self, x: Sequence[int]) -> Fraction:
        return sum((r * v for r, v in zip(self.real, x)), Fraction(0))

    def value(self, x: Sequence[int]):
        """``t(x)``: an exact ``Fraction`` when it is +-1, else a Python complex."""
        ang = self.angle(x)
        lg = self.log_abs(x)
        if lg == 0 and ang in (0, Fraction(1, 2)):
            return Fraction(1) if ang == 0 else Fraction(-1)
        return cmath.exp(2j * cmath.pi * float(ang) + float(lg))

    def values(self):
        n = self.rank
        return tuple(self.value(tuple(int(i == j) for j in range(n))) for i in range(n))

    def transform(self, linear: Sequence[Sequence[int]]) -> "TorusPoint":
        """``t o linear^{-1}``, the linear action of an automorphism of ``X``."""
        inv_t = transpose(rational_inverse(linear))
        return TorusPoint(matvec(inv_t, self.unitary), matvec(inv_t, self.real))

    def pullback(self, m: Sequence[Sequence[int]]) -> "TorusPoint":
        """``t o m`` for an integer matrix ``m`` (a map into this point's lattice)."""
        mt = transpose(m)
        return TorusPoint(matvec(mt, self.unitary), matvec(mt, self.real))

    def sort_key(self):
        return (self.unitary, self.real)

    def __str__(self) -> str:
        us = ", ".join(str(u) for u in self.unitary)
        if self.is_unitary():
            return f"e({us})"
        rs = ", ".join(str(r) for r in self.real)
        return f"e({us})*exp({rs})"


@dataclass(frozen=True)
class AffineTorusAut:
    """The automorphism ``t -> translation * (t o linear^{-1})`` of ``T``."""

    linear: IntMatrix
    translation: TorusPoint

    def __post_init__(self):
        lin = as_matrix(self.linear)
        object.__setattr__(self, "linear", lin)
        if abs(det(lin)) != 1:
            raise ValueError("linear part must be unimodular")
        if self.translation.rank != len(lin):
            raise ValueError("translation rank mismatch")

    @classmethod
    def identity(cls, n: int) -> "AffineTorusAut":
        return cls(identity(n), TorusPoint.identity(n))

    @classmethod
    def linear_only(cls, linear) -> "AffineTorusAut":
        lin = as_matrix(linear)
        return cls(lin, TorusPoint.identity(len(lin)))

    @classmethod
    def multiplication(cls, z: TorusPoint) -> "AffineTorusAut":
        return cls(identity(z.rank), z)

    @property
    def rank(self) -> int:
        return len(self.linear)

    def __call__(self, t: TorusPoint) -> TorusPoint:
        return self.translation * t.transform(self.linear)

    def __matmul__(self, other: "AffineTorusAut") -> "AffineTorusAut":
        """Composition ``self o other``."""
        return AffineTorusAut(matmul(self.linear, other.linear),
                              self.translation * other.translation.transform(self.linear))

    def inverse(self) -> "AffineTorusAut":
        inv = integer_inverse(self.linear)
        return AffineTorusAut(inv, self.translation.inverse().transform(inv))

    def is_identity(self) -> bool:
        return self.linear == identity(self.rank) and self.translation.is_identity()

    def sort_key(self):
        return (self.linear, self.translation.sort_key())


def close_group(generators: Sequence[AffineTorusAut], bound: int = 4096) -> list[AffineTorusAut]:
    """All elements of the group generated by ``generators`` (identity first)."""
    if not generators:
        raise ValueError("need at least one generator to know the rank")
    e = AffineTorusAut.identity(generators[0].rank)
    seen = {e: None}
    order = [e]
    frontier = [e]
    while frontier:
        nxt = []
        for g in frontier:
            for s in generators:
                h = s @ g
                if h not in seen:
                    seen[h] = None
                    order.append(h)
                    nxt.append(h)
                    if len(order) > bound:
                        raise NotFiniteGroup(f"group exceeds {bound} elements")
        frontier = nxt
    return order


@dataclass(frozen=True)
class FiniteTorusSubgroup:
    """A finite subgroup of ``T`` given by torsion generators."""

    generators: tuple[TorusPoint, ...]
    order: int
    rank: int

    def elements(self) -> list[TorusPoint]:
        e = TorusPoint.identity(self.rank)
        seen = {e}
        out = [e]
        frontier = [e]
        while frontier:
            nxt = []
            for t in frontier:
                for g in self.generators:
                    s = t * g
                    if s not in seen:
                        seen.add(s)
                        out.append(s)
                        nxt.append(s)
            frontier = nxt
        return sorted(out, key=TorusPoint.sort_key)

    def __contains__(self, t: TorusPoint) -> bool:
        return t in set(self.elements())


def finite_intersection(sub_a: Sequence[Sequence[int]], sub_b: Sequence[Sequence[int]],
                        rank: int) -> FiniteTorusSubgroup:
    """Intersection of the subtori of ``T`` annihilated by two sublattices of ``X``.

    ``sub_a`` and ``sub_b`` list vectors of ``X = Z^rank``; the subtorus attached
    to a sublattice ``A`` is ``{t : t(a) = 1 for a in A}``. The intersection is
    ``Hom(X / (A + B), C^x)``, which must be finite.
    """
    vecs = [tuple(v) for v in sub_a] + [tuple(v) for v in sub_b]
    if rank == 0:
        return FiniteTorusSubgroup((), 1, 0)
    if not vecs:
        raise InfiniteIntersection("both sublattices are zero")
    u, d, _ = smith_normal_form(transpose(vecs))
    diag = [d.matrix[i][i] if i < len(vecs) else 0 for i in range(rank)]
    if any(x == 0 for x in diag):
        raise InfiniteIntersection("A + B does not have full rank")
    gens = []
    for i, di in enumerate(diag):
        if di > 1:
            gens.append(TorusPoint(tuple(Fraction(u.matrix[i][j], di) for j in range(rank))))
    return FiniteTorusSubgroup(tuple(gens), prod(diag), rank)


@dataclass(frozen=True)
class FixedLocus:
    dim: int
    components: int
    witness: TorusPoint | None


def fixed_locus(aut: AffineTorusAut, enumeration_cap: int = 4096) -> FixedLocus:
    """Dimension, number of components and a witness point of ``T^aut``."""
    n = aut.rank
    linv_t = transpose(rational_inverse(aut.linear))
    b = tuple(tuple(int(i == j) - int(linv_t[i][j]) for j in range(n)) for i in range(n))
    if n == 0:
        return FixedLocus(0, 1, TorusPoint(()))
    u, d, v = smith_normal_form(b)
    diag = [d.matrix[i][i] for i in range(n)]
    zu = matvec(u.matrix, aut.translation.unitary)
    zr = matvec(u.matrix, aut.translation.real)
    choices = []
    real_y = []
    for i, di in enumerate(diag):
        if di == 0:
            if Fraction(zu[i]) % 1 != 0 or zr[i] != 0:
                return FixedLocus(diag.count(0), 0, None)
            choices.append([Fraction(0)])
            real_y.append(Fraction(0))
        else:
            choices.append([Fraction(zu[i] + k, di) for k in range(di)])
            real_y.append(Fraction(zr[i], di))
    dim = diag.count(0)
    components = prod(di for di in diag if di)
    real = matvec(v.matrix, real_y)
    best = None
    for count, ys in enumerate(itertools.product(*choices)):
        if count >= enumeration_cap:
            break
        pt = TorusPoint(matvec(v.matrix, ys), real)
        if best is None or pt.sort_key() < best.sort_key():
            best = pt
    return FixedLocus(dim, components, best)


def preimages(p: Sequence[Sequence[int]], z: TorusPoint) -> list[TorusPoint]:
    """All ``z'`` in ``T'`` with ``z' o p = z`` for ``p : X -> X'`` of finite cokernel."""
    pt = transpose(p)
    n = len(pt)
    pinv_t = rational_inverse(pt)
    u, d, _ = smith_normal_form(pt)
    diag = [d.matrix[i][i] for i in range(n)]
    if any(x == 0 for x in diag):
        raise NotLiftable("p must have finite cokernel")
    uinv = integer_inverse(u.matrix)
    out = set()
    for j in itertools.product(*[range(x) for x in diag]):
        k = matvec(uinv, j)
        out.add(TorusPoint(matvec(pinv_t, [a + b for a, b in zip(z.unitary, k)]),
                           matvec(pinv_t, z.real)))
    return sorted(out, key=TorusPoint.sort_key)


@dataclass
class IsogenyLift:
    """Result of lifting a finite group action along ``T' -> T``."""

    p: IntMatrix
    gamma: list[AffineTorusAut]
    gamma_prime: list[AffineTorusAut]
    kernel: list[TorusPoint]
    lifts: dict[AffineTorusAut, AffineTorusAut]
    cocycle: dict[tuple[AffineTorusAut, AffineTorusAut], TorusPoint]

    def project(self, g: AffineTorusAut) -> AffineTorusAut:
        return project_aut(self.p, g)


def lift_linear(p: Sequence[Sequence[int]], linear: Sequence[Sequence[int]]) -> IntMatrix:
    lp = matmul(matmul(p, linear), rational_inverse(p))
    if any(Fraction(x).denominator != 1 for row in lp for x in row):
        raise NotLiftable("linear part does not preserve X'")
    return as_matrix(lp)


def project_aut(p: Sequence[Sequence[int]], g: AffineTorusAut) -> AffineTorusAut:
    lin = matmul(matmul(rational_inverse(p), g.linear), p)
    return AffineTorusAut(as_matrix(lin), g.translation.pullback(p))


def isogeny_lift(p, gamma: Sequence[AffineTorusAut], choices: dict | None = None,
                 bound: int = 4096) -> IsogenyLift:
    """Lift the action of the finite group generated by ``gamma`` to ``T'``.

    ``p`` embeds ``X`` into ``X'`` (rows are ``X'`` coordinates). For every group
    element the translation is lifted to the lexicographically smallest
    preimage unless ``choices`` maps that element to another preimage index.
    """
    p = as_matrix(p.matrix if isinstance(p, LatticeMap) else p)
    n = len(p)
    if not gamma:
        gamma = [AffineTorusAut.identity(n)]
    group = close_group(list(gamma), bound)
    choices = choices or {}
    kernel = preimages(p, TorusPoint.identity(n))
    lifts = {}
    for g in group:
        opts = preimages(p, g.translation)
        lifts[g] = AffineTorusAut(lift_linear(p, g.linear), opts[choices.get(g, 0) % len(opts)])
    k_auts = [AffineTorusAut.multiplication(k) for k in kernel]
    gens = [lifts[g] for g in gamma] + k_auts
    gamma_prime = close_group(gens, bound * max(1, len(kernel)))
    index = {g: i for i, g in enumerate(group)}
    cocycle = {}
    for a in group:
        for b in group:
            ab = a @ b
            if ab not in index:
                raise NotFiniteGroup("group closure is inconsistent")
            c = lifts[a] @ lifts[b] @ lifts[ab].inverse()
            if c.linear != identity(n):
                raise NotLiftable("cocycle has nontrivial linear part")
            cocycle[(a, b)] = c.translation
    return IsogenyLift(p, group, gamma_prime, kernel, lifts, cocycle)
