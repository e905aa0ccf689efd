"""The extended affine Weyl group ``W^e = X x| W``, its length function and ``Omega``."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import InconsistentParameters, InfiniteOmega, InputError
from .lattice import (as_matrix, integer_inverse, matmul, matvec, smith_normal_form,
                      transpose)
from .rootdatum import BasedRootDatum, GammaAction, GammaElt, pairing

Vector = tuple[int, ...]


@dataclass(frozen=True, order=True)
class ExtAffWeylElt:
    """``t_x w``; ``finite`` is an index into ``datum.weyl``."""

    translation: Vector
    finite: int


@dataclass(frozen=True)
class SimpleAffineReflection:
    label: str
    kind: str          # "finite" (s_alpha, alpha simple) or "affine" (t_alpha s_alpha)
    root: int          # index into datum.roots
    element: ExtAffWeylElt


class OmegaGroup:
    """``Omega ~ X / ZR`` given by invariant-factor coordinates.

    ``orders[i]`` is the order of the ``i``-th cyclic factor, ``0`` for a free one.
    """

    def __init__(self, group: "ExtAffWeylGroup"):
        self.group = group
        d = group.datum
        n, r = d.rank, d.n_simple
        if n == 0:
            self._u = ()
            self._uinv = ()
            self._diag = []
        elif r:
            u, dd, _ = smith_normal_form(transpose(d.simple_roots))
            self._u = u.matrix
            self._uinv = integer_inverse(u.matrix)
            self._diag = [dd.matrix[i][i] if i < r else 0 for i in range(n)]
        else:
            self._u = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
            self._uinv = self._u
            self._diag = [0] * n
        self._factors = [i for i, di in enumerate(self._diag) if di != 1]
        self.orders: tuple[int, ...] = tuple(self._diag[i] for i in self._factors)
        self.generators: tuple[ExtAffWeylElt, ...] = tuple(
            self.element(tuple(int(j == k) for j in range(len(self._factors))))
            for k in range(len(self._factors)))

    @property
    def free_rank(self) -> int:
        return sum(1 for o in self.orders if o == 0)

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def order(self) -> int | None:
        if not self.is_finite:
            return None
        out = 1
        for o in self.orders:
            out *= o
        return out

    def coordinates(self, g: ExtAffWeylElt) -> tuple[int, ...]:
        """Class of ``g`` in ``W^e / W^aff ~ X / ZR``."""
        ux = matvec(self._u, g.translation) if self._u else ()
        out = []
        for i in self._factors:
            out.append(ux[i] % self._diag[i] if self._diag[i] else ux[i])
        return tuple(out)

    def element(self, coords: Sequence[int]) -> ExtAffWeylElt:
        """The length-zero element with the given coordinates."""
        n = self.group.datum.rank
        c = [0] * n
        for i, v in zip(self._factors, coords):
            c[i] = v
        x = tuple(matvec(self._uinv, c)) if n else ()
        return self.group.reduce(ExtAffWeylElt(x, 0))[1]

    def elements(self) -> list[ExtAffWeylElt]:
        if not self.is_finite:
            raise InfiniteOmega(f"Omega has free rank {self.free_rank}; use generators")
        return [self.element(c) for c in itertools.product(*(range(o) for o in self.orders))]


class ExtAffWeylGroup:
    """``W^e`` of a based root datum with Coxeter data for ``(W^aff, S^aff)``."""

    def __init__(self, datum: BasedRootDatum):
        self.datum = datum
        d = datum
        self.rank = d.rank
        self.e = ExtAffWeylElt(tuple([0] * d.rank), 0)
        npos = d.n_positive
        self._neg = []
        for w in range(len(d.weyl)):
            perm = d.root_perm(d.weyl_inv(w))
            self._neg.append(tuple(perm[i] >= npos for i in range(npos)))
        refl: list[SimpleAffineReflection] = []
        for i in range(d.n_simple):
            refl.append(SimpleAffineReflection(
                f"s{i + 1}", "finite", d.root_index(d.simple_roots[i]),
                ExtAffWeylElt(self.e.translation, d.simple_reflection_index(i))))
        maxc = d.maximal_coroots
        for k, m in enumerate(maxc):
            label = "s0" if len(maxc) == 1 else f"s0_{k + 1}"
            refl.append(SimpleAffineReflection(
                label, "affine", m, ExtAffWeylElt(d.roots[m], self.reflection_index(m))))
        self.s_aff: tuple[SimpleAffineReflection, ...] = tuple(refl)
        self.labels: tuple[str, ...] = tuple(s.label for s in refl)
        self._by_label = {s.label: s for s in refl}
        self._by_elt = {s.element: s.label for s in refl}
        self._length = lru_cache(maxsize=1 << 16)(self._length_impl)
        self.omega = OmegaGroup(self)

    # -- group law ------------------------------------------------------------
    def reflection_index(self, root: int) -> int:
        d = self.datum
        a, av = d.roots[root], d.coroots[root]
        n = d.rank
        m = tuple(tuple(int(r == c) - a[r] * av[c] for c in range(n)) for r in range(n))
        return d.weyl_index(m)

    def t(self, x: Sequence[int]) -> ExtAffWeylElt:
        return ExtAffWeylElt(tuple(int(v) for v in x), 0)

    def w(self, index: int) -> ExtAffWeylElt:
        return ExtAffWeylElt(self.e.translation, index)

    def s(self, label: str) -> ExtAffWeylElt:
        return self._by_label[label].element

    def mul(self, a: ExtAffWeylElt, b: ExtAffWeylElt) -> ExtAffWeylElt:
        wx = self.datum.act(a.finite, b.translation)
        return ExtAffWeylElt(tuple(p + q for p, q in zip(a.translation, wx)),
                             self.datum.weyl_mul(a.finite, b.finite))

    def prod(self, elts: Iterable[ExtAffWeylElt]) -> ExtAffWeylElt:
        out = self.e
        for g in elts:
            out = self.mul(out, g)
        return out

    def inv(self, a: ExtAffWeylElt) -> ExtAffWeylElt:
        wi = self.datum.weyl_inv(a.finite)
        return ExtAffWeylElt(tuple(-v for v in self.datum.act(wi, a.translation)), wi)

    def conj(self, a: ExtAffWeylElt, b: ExtAffWeylElt) -> ExtAffWeylElt:
        """``a b a^{-1}``."""
        return self.mul(self.mul(a, b), self.inv(a))

    def word_element(self, word: Sequence[str], omega: ExtAffWeylElt | None = None) -> ExtAffWeylElt:
        g = self.prod(self.s(lab) for lab in word)
        return self.mul(g, omega) if omega is not None else g

    def gamma_apply(self, g: GammaElt, a: ExtAffWeylElt) -> ExtAffWeylElt:
        """``t_x u -> t_{Lx} L u L^{-1}`` (the twist ``z`` acts only on the algebra)."""
        lin = g.linear
        d = self.datum
        m = matmul(matmul(lin, d.weyl[a.finite].matrix), integer_inverse(lin))
        return ExtAffWeylElt(tuple(matvec(lin, a.translation)), d.weyl_index(m))

    # -- length and words ------------------------------------------------------
    def _length_impl(self, a: ExtAffWeylElt) -> int:
        d = self.datum
        x = a.translation
        neg = self._neg[a.finite]
        total = 0
        for i in range(d.n_positive):
            k = pairing(x, d.coroots[i])
            total += abs(k - 1) if neg[i] else abs(k)
        return total

    def length(self, a: ExtAffWeylElt) -> int:
        return self._length(a)

    def is_omega(self, a: ExtAffWeylElt) -> bool:
        return self._length(a) == 0

    def in_affine(self, a: ExtAffWeylElt) -> bool:
        return all(c == 0 for c in self.omega.coordinates(a))

    def left_descent(self, a: ExtAffWeylElt) -> str | None:
        la = self._length(a)
        for s in self.s_aff:
            if self._length(self.mul(s.element, a)) < la:
                return s.label
        return None

    def reduce(self, a: ExtAffWeylElt) -> tuple[tuple[str, ...], ExtAffWeylElt]:
        word = []
        while True:
            lab = self.left_descent(a)
            if lab is None:
                return tuple(word), a
            word.append(lab)
            a = self.mul(self.s(lab), a)

    def reduced_word(self, a: ExtAffWeylElt) -> tuple[tuple[str, ...], ExtAffWeylElt]:
        """``(word, omega)`` with ``a = s_{word[0]} ... s_{word[-1]} omega``."""
        return self.reduce(a)

    def label_of(self, a: ExtAffWeylElt) -> str | None:
        return self._by_elt.get(a)

    def omega_conj_label(self, omega: ExtAffWeylElt, label: str) -> str:
        lab = self._by_elt.get(self.conj(omega, self.s(label)))
        if lab is None:
            raise AssertionError("Omega does not normalize S^aff")
        return lab

    def gamma_label(self, g: GammaElt, label: str) -> str:
        lab = self._by_elt.get(self.gamma_apply(g, self.s(label)))
        if lab is None:
            raise InputError("Gamma does not permute S^aff")
        return lab

    def order_of(self, a: ExtAffWeylElt, bound: int = 12) -> int | None:
        g = a
        for k in range(1, bound + 1):
            if g == self.e:
                return k
            g = self.mul(g, a)
        return None

    def coxeter_m(self, l1: str, l2: str, bound: int = 12) -> int | None:
        return self.order_of(self.mul(self.s(l1), self.s(l2)), bound)

    def reflection_to_simple(self, r: ExtAffWeylElt) -> tuple[str, ExtAffWeylElt]:
        """A simple reflection ``s`` and ``c`` with ``r = c s c^{-1}``."""
        c = self.e
        while True:
            lab = self._by_elt.get(r)
            if lab is not None:
                return lab, c
            la = self._length(r)
            for s in self.s_aff:
                r2 = self.conj(s.element, r)
                if self._length(r2) < la:
                    r = r2
                    c = self.mul(c, s.element)
                    break
            else:
                raise InputError(f"element {r} is not a reflection")

    def affine_reflection(self, root: int, k: int) -> ExtAffWeylElt:
        """``t_{k beta} s_beta``."""
        b = self.datum.roots[root]
        return ExtAffWeylElt(tuple(k * v for v in b), self.reflection_index(root))

    # -- helpers for tests ------------------------------------------------------
    def bfs_lengths(self, max_length: int) -> dict[ExtAffWeylElt, int]:
        """Word lengths in ``S^aff`` of all elements of ``W^aff`` up to ``max_length``."""
        seen = {self.e: 0}
        frontier = [self.e]
        for k in range(1, max_length + 1):
            nxt = []
            for g in frontier:
                for s in self.s_aff:
                    h = self.mul(g, s.element)
                    if h not in seen:
                        seen[h] = k
                        nxt.append(h)
            frontier = nxt
        return seen

    def random_element(self, rng: random.Random, max_length: int, with_omega: bool = True) -> ExtAffWeylElt:
        g = self.e
        for _ in range(rng.randint(0, max_length)):
            g = self.mul(g, rng.choice(self.s_aff).element)
        if with_omega and self.omega.orders:
            coords = [rng.randrange(o) if o else rng.randint(-2, 2) for o in self.omega.orders]
            g = self.mul(g, self.omega.element(coords))
        return g

    def __repr__(self) -> str:
        return f"ExtAffWeylGroup({self.datum!r}, S^aff={list(self.labels)})"


_GROUPS: dict[int, ExtAffWeylGroup] = {}


def ext_affine_weyl(d: BasedRootDatum) -> ExtAffWeylGroup:
    g = _GROUPS.get(id(d))
    if g is None or g.datum is not d:
        g = ExtAffWeylGroup(d)
        _GROUPS[id(d)] = g
    return g


# -- parameter functions -------------------------------------------------------

def conjugacy_classes(group: ExtAffWeylGroup, gamma: GammaAction | None = None,
                      bound: int = 12) -> tuple[tuple[str, ...], ...]:
    """Partition of ``S^aff`` into ``W^e`` (and optionally ``Gamma``) conjugacy classes."""
    labels = list(group.labels)
    parent = {l: l for l in labels}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb, key=labels.index)] = min(ra, rb, key=labels.index)

    for a, b in itertools.combinations(labels, 2):
        m = group.coxeter_m(a, b, bound)
        if m is not None and m % 2 == 1:
            union(a, b)
    for om in group.omega.generators:
        for a in labels:
            union(a, group.omega_conj_label(om, a))
    if gamma is not None:
        for g in gamma.generators:
            for a in labels:
                union(a, group.gamma_label(g, a))
    classes: dict[str, list[str]] = {}
    for l in labels:
        classes.setdefault(find(l), []).append(l)
    return tuple(tuple(v) for v in sorted(classes.values(), key=lambda c: labels.index(c[0])))


@dataclass
class ParameterFunction:
    """``q`` on ``S^aff``: one formal symbol per label, optionally with values.

    ``symbols[label]`` names the indeterminate ``q_c``; ``q_c^{1/2}`` is the
    variable used by Hecke algebra arithmetic. ``values[name]`` is a positive
    rational (the value of ``q_c``) or ``None`` when left formal.
    """

    group: ExtAffWeylGroup
    classes: tuple[tuple[str, ...], ...]
    symbols: dict[str, str]
    values: dict[str, Fraction | None]

    @property
    def names(self) -> tuple[str, ...]:
        out = []
        for lab in self.group.labels:
            if self.symbols[lab] not in out:
                out.append(self.symbols[lab])
        return tuple(out)

    def symbol(self, label: str) -> str:
        return self.symbols[label]

    def is_formal(self) -> bool:
        return any(v is None for v in self.values.values())

    def is_equal(self) -> bool:
        return len(set(self.symbols.values())) <= 1 or (
            not self.is_formal() and len(set(self.values.values())) <= 1)

    def is_positive(self) -> bool:
        return all(v is not None and v > 0 for v in self.values.values())

    def of_reflection(self, r: ExtAffWeylElt) -> str:
        return self.symbols[self.group.reflection_to_simple(r)[0]]

    def of_root(self, root: int, double: bool = False) -> str:
        """Symbol for ``q(alpha)``, or ``q(2 alpha)`` when ``alpha^vee in 2Y``."""
        d = self.group.datum
        if double:
            if any(v % 2 for v in d.coroots[root]):
                raise InputError("q(2 alpha) is only defined when alpha^vee is in 2Y")
            return self.of_reflection(self.group.affine_reflection(root, 1))
        return self.of_reflection(self.group.affine_reflection(root, 0))

    def root_encoding(self) -> dict[tuple, str]:
        """The ``W``-invariant function on ``R u {2 alpha : alpha^vee in 2Y}``."""
        d = self.group.datum
        out = {}
        for i, b in enumerate(d.roots):
            out[b] = self.of_root(i)
            if all(v % 2 == 0 for v in d.coroots[i]):
                out[tuple(2 * v for v in b)] = self.of_root(i, double=True)
        return out

    def of_element(self, a: ExtAffWeylElt) -> dict[str, int]:
        """``q(a)`` as exponents of the ``q_c``."""
        word, _ = self.group.reduce(a)
        out: dict[str, int] = {}
        for lab in word:
            s = self.symbols[lab]
            out[s] = out.get(s, 0) + 1
        return out

    def evaluated(self, values: dict[str, Fraction]) -> "ParameterFunction":
        new = dict(self.values)
        for k, v in values.items():
            if k not in new:
                raise InputError(f"unknown parameter {k!r}; known: {sorted(new)}")
            v = Fraction(v)
            if v <= 0:
                raise InputError("parameters must be positive")
            new[k] = v
        return ParameterFunction(self.group, self.classes, dict(self.symbols), new)

    def restricted(self, sub_group: ExtAffWeylGroup, label_map: dict[str, str]) -> "ParameterFunction":
        """Parameters on a sub datum: ``label_map`` sends its labels to symbols here."""
        classes = conjugacy_classes(sub_group)
        symbols = {}
        for cls in classes:
            names = {label_map[l] for l in cls}
            if len(names) > 1:
                raise InconsistentParameters(f"conjugate reflections {cls} receive {sorted(names)}")
            for l in cls:
                symbols[l] = label_map[l]
        values = {s: self.values[s] for s in set(symbols.values())}
        return ParameterFunction(sub_group, classes, symbols, values)

    def describe(self) -> dict:
        return {"classes": [list(c) for c in self.classes],
                "symbols": dict(self.symbols),
                "values": {k: (None if v is None else str(v)) for k, v in self.values.items()}}


def make_parameter_function(group: ExtAffWeylGroup | BasedRootDatum, assignments=None,
                            gamma: GammaAction | None = None, bound: int = 12) -> ParameterFunction:
    """Build ``q``.

    ``assignments`` may be ``None`` (one formal symbol per class), a single
    number or symbol name for all of ``S^aff``, or a dict from labels to
    numbers or symbol names. Unassigned classes get formal symbols.
    """
    if isinstance(group, BasedRootDatum):
        group = ext_affine_weyl(group)
    classes = conjugacy_classes(group, gamma, bound)
    if assignments is None:
        assignments = {}
    elif not isinstance(assignments, dict):
        assignments = {lab: assignments for lab in group.labels}
    unknown = set(assignments) - set(group.labels)
    if unknown:
        raise InputError(f"unknown reflections {sorted(unknown)}; S^aff = {list(group.labels)}")
    default_names = ["q"] if len(classes) == 1 else [f"q_{c[0]}" for c in classes]
    symbols: dict[str, str] = {}
    values: dict[str, Fraction | None] = {}
    for cls, default in zip(classes, default_names):
        given = {assignments[l] for l in cls if l in assignments}
        given_num = {Fraction(v) for v in given if not isinstance(v, str)}
        given_sym = {v for v in given if isinstance(v, str)}
        if len(given_num) > 1 or len(given_sym) > 1:
            raise InconsistentParameters(
                f"conjugate reflections {list(cls)} receive different values {sorted(map(str, given))}")
        name = given_sym.pop() if given_sym else default
        val = given_num.pop() if given_num else None
        if val is not None and val <= 0:
            raise InputError("parameters must be positive rationals")
        if name in values and values[name] != val and val is not None:
            if values[name] is not None:
                raise InconsistentParameters(f"symbol {name} receives two values")
        values[name] = val if val is not None else values.get(name)
        for l in cls:
            symbols[l] = name
    return ParameterFunction(group, classes, symbols, values)
