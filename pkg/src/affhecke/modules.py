"""Finite-dimensional modules over ``H x Gamma`` as matrix representations.

A module stores one matrix per simple affine reflection, per generator of
``Omega`` and per generator of ``Gamma``. Matrices are exact (numpy object
arrays of ``Fraction``) when every entry is rational, and complex doubles
otherwise.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from . import _linalg as xl
from .errors import (AlgebraMismatch, InputError, NotScalarCentralAction,
                     NotSplitWithinTolerance, NumericIllConditioned, RelationFailure)
from .hecke import CrossedElt, HeckeAlgebra, HeckeElt
from .lattice import AffineTorusAut, TorusPoint, integer_inverse, integer_kernel, rational_inverse
from .laurent import LaurentScalar
from .rootdatum import BasedRootDatum, invariant_form, pairing
from .weyl import ExtAffWeylElt

RELATION_TOL = 1e-9
CLUSTER_TOL = 1e-8
EXACT_HOM_LIMIT = 144      # largest d1*d2 solved over the rationals


# -- scalars and matrices -------------------------------------------------------

def _is_rational(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return True
    if isinstance(c, LaurentScalar):
        return c.is_constant() and isinstance(c.constant(), Fraction)
    return False


def _number(c):
    if isinstance(c, LaurentScalar):
        if not c.is_constant():
            raise InputError("modules need numerically evaluated parameters; got a formal coefficient")
        c = c.constant()
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        return complex(c)
    return c


def _to_mat(m, exact: bool) -> np.ndarray:
    if exact:
        if isinstance(m, np.ndarray) and m.dtype == object:
            return m.copy()
        return xl.frac_array(np.asarray(m, dtype=object))
    a = np.empty(np.shape(m), dtype=complex)
    for idx, v in np.ndenumerate(np.asarray(m, dtype=object)):
        a[idx] = complex(v)
    return a


def _all_rational(m) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in np.asarray(m, dtype=object).flat)


def _eye(n: int, exact: bool) -> np.ndarray:
    return xl.frac_eye(n) if exact else np.eye(n, dtype=complex)


def _zeros(n: int, exact: bool) -> np.ndarray:
    return xl.frac_zeros((n, n)) if exact else np.zeros((n, n), dtype=complex)


def _inv(m: np.ndarray, exact: bool) -> np.ndarray:
    return xl.inverse(m) if exact else np.linalg.inv(m)


def _scale(m: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(m.astype(complex))))) if m.size else 1.0


def _close(a: np.ndarray, b: np.ndarray, exact: bool, tol: float) -> bool:
    if exact and a.dtype == object and b.dtype == object:
        return bool((a == b).all())
    a, b = a.astype(complex), b.astype(complex)
    return bool(np.max(np.abs(a - b), initial=0.0) <= tol * max(_scale(a), _scale(b)))


def _mpow(m: np.ndarray, k: int, exact: bool) -> np.ndarray:
    if k < 0:
        m, k = _inv(m, exact), -k
    out = _eye(m.shape[0], exact)
    base = m
    while k:
        if k & 1:
            out = out @ base
        base = base @ base
        k >>= 1
    return out


# -- weights --------------------------------------------------------------------

@dataclass(frozen=True)
class Weight:
    """A point of ``T`` given by its values ``t(e_1), ..., t(e_n)``."""

    values: tuple

    @classmethod
    def from_point(cls, t: TorusPoint) -> "Weight":
        return cls(tuple(t.values()))

    @classmethod
    def coerce(cls, t) -> "Weight":
        if isinstance(t, Weight):
            return t
        if isinstance(t, TorusPoint):
            return cls.from_point(t)
        return cls(tuple(_number(v) for v in t))

    @property
    def rank(self) -> int:
        return len(self.values)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.values)

    def value(self, x: Sequence[int]):
        out = Fraction(1)
        for v, k in zip(self.values, x):
            if k:
                out = out * v ** int(k)
        return out

    def __mul__(self, other: "Weight") -> "Weight":
        return Weight(tuple(a * b for a, b in zip(self.values, other.values)))

    def inverse(self) -> "Weight":
        return Weight(tuple(1 / v for v in self.values))

    def pullback(self, m: Sequence[Sequence[int]]) -> "Weight":
        """``t o m`` for an integer matrix ``m`` into this weight's lattice."""
        cols = len(m[0]) if m else 0
        return Weight(tuple(self.value([row[j] for row in m]) for j in range(cols)))

    def transform(self, linear: Sequence[Sequence[int]]) -> "Weight":
        """``t o linear^{-1}``."""
        return self.pullback(integer_inverse(linear))

    def apply(self, aut: AffineTorusAut) -> "Weight":
        return Weight.from_point(aut.translation) * self.transform(aut.linear) if self.rank else self

    def log_abs(self) -> tuple[float, ...]:
        return tuple(math.log(abs(complex(v))) for v in self.values)

    def is_unitary(self, tol: float = 1e-12) -> bool:
        if self.exact:
            return all(abs(v) == 1 for v in self.values)
        return all(abs(abs(complex(v)) - 1) <= tol for v in self.values)

    def isclose(self, other: "Weight", tol: float = CLUSTER_TOL) -> bool:
        if self.exact and other.exact:
            return self.values == other.values
        return all(abs(complex(a) - complex(b)) <= tol * max(1.0, abs(complex(a)))
                   for a, b in zip(self.values, other.values))

    def sort_key(self):
        return tuple((complex(v).real, complex(v).imag) for v in self.values)

    def __str__(self) -> str:
        return "(" + ", ".join(str(v) for v in self.values) + ")"


@dataclass(frozen=True)
class WeightMultiset:
    entries: tuple[tuple[Weight, int], ...]
    exact: bool
    tol: float | None = None
    certificate: float = 0.0      # largest residual spread seen while extracting

    @property
    def total(self) -> int:
        return sum(m for _, m in self.entries)

    def weights(self) -> list[Weight]:
        return [w for w, _ in self.entries]

    def counter(self) -> Counter:
        return Counter({w.values: m for w, m in self.entries})

    def same_as(self, other: "WeightMultiset", tol: float = CLUSTER_TOL) -> bool:
        if self.exact and other.exact:
            return self.counter() == other.counter()
        left = [[w, m] for w, m in self.entries]
        for w, m in other.entries:
            for item in left:
                if item[1] and item[0].isclose(w, tol):
                    take = min(item[1], m)
                    item[1] -= take
                    m -= take
                    if not m:
                        break
            if m:
                return False
        return all(m == 0 for _, m in left)


def multiset_of(weights: Iterable[Weight], exact: bool | None = None,
                tol: float = CLUSTER_TOL) -> WeightMultiset:
    ws = list(weights)
    if exact is None:
        exact = all(w.exact for w in ws)
    groups: list[list] = []
    for w in ws:
        for g in groups:
            if g[0].isclose(w, tol):
                g[1] += 1
                break
        else:
            groups.append([w, 1])
    groups.sort(key=lambda g: g[0].sort_key())
    return WeightMultiset(tuple((w, m) for w, m in groups), exact, None if exact else tol)


# -- cone tests -------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    """Outcome of a cone test; ``boundary`` marks numeric values within tolerance of a wall."""

    holds: bool
    boundary: bool = False
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds


def _cone_rows(d: BasedRootDatum):
    """Rows ``r_k`` with ``c_k = sum_i r_ki log|t(e_i)|`` the coefficient of ``alpha_k^vee``."""
    r = d.n_simple
    if r == 0:
        return [], integer_kernel([], d.rank) if d.rank else []
    m = [[pairing(a, av) for av in d.simple_coroots] for a in d.simple_roots]
    minv = rational_inverse(m)
    rows = []
    for k in range(r):
        rows.append(tuple(sum(minv[k][j] * d.simple_roots[j][i] for j in range(r)) for i in range(d.rank)))
    return rows, integer_kernel(d.simple_coroots, d.rank)


def _log_sign(w: Weight, coeffs: Sequence[Fraction], tol: float) -> tuple[int, bool]:
    """Sign of ``sum c_i log|v_i|``, exactly when ``w`` is exact; second entry flags the boundary."""
    if w.exact:
        den = 1
        for c in coeffs:
            den = den * Fraction(c).denominator // math.gcd(den, Fraction(c).denominator)
        p = Fraction(1)
        for v, c in zip(w.values, coeffs):
            e = int(Fraction(c) * den)
            if e:
                p *= abs(v) ** e
        return (p > 1) - (p < 1), False
    s = sum(float(c) * lg for c, lg in zip(coeffs, w.log_abs()))
    if abs(s) <= tol:
        return 0, True
    return (1 if s > 0 else -1), False


def weight_position(d: BasedRootDatum, w: Weight, tol: float = CLUSTER_TOL):
    """Signs of the ``alpha^vee``-coefficients of ``log|w|`` and whether it lies in their span."""
    rows, ker = _cone_rows(d)
    signs, bound = [], False
    for r in rows:
        s, b = _log_sign(w, r, tol)
        signs.append(s)
        bound = bound or b
    in_span = True
    for x in ker:
        s, b = _log_sign(w, x, tol)
        if s != 0:
            in_span = False
        bound = bound or b
    return signs, in_span, bound


def cone_test(d: BasedRootDatum, weights: Iterable[Weight], kind: str, tol: float = CLUSTER_TOL) -> Verdict:
    """``kind`` is ``"tempered"`` (``|Wt| in T^-``), ``"discrete"`` (``T^--``) or ``"essential"``."""
    if kind == "discrete" and not d.is_semisimple:
        return Verdict(False, False, "NotSemisimple")
    boundary = False
    for w in weights:
        signs, in_span, b = weight_position(d, w, tol)
        if kind == "tempered":
            ok = in_span and all(s <= 0 for s in signs)
            boundary = boundary or (b and ok)
        else:
            ok = all(s < 0 for s in signs) and (in_span or kind == "essential")
        if not ok:
            return Verdict(False, False, f"weight {w} outside the {kind} cone")
    return Verdict(True, boundary, "boundary within tolerance" if boundary else "")


# -- modules ----------------------------------------------------------------------------

class FinModule:
    """Matrix representation of ``H x Gamma`` on ``C^dim``.

    ``opposite`` marks a module over the opposite algebra (stored matrices
    are then the transposes, see :func:`dual_module`).
    """

    def __init__(self, alg: HeckeAlgebra, s_images: Mapping[str, object],
                 omega_images: Sequence = (), gamma_images: Mapping[int, object] | Sequence | None = None,
                 exact: bool | None = None, opposite: bool = False, check: bool = True,
                 tol: float = RELATION_TOL, name: str = ""):
        G = alg.group
        self.alg = alg
        self.name = name
        self.opposite = opposite
        self.tol = tol
        missing = set(G.labels) - set(s_images)
        if missing:
            raise InputError(f"no image for {sorted(missing)}")
        if len(omega_images) != len(G.omega.generators):
            raise InputError(f"expected {len(G.omega.generators)} Omega images, got {len(omega_images)}")
        ngen = len(alg.gamma.generators)
        if gamma_images is None:
            gamma_images = {}
        if not isinstance(gamma_images, Mapping):
            gamma_images = dict(enumerate(gamma_images))
        raw = [s_images[lab] for lab in G.labels] + list(omega_images) + [gamma_images.get(i) for i in range(ngen)]
        given = [m for m in raw if m is not None]
        if exact is None:
            exact = all(_all_rational(m) for m in given)
        self.exact = bool(exact)
        dims = {np.shape(m)[0] for m in given}
        if len(dims) > 1:
            raise InputError(f"generator images of different sizes {sorted(dims)}")
        self.dim = dims.pop() if dims else 1
        if self.dim <= 0:
            raise InputError("modules must have positive dimension")
        self.s_images = {lab: _to_mat(s_images[lab], self.exact) for lab in G.labels}
        self.omega_images = tuple(_to_mat(m, self.exact) for m in omega_images)
        gi = []
        for i in range(ngen):
            m = gamma_images.get(i)
            if m is None:
                if not alg.gamma.elements[alg.gamma.generator_indices[i]].is_identity():
                    raise InputError(f"no image for Gamma generator {i}")
                m = _eye(self.dim, self.exact)
            gi.append(_to_mat(m, self.exact))
        self.gamma_images = tuple(gi)
        for m in itertools.chain(self.s_images.values(), self.omega_images, self.gamma_images):
            if m.shape != (self.dim, self.dim):
                raise InputError("generator images must be square of equal size")
        self._rho: dict = {}
        self._theta: dict = {}
        self._gamma_all = self._close_gamma()
        if check:
            self.check_relations()

    # -- evaluation ------------------------------------------------------------------
    def _close_gamma(self) -> list:
        ga = self.alg.gamma
        out: list = [None] * len(ga)
        out[0] = _eye(self.dim, self.exact)
        frontier = [0]
        while frontier:
            nxt = []
            for a in frontier:
                for k, g in enumerate(ga.generator_indices):
                    b = ga.mul(g, a)
                    if out[b] is None:
                        img = self.gamma_images[k]
                        out[b] = out[a] @ img if self.opposite else img @ out[a]
                        nxt.append(b)
            frontier = nxt
        return out

    def gamma_matrix(self, index: int) -> np.ndarray:
        return self._gamma_all[index]

    def _omega_matrix(self, om: ExtAffWeylElt) -> np.ndarray:
        coords = self.alg.group.omega.coordinates(om)
        out = _eye(self.dim, self.exact)
        for img, c in zip(self.omega_images, coords):
            if c:
                out = out @ _mpow(img, c, self.exact)
        return out

    def rho_basis(self, g: ExtAffWeylElt) -> np.ndarray:
        hit = self._rho.get(g)
        if hit is not None:
            return hit
        word, om = self.alg.group.reduce(g)
        mats = [self.s_images[lab] for lab in word] + [self._omega_matrix(om)]
        if self.opposite:
            mats.reverse()
        out = mats[0]
        for m in mats[1:]:
            out = out @ m
        self._rho[g] = out
        return out

    def act(self, h) -> np.ndarray:
        """Matrix of ``h`` (a Hecke element, crossed element or scalar)."""
        if isinstance(h, CrossedElt):
            if h.alg is not self.alg:
                raise AlgebraMismatch("element belongs to a different algebra")
            out = None
            for gi, part in h.parts.items():
                a, b = self.act(part), self.gamma_matrix(gi)
                piece = b @ a if self.opposite else a @ b
                out = piece if out is None else out + piece
            return out if out is not None else self._zero_like()
        if isinstance(h, HeckeElt):
            if h.alg is not self.alg:
                raise AlgebraMismatch("element belongs to a different algebra")
            coeffs = {g: _number(c) for g, c in h.terms.items()}
            exact = self.exact and all(isinstance(c, Fraction) for c in coeffs.values())
            out = _zeros(self.dim, exact)
            for g, c in coeffs.items():
                m = self.rho_basis(g)
                out = out + (m * c if exact else m.astype(complex) * complex(c))
            return out
        c = _number(h)
        if self.exact and isinstance(c, Fraction):
            return _eye(self.dim, True) * c
        return np.eye(self.dim, dtype=complex) * complex(c)

    def _zero_like(self) -> np.ndarray:
        return _zeros(self.dim, self.exact)

    def theta(self, x: Sequence[int]) -> np.ndarray:
        x = tuple(int(v) for v in x)
        hit = self._theta.get(x)
        if hit is not None:
            return hit
        x1, x2 = self.alg.theta_decomposition(x)
        G = self.alg.group
        a, b = self.rho_basis(G.t(x1)), self.rho_basis(G.t(x2))
        bi = _inv(b, self.exact)
        out = bi @ a if self.opposite else a @ bi
        self._theta[x] = out
        return out

    def finite(self, w: int) -> np.ndarray:
        return self.rho_basis(self.alg.group.w(w))

    def theta_generators(self) -> list[np.ndarray]:
        n = self.alg.datum.rank
        return [self.theta(tuple(int(i == j) for j in range(n))) for i in range(n)]

    def generator_matrices(self) -> list[np.ndarray]:
        return list(self.s_images.values()) + list(self.omega_images) + list(self.gamma_images)

    # -- relations ---------------------------------------------------------------------
    def plain(self) -> "FinModule":
        """The same data read as a module of the algebra itself (transposing back if opposite)."""
        if not self.opposite:
            return self
        return FinModule(self.alg, {k: v.T for k, v in self.s_images.items()},
                         [m.T for m in self.omega_images], [m.T for m in self.gamma_images],
                         exact=self.exact, check=False, tol=self.tol, name=self.name)

    def check_relations(self, tol: float | None = None) -> None:
        tol = self.tol if tol is None else tol
        m = self.plain()
        alg, G, ex = m.alg, m.alg.group, m.exact
        eye = _eye(m.dim, ex)

        def same(a, b, what):
            if not _close(a, b, ex, tol):
                raise RelationFailure(f"{what} fails in module {self.name or '?'}")

        for lab, s in m.s_images.items():
            qh = _number(alg.qhalf(lab))
            qhi = 1 / qh
            if not (ex and isinstance(qh, Fraction)):
                s, eye_c = s.astype(complex), np.eye(m.dim, dtype=complex)
                same((s - eye_c * complex(qh)) @ (s + eye_c * complex(qhi)), 0 * eye_c, f"quadratic relation at {lab}")
            else:
                same((s - eye * qh) @ (s + eye * qhi), eye * 0, f"quadratic relation at {lab}")
        labels = list(G.labels)
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                mm = G.coxeter_m(a, b)
                if mm is None:
                    continue
                pa = pb = eye
                for k in range(mm):
                    pa = pa @ m.s_images[a if k % 2 == 0 else b]
                    pb = pb @ m.s_images[b if k % 2 == 0 else a]
                same(pa, pb, f"braid relation ({a},{b})")
        oms = G.omega.generators
        for om, img in zip(oms, m.omega_images):
            inv = _inv(img, ex)
            for lab in labels:
                same(img @ m.s_images[lab] @ inv, m.s_images[G.omega_conj_label(om, lab)],
                     f"Omega conjugation of {lab}")
        for (o, img) in zip(G.omega.orders, m.omega_images):
            if o:
                same(_mpow(img, o, ex), eye, "Omega generator order")
        for a, b in itertools.combinations(m.omega_images, 2):
            same(a @ b, b @ a, "Omega commutativity")
        ga = alg.gamma
        for k, gidx in enumerate(ga.generator_indices):
            p = m.gamma_images[k]
            pinv = _inv(p, ex)
            g = ga.elements[gidx]
            for lab in labels:
                same(p @ m.s_images[lab] @ pinv, m.s_images[G.gamma_label(g, lab)], f"Gamma action on {lab}")
            for om, img in zip(oms, m.omega_images):
                same(p @ img @ pinv, m.act(alg.ad_gamma(gidx, alg.N(om))), "Gamma action on Omega")
            for a in range(len(ga)):
                same(p @ m._gamma_all[a], m._gamma_all[ga.mul(gidx, a)], "Gamma group law")

    # -- misc ---------------------------------------------------------------------------
    def __repr__(self) -> str:
        kind = "exact" if self.exact else "numeric"
        op = ", opposite" if self.opposite else ""
        return f"FinModule(dim={self.dim}, {kind}{op}{', ' + self.name if self.name else ''})"


# -- builders -------------------------------------------------------------------------

def from_bernstein(alg: HeckeAlgebra, theta_images: Sequence, finite_images: Sequence,
                   gamma_images=None, exact: bool | None = None, check: bool = True,
                   name: str = "") -> FinModule:
    """Module from the images of ``theta_{e_i}`` and of ``N_{s_i}`` for the finite simple reflections."""
    d, G = alg.datum, alg.group
    given = list(theta_images) + list(finite_images) + list((gamma_images or {}).values()
                                                              if isinstance(gamma_images, Mapping)
                                                              else (gamma_images or []))
    if exact is None:
        exact = all(_all_rational(m) for m in given)
    th = [_to_mat(m, exact) for m in theta_images]
    fin = [_to_mat(m, exact) for m in finite_images]
    if len(th) != d.rank or len(fin) != d.n_simple:
        raise InputError("need one theta image per basis vector of X and one image per simple reflection")
    dim = (th + fin)[0].shape[0] if th or fin else 1
    th_inv = [_inv(m, exact) for m in th]
    fin_cache: dict[int, np.ndarray] = {}

    def fw(w):
        if w not in fin_cache:
            out = _eye(dim, exact)
            for i in d.weyl[w].word:
                out = out @ fin[i]
            fin_cache[w] = out
        return fin_cache[w]

    def tx(x):
        out = _eye(dim, exact)
        for i, k in enumerate(x):
            if k:
                out = out @ _mpow(th[i] if k > 0 else th_inv[i], abs(k), exact)
        return out

    def image(g):
        out = _zeros(dim, exact)
        for b in alg.to_bernstein(alg.N(g)):
            c = _number(b.coefficient)
            if exact and not isinstance(c, Fraction):
                raise InputError("inexact coefficient in an exact module")
            out = out + tx(b.x) @ fw(b.w) * (c if exact else complex(c))
        return out

    s_imgs = {}
    for s in G.s_aff:
        if s.kind == "finite":
            s_imgs[s.label] = fin[int(s.label[1:]) - 1]
        else:
            s_imgs[s.label] = image(s.element)
    omega = [image(om) for om in G.omega.generators]
    return FinModule(alg, s_imgs, omega, gamma_images, exact=exact, check=check, name=name)


def one_dim(alg: HeckeAlgebra, s_values: Mapping[str, object] | None = None,
            omega_values: Sequence | None = None, gamma_values: Sequence | None = None,
            name: str = "", check: bool = True) -> FinModule:
    G = alg.group
    s_values = s_values or {}
    s = {lab: [[_number(s_values[lab])]] for lab in G.labels}
    om = [[[_number(v)]] for v in (omega_values or [1] * len(G.omega.generators))]
    gm = [[[_number(v)]] for v in (gamma_values or [1] * len(alg.gamma.generators))]
    return FinModule(alg, s, om, gm, name=name, check=check)


def steinberg_module(alg: HeckeAlgebra) -> FinModule:
    """``N_s -> -q_s^{-1/2}``, ``Omega`` and ``Gamma`` trivially."""
    vals = {lab: -1 / _number(alg.qhalf(lab)) for lab in alg.group.labels}
    return one_dim(alg, vals, name="steinberg")


def trivial_module(alg: HeckeAlgebra) -> FinModule:
    """``N_s -> q_s^{1/2}``, ``Omega`` and ``Gamma`` trivially."""
    vals = {lab: _number(alg.qhalf(lab)) for lab in alg.group.labels}
    return one_dim(alg, vals, name="trivial")


def character_module(alg: HeckeAlgebra, t) -> FinModule:
    """The one-dimensional ``O(T)``-module at ``t`` (for a datum without roots)."""
    if alg.datum.n_simple:
        raise InputError("character modules of O(T) need a datum without roots")
    w = Weight.coerce(t)
    return from_bernstein(alg, [[[v]] for v in w.values], [], name=f"C_{w}")


def direct_sum(*mods: FinModule) -> FinModule:
    alg = mods[0].alg
    if any(m.alg is not alg for m in mods):
        raise AlgebraMismatch("summands over different algebras")
    exact = all(m.exact for m in mods)

    def block(ms):
        return _block_exact(ms) if exact else sla.block_diag(*[m.astype(complex) for m in ms])

    G = alg.group
    s = {lab: block([m.s_images[lab] for m in mods]) for lab in G.labels}
    om = [block([m.omega_images[k] for m in mods]) for k in range(len(G.omega.generators))]
    gm = [block([m.gamma_images[k] for m in mods]) for k in range(len(alg.gamma.generators))]
    return FinModule(alg, s, om, gm, exact=exact, opposite=mods[0].opposite, check=False,
                     name="+".join(m.name or "?" for m in mods))


def _block_exact(ms):
    n = sum(m.shape[0] for m in ms)
    out = xl.frac_zeros((n, n))
    k = 0
    for m in ms:
        r = m.shape[0]
        out[k:k + r, k:k + r] = m
        k += r
    return out


def restrict_to(m: FinModule, basis: np.ndarray, name: str = "") -> FinModule:
    """Submodule on the invariant subspace spanned by the (orthonormal) columns of ``basis``."""
    z = basis
    zh = z.conj().T

    def r(a):
        return zh @ a.astype(complex) @ z

    G = m.alg.group
    s = {lab: r(m.s_images[lab]) for lab in G.labels}
    sub = FinModule(m.alg, s, [r(a) for a in m.omega_images], [r(a) for a in m.gamma_images],
                    exact=False, opposite=m.opposite, check=False, name=name)
    for a in m.generator_matrices():
        a = a.astype(complex)
        res = a @ z - z @ (zh @ a @ z)
        if np.max(np.abs(res), initial=0.0) > 1e-7 * _scale(a):
            raise NotSplitWithinTolerance("subspace is not invariant within tolerance")
    return sub


def dual_module(m: FinModule) -> FinModule:
    """``pi^*(h^op) = pi(h)^T`` on the dual space."""
    return FinModule(m.alg, {k: v.T.copy() for k, v in m.s_images.items()},
                     [a.T.copy() for a in m.omega_images], [a.T.copy() for a in m.gamma_images],
                     exact=m.exact, opposite=not m.opposite, check=False, tol=m.tol,
                     name=f"{m.name}*" if m.name else "dual")


def twist_module(m: FinModule, gamma: int) -> FinModule:
    """``h -> pi(Ad(gamma) h)``."""
    alg, G = m.alg, m.alg.group
    ga = alg.gamma
    g = ga.elements[gamma]
    s = {lab: m.s_images[G.gamma_label(g, lab)] for lab in G.labels}
    om = [m.act(alg.ad_gamma(gamma, alg.N(o))) for o in G.omega.generators]
    gi = ga.inv(gamma)
    gm = [m.gamma_matrix(ga.mul(ga.mul(gamma, k), gi)) for k in ga.generator_indices]
    return FinModule(alg, s, om, gm, exact=m.exact and all(_all_rational(a) for a in om),
                     opposite=m.opposite, check=False, name=f"{m.name}^g{gamma}")


# -- weights ----------------------------------------------------------------------------

def _rational_guess(z: complex, tol: float) -> Fraction | None:
    if abs(z.imag) > tol * max(1.0, abs(z)):
        return None
    return Fraction(z.real).limit_denominator(10 ** 6)


def _exact_weights(mats: list[np.ndarray], dim: int) -> list[tuple[Weight, int]] | None:
    """Joint generalized eigenspaces over the rationals; ``None`` if a weight is irrational."""
    spaces = [((), [m for m in mats], dim)]
    for i in range(len(mats)):
        nxt = []
        for vals, ms, k in spaces:
            a = ms[i]
            ev = np.linalg.eigvals(a.astype(complex))
            cands = []
            for z in ev:
                lam = _rational_guess(complex(z), 1e-6)
                if lam is None:
                    return None
                if lam not in cands:
                    cands.append(lam)
            found = 0
            for lam in cands:
                shifted = a - xl.frac_eye(k) * lam
                ker = xl.nullspace(_mpow(shifted, k, True))
                kk = ker.shape[1]
                if not kk:
                    continue
                found += kk
                restricted = []
                for b in ms:
                    sol = xl.solve(ker, b @ ker)
                    if sol is None:
                        return None
                    restricted.append(sol)
                nxt.append((vals + (lam,), restricted, kk))
            if found != k:
                return None
        spaces = nxt
    return [(Weight(vals), k) for vals, _, k in spaces]


def _numeric_weights(mats: list[np.ndarray], dim: int, tol: float, seed: int = 7):
    rng = np.random.default_rng(seed)
    cm = [m.astype(complex) for m in mats]
    sc = max((_scale(m) for m in cm), default=1.0)
    merge = math.sqrt(tol)
    for _attempt in range(4):
        coeffs = rng.normal(size=len(cm))
        c = sum((a * m for a, m in zip(coeffs, cm)), np.zeros((dim, dim), dtype=complex))
        ev = np.linalg.eigvals(c)
        clusters = _cluster(list(ev), merge * max(1.0, _scale(c)))
        out, worst, ok = [], 0.0, True
        for center, size in clusters:
            _, zz, sdim = _ordered_schur(c, center, merge * max(1.0, _scale(c)))
            if sdim != size:
                ok = False
                break
            basis = zz[:, :size]
            vals = []
            for m in cm:
                r = basis.conj().T @ m @ basis
                e = np.linalg.eigvals(r)
                mean = complex(np.trace(r) / size)
                spread = float(np.max(np.abs(e - mean))) if size else 0.0
                worst = max(worst, spread)
                if spread > merge * sc:
                    ok = False
                vals.append(mean)
            out.append((Weight(tuple(vals)), size))
        if ok:
            return out, worst
    raise NumericIllConditioned("weights could not be separated within tolerance")


def _ordered_schur(c, center, radius):
    t, z, sdim = sla.schur(c, output="complex", sort=lambda w: abs(w - center) <= radius)
    return t, z, sdim


def _cluster(values: list[complex], radius: float) -> list[tuple[complex, int]]:
    vals = sorted(values, key=lambda z: (z.real, z.imag))
    parent = list(range(len(vals)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in itertools.combinations(range(len(vals)), 2):
        if abs(vals[i] - vals[j]) <= radius:
            parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i, v in enumerate(vals):
        groups.setdefault(find(i), []).append(v)
    return [(complex(np.mean(g)), len(g)) for g in groups.values()]


def weights(m: FinModule, tol: float = CLUSTER_TOL) -> WeightMultiset:
    """Generalized joint eigenvalues of the ``theta_{e_i}``, with multiplicities."""
    mats = m.theta_generators()
    if not mats:
        return WeightMultiset(((Weight(()), m.dim),), True)
    if m.exact:
        ex = _exact_weights(mats, m.dim)
        if ex is not None:
            ex.sort(key=lambda e: e[0].sort_key())
            return WeightMultiset(tuple(ex), True)
    out, worst = _numeric_weights(mats, m.dim, tol)
    out.sort(key=lambda e: e[0].sort_key())
    return WeightMultiset(tuple(out), False, tol, worst)


def is_tempered(m: FinModule, tol: float = CLUSTER_TOL) -> Verdict:
    return cone_test(m.alg.datum, weights(m, tol).weights(), "tempered", tol)


def is_discrete_series(m: FinModule, tol: float = CLUSTER_TOL) -> Verdict:
    if not m.alg.datum.is_semisimple:
        return Verdict(False, False, "NotSemisimple")
    return cone_test(m.alg.datum, weights(m, tol).weights(), "discrete", tol)


def is_essentially_discrete(m: FinModule, tol: float = CLUSTER_TOL) -> Verdict:
    return cone_test(m.alg.datum, weights(m, tol).weights(), "essential", tol)


# -- central characters ------------------------------------------------------------------

@dataclass(frozen=True)
class CentralCharacter:
    orbit: tuple[Weight, ...]
    norm: float
    gram: tuple = field(repr=False, default=())

    def contains(self, w: Weight, tol: float = CLUSTER_TOL) -> bool:
        return any(o.isclose(w, tol) for o in self.orbit)


def wgamma_orbit(alg: HeckeAlgebra, t, tol: float = CLUSTER_TOL) -> list[Weight]:
    d = alg.datum
    t = Weight.coerce(t)
    out: list[Weight] = []
    for w in d.weyl:
        tw = t.transform(w.matrix) if d.rank else t
        for g in alg.gamma.elements:
            p = tw.apply(g.torus_aut()) if d.rank else tw
            if not any(p.isclose(o, tol) for o in out):
                out.append(p)
    out.sort(key=Weight.sort_key)
    return out


def weight_norm(gram, w: Weight) -> float:
    mu = w.log_abs()
    n = len(mu)
    return math.sqrt(max(0.0, sum(float(gram[i][j]) * mu[i] * mu[j] for i in range(n) for j in range(n))))


def central_character(m: FinModule, tol: float = CLUSTER_TOL, probe: bool = True,
                      gram=None) -> CentralCharacter:
    alg, d = m.alg, m.alg.datum
    wts = weights(m, tol).weights()
    orbit = wgamma_orbit(alg, wts[0], tol)
    for w in wts:
        if not any(w.isclose(o, tol) for o in orbit):
            raise NotScalarCentralAction(f"weights {wts[0]} and {w} lie in different W Gamma orbits")
    if probe:
        for i in range(d.rank):
            for sgn in (1, -1):
                x = tuple(sgn * int(i == j) for j in range(d.rank))
                a = m.act(alg.symmetrized_theta(x))
                c = a[0, 0]
                if not _close(a, _eye(m.dim, m.exact) * c if m.exact and isinstance(c, Fraction)
                              else np.eye(m.dim, dtype=complex) * complex(c), m.exact, 1e-7):
                    raise NotScalarCentralAction("a symmetrized theta element does not act by a scalar")
    if gram is None:
        gram = invariant_form(d, alg.gamma)
    return CentralCharacter(tuple(orbit), weight_norm(gram, orbit[0]), gram)


# -- intertwiners and decomposition ------------------------------------------------------------

@dataclass
class HomSpace:
    dim: int
    basis: list
    exact: bool


def hom_space(m1: FinModule, m2: FinModule, tol: float = RELATION_TOL) -> HomSpace:
    """All ``X`` (``dim m1 x dim m2``) with ``act1(g) X = X act2(g)`` on the generators."""
    if m1.alg is not m2.alg:
        raise AlgebraMismatch("modules over different algebras")
    if m1.opposite != m2.opposite:
        raise AlgebraMismatch("cannot compare a module with an opposite module")
    d1, d2 = m1.dim, m2.dim
    exact = m1.exact and m2.exact and d1 * d2 <= EXACT_HOM_LIMIT
    pairs = list(zip(m1.generator_matrices(), m2.generator_matrices()))
    blocks = []
    for a, b in pairs:
        if exact:
            blocks.append(_kron_exact(xl.frac_eye(d2), a) - _kron_exact(b.T, xl.frac_eye(d1)))
        else:
            blocks.append(np.kron(np.eye(d2), a.astype(complex)) - np.kron(b.T.astype(complex), np.eye(d1)))
    if exact:
        big = np.concatenate(blocks, axis=0) if blocks else xl.frac_zeros((0, d1 * d2))
        ns = xl.nullspace(big)
        basis = [ns[:, k].reshape(d2, d1).T for k in range(ns.shape[1])]
        return HomSpace(len(basis), basis, True)
    big = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, d1 * d2))
    if big.shape[0] == 0:
        ns = np.eye(d1 * d2)
    else:
        # absolute threshold: a relative one finds no kernel when big is tiny but nonzero
        scale = max([1.0] + [_scale(a) for p in pairs for a in p])
        _, sv, vh = np.linalg.svd(big)
        sv = np.concatenate([sv, np.zeros(vh.shape[0] - sv.size)])
        ns = vh[sv <= tol * 10 * scale].conj().T
    basis = [ns[:, k].reshape(d2, d1).T for k in range(ns.shape[1])]
    return HomSpace(len(basis), basis, False)


def _kron_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ra, ca = a.shape
    rb, cb = b.shape
    out = xl.frac_zeros((ra * rb, ca * cb))
    for i in range(ra):
        for j in range(ca):
            if a[i, j] != 0:
                out[i * rb:(i + 1) * rb, j * cb:(j + 1) * cb] = b * a[i, j]
    return out


def _split_once(m: FinModule, tol: float, rng) -> list[FinModule] | None:
    com = hom_space(m if not m.exact else _numeric(m), m if not m.exact else _numeric(m), tol)
    if com.dim <= 1:
        return None
    for _ in range(4):
        a = sum(complex(rng.normal(), rng.normal()) * x for x in com.basis)
        ev = np.linalg.eigvals(a)
        radius = math.sqrt(CLUSTER_TOL) * _scale(a)
        clusters = _cluster(list(ev), radius)
        if len(clusters) > 1:
            parts = []
            for center, size in clusters:
                _, z, sdim = _ordered_schur(a, center, radius)
                if sdim != size:
                    raise NotSplitWithinTolerance("commutant eigenvalues are not separated")
                parts.append(restrict_to(m, z[:, :size]))
            return parts
    return None


def _numeric(m: FinModule) -> FinModule:
    return FinModule(m.alg, {k: v.astype(complex) for k, v in m.s_images.items()},
                     [a.astype(complex) for a in m.omega_images], [a.astype(complex) for a in m.gamma_images],
                     exact=False, opposite=m.opposite, check=False, name=m.name)


def decompose(m: FinModule, tol: float = RELATION_TOL, seed: int = 11) -> list[tuple[FinModule, int]]:
    """Indecomposable summands with multiplicities, via eigenspaces of random commutant elements."""
    rng = np.random.default_rng(seed)
    todo = [m if not m.exact else _numeric(m)]
    done: list[FinModule] = []
    while todo:
        cur = todo.pop()
        parts = _split_once(cur, tol, rng)
        if parts is None:
            done.append(cur)
        else:
            todo.extend(parts)
    groups: list[list] = []
    for f in done:
        for g in groups:
            if g[0].dim == f.dim and hom_space(g[0], f, 1e-7).dim >= 1:
                g[1] += 1
                break
        else:
            groups.append([f, 1])
    for f, _ in groups:
        f.check_relations(1e-7)
    return [(f, k) for f, k in groups]


# -- characters ---------------------------------------------------------------------------

def spanning_words(alg: HeckeAlgebra, box: int = 1) -> list[tuple[tuple[int, ...], int, int]]:
    """``(x, w, gamma)`` indexing ``theta_x N_w N_gamma`` with ``x`` in ``[-box, box]^n``."""
    d = alg.datum
    xs = list(itertools.product(range(-box, box + 1), repeat=d.rank))
    return [(x, w.index, g) for x in xs for w in d.weyl for g in range(len(alg.gamma))]


def character(m: FinModule, words: Sequence | None = None, box: int = 1) -> dict:
    words = spanning_words(m.alg, box) if words is None else words
    out = {}
    for x, w, g in words:
        a = m.theta(x) @ m.finite(w) @ m.gamma_matrix(g)
        out[(tuple(x), w, g)] = complex(np.trace(a.astype(complex)))
    return out


def same_character(c1: Mapping, c2: Mapping, tol: float = CLUSTER_TOL) -> bool:
    if set(c1) != set(c2):
        return False
    scale = max([1.0] + [abs(v) for v in c1.values()] + [abs(v) for v in c2.values()])
    return all(abs(c1[k] - c2[k]) <= tol * scale for k in c1)
