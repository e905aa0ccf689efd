import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from affhecke.errors import InfiniteIntersection, NotLiftable
from affhecke.lattice import (AffineTorusAut, Lattice, LatticeMap, TorusPoint, close_group, det,
                              finite_intersection, fixed_locus, integer_kernel, isogeny_lift, matmul,
                              preimages, smith_normal_form, snf_diagonal)


def matrices(max_n=6):
    return st.integers(1, max_n).flatmap(
        lambda r: st.integers(1, max_n).flatmap(
            lambda c: st.lists(st.lists(st.integers(-20, 20), min_size=c, max_size=c),
                               min_size=r, max_size=r)))


@given(matrices())
def test_snf_identity_and_divisibility(m):
    u, d, v = smith_normal_form(m)
    assert matmul(matmul(u.matrix, m), v.matrix) == d.matrix
    assert abs(det(u.matrix)) == 1 and abs(det(v.matrix)) == 1
    diag = [d.matrix[i][i] for i in range(min(len(m), len(m[0])))]
    assert all(x >= 0 for x in diag)
    for a, b in zip(diag, diag[1:]):
        assert (b == 0) if a == 0 else b % a == 0
    off = [d.matrix[i][j] for i in range(len(m)) for j in range(len(m[0])) if i != j]
    assert not any(off)


def test_snf_oracle():
    assert snf_diagonal([[2, 4, 4], [-6, 6, 12], [10, -4, -16]]) == [2, 6, 12]
    assert snf_diagonal([[2, 0], [0, 3]]) == [1, 6]


def test_lattice_rank_and_map_shapes():
    assert Lattice(0).rank == 0
    with pytest.raises(Exception):
        Lattice(-1)
    f = LatticeMap.from_rows([[1, 2], [3, 4], [5, 6]])
    assert f((1, 1)) == (3, 7, 11)
    with pytest.raises(Exception):
        LatticeMap(Lattice(3), Lattice(3), ((1, 2), (3, 4)))


def test_kernel():
    ker = integer_kernel([(1, -1)], 2)
    assert len(ker) == 1 and ker[0][0] == ker[0][1]


rat = st.fractions(min_value=-3, max_value=3, max_denominator=12)


@given(st.lists(rat, min_size=1, max_size=3), st.data())
def test_polar_decomposition_normalized(unit, data):
    real = data.draw(st.lists(rat, min_size=len(unit), max_size=len(unit)))
    t = TorusPoint(tuple(unit), tuple(real))
    assert all(0 <= a < 1 for a in t.unitary)
    assert t.unitary_part() * t.absolute() == t
    assert t.unitary_part().is_unitary() and t.absolute().is_real_positive()
    assert TorusPoint(t.unitary, t.real) == t
    assert t * t.inverse() == TorusPoint.identity(t.rank)


def test_affine_aut_action_on_points():
    # t -> z * (t o L^{-1})
    g = AffineTorusAut(((0, 1), (1, 0)), TorusPoint((Fraction(1, 2), 0)))
    t = TorusPoint((Fraction(1, 3), Fraction(1, 5)))
    assert g(t) == TorusPoint((Fraction(1, 2) + Fraction(1, 5), Fraction(1, 3)))
    assert (g @ g.inverse()).is_identity()
    with pytest.raises(Exception):
        AffineTorusAut(((2, 0), (0, 1)), TorusPoint.identity(2))


def _torsion_points(n, m):
    for c in itertools.product(range(m), repeat=n):
        yield TorusPoint(tuple(Fraction(x, m) for x in c))


@pytest.mark.parametrize("a,b,n", [
    ([(2, 0)], [(0, 3)], 2),
    ([(1, 1)], [(1, -1)], 2),
    ([(2, 0, 0), (0, 2, 0)], [(0, 0, 2), (1, 1, 1)], 3),
    ([(4,)], [(6,)], 1),
])
def test_finite_intersection_matches_enumeration(a, b, n):
    fin = finite_intersection(a, b, n)
    # every case has exponent dividing 12
    brute = {t for t in _torsion_points(n, 12) if all(t.value(v) == 1 for v in a + b)}
    assert fin.order == len(brute) == len(fin.elements())
    assert set(fin.elements()) == brute


def test_finite_intersection_infinite():
    with pytest.raises(InfiniteIntersection):
        finite_intersection([(1, 0)], [(2, 0)], 2)


def _brute_fixed(aut, m):
    return [t for t in _torsion_points(aut.rank, m) if aut(t) == t]


@pytest.mark.parametrize("lin,z", [
    (((-1,),), (0,)),
    (((-1,),), (Fraction(1, 2),)),
    (((0, 1), (1, 0)), (0, 0)),
    (((-1, 0), (0, -1)), (Fraction(1, 2), 0)),
    (((0, 1, 0), (0, 0, 1), (1, 0, 0)), (0, 0, 0)),
])
def test_fixed_locus_components(lin, z):
    aut = AffineTorusAut(lin, TorusPoint(tuple(Fraction(v) for v in z)))
    fl = fixed_locus(aut)
    assert aut(fl.witness) == fl.witness
    if fl.dim == 0:
        pts = _brute_fixed(aut, 12)
        assert len(pts) == fl.components
    else:
        # positive-dimensional: the torsion points of order m fixed form a group-coset count
        # growing like m^dim times the component count
        m = 6
        assert len(_brute_fixed(aut, m)) == fl.components * m ** fl.dim


def test_close_group_order():
    inv = AffineTorusAut(((-1,),), TorusPoint.identity(1))
    assert len(close_group([inv])) == 2


def test_isogeny_square_on_c_star():
    inv = AffineTorusAut(((-1,),), TorusPoint.identity(1))
    res = isogeny_lift([[2]], [inv])
    assert len(res.kernel) == 2 and len(res.gamma_prime) == 4
    assert len(res.gamma_prime) == len(res.kernel) * len(res.gamma)
    for a in res.gamma_prime:
        for b in res.gamma_prime:
            assert res.project(a @ b) == res.project(a) @ res.project(b)
    assert all(c in set(res.kernel) for c in res.cocycle.values())


@given(st.fractions(min_value=0, max_value=1, max_denominator=8).filter(lambda x: x < 1))
def test_preimages_project_back(zu):
    z = TorusPoint((zu,))
    pre = preimages([[3]], z)
    assert len(pre) == 3
    assert all(p.pullback([[3]]) == z for p in pre)


def test_isogeny_not_liftable():
    swap = AffineTorusAut(((0, 1), (1, 0)), TorusPoint.identity(2))
    with pytest.raises(NotLiftable):
        isogeny_lift([[2, 0], [0, 1]], [swap])
