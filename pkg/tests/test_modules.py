from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import evaluated, suite_data
from affhecke import modules as md
from affhecke.data import a1xa1_swap, gl2_swap, torus
from affhecke.errors import NotScalarCentralAction, RelationFailure
from affhecke.hecke import HeckeAlgebra
from affhecke.induction import GammaQFamily, InductionDatum, induce, lower_crossed

DATA = suite_data()
A1 = evaluated(DATA["A1"], 4)
GL2 = evaluated(DATA["GL2"], 4)


def principal(alg, t, family=None):
    fam = family or GammaQFamily.trivial(alg.gamma)
    low = lower_crossed(alg, (), fam.of(()))
    return induce(InductionDatum(alg, (), md.one_dim(low), t, fam))


def test_steinberg_oracle_a1():
    st_ = md.steinberg_module(A1)
    assert st_.exact and st_.dim == 1
    (w, k), = md.weights(st_).entries
    assert w.values == (Fraction(1, 4),) and k == 1
    assert md.is_discrete_series(st_).holds
    assert md.is_tempered(st_).holds


def test_trivial_oracle_a1():
    tr = md.trivial_module(A1)
    (w, _), = md.weights(tr).entries
    assert w.values == (Fraction(4),)
    assert not md.is_tempered(tr).holds
    assert not md.is_discrete_series(tr).holds


def test_gl2_steinberg_oracle():
    m = md.steinberg_module(GL2)
    (w, _), = md.weights(m).entries
    assert w.values == (Fraction(-1, 2), Fraction(-2))
    assert md.is_tempered(m).holds
    v = md.is_discrete_series(m)
    assert not v.holds and v.reason == "NotSemisimple"
    assert md.is_essentially_discrete(m).holds


def test_central_character_oracle():
    cc = md.central_character(md.steinberg_module(A1))
    assert [w.values for w in cc.orbit] == [(Fraction(1, 4),), (Fraction(4),)]
    assert cc.norm == pytest.approx(np.log(4), rel=1e-12)
    assert cc.contains(md.weights(md.trivial_module(A1)).weights()[0])


def test_hom_and_decompose():
    s, t = md.steinberg_module(A1), md.trivial_module(A1)
    assert md.hom_space(s, s).dim == 1
    assert md.hom_space(s, t).dim == 0
    parts = md.decompose(md.direct_sum(s, t))
    assert sorted(f.dim for f, _ in parts) == [1, 1] and all(k == 1 for _, k in parts)
    parts = md.decompose(md.direct_sum(s, s))
    assert [(f.dim, k) for f, k in parts] == [(1, 2)]
    with pytest.raises(NotScalarCentralAction):
        md.central_character(principal_sum())


def principal_sum():
    return md.direct_sum(principal(A1, (3,)), principal(A1, (Fraction(1, 2),)))


def test_relation_failure():
    with pytest.raises(RelationFailure):
        md.one_dim(A1, {"s1": 5, "s0": Fraction(-1, 2)})


def test_numeric_module():
    alg = evaluated(DATA["A1"], 3)
    m = md.steinberg_module(alg)
    assert not m.exact
    ws = md.weights(m)
    assert ws.total == 1 and abs(ws.weights()[0].values[0] - 1 / 3) < 1e-9
    assert md.is_discrete_series(m).holds


def test_character_module_unitary_is_tempered():
    alg = HeckeAlgebra(torus(1))
    m = md.character_module(alg, (Fraction(-1),))
    assert md.is_tempered(m).holds
    assert not md.is_tempered(md.character_module(alg, (Fraction(2),))).holds


t_vals = st.sampled_from([Fraction(v) for v in (2, 3, -1, Fraction(1, 2), Fraction(-1, 3), 1)])


@settings(max_examples=25)
@given(t_vals, t_vals)
def test_flags_stable_under_dual_and_twist(a, b):
    d, gam = a1xa1_swap()
    alg = evaluated(d, 4, gamma=gam)
    m = principal(alg, (a, b))
    assert md.weights(m).total == m.dim == 8
    flags = [bool(f(m)) for f in (md.is_tempered, md.is_discrete_series, md.is_essentially_discrete)]
    for other in (md.dual_module(m), md.twist_module(m, 1)):
        assert [bool(f(other)) for f in (md.is_tempered, md.is_discrete_series,
                                         md.is_essentially_discrete)] == flags
    tw = md.twist_module(m, 1)
    tw.check_relations()
    assert md.weights(tw).same_as(md.multiset_of(
        [w.apply(alg.gamma.elements[1].torus_aut()) for w, k in md.weights(m).entries
         for _ in range(k)]))


def test_twist_gl2_relations():
    d, gam = gl2_swap()
    alg = evaluated(d, 4, gamma=gam)
    m = principal(alg, (2, 3))
    md.twist_module(m, 1).check_relations()
    md.dual_module(m)


@pytest.mark.parametrize("t", [(3,), (-1,), (Fraction(1, 2),)])
def test_weights_total_and_cc_norm_constant(t):
    m = principal(A1, t)
    ws = md.weights(m)
    assert ws.total == m.dim == 2
    cc = md.central_character(m)
    norms = {round(md.weight_norm(cc.gram, w), 12) for w in cc.orbit}
    assert len(norms) == 1


def test_character_equality_iso():
    m = principal(A1, (3,))
    n = principal(A1, (Fraction(1, 3),))
    assert md.same_character(md.character(m), md.character(n))
    assert not md.same_character(md.character(m), md.character(principal(A1, (2,))))


def test_boundary_flag():
    d = DATA["A1"]
    w = md.Weight((complex(1 + 1e-10),))
    v = md.cone_test(d, [w], "tempered")
    assert v.boundary
