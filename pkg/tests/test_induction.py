import itertools
from fractions import Fraction

import pytest

from _support import evaluated, suite_data
from affhecke import modules as md
from affhecke.data import a1xa1_swap, gl2_swap
from affhecke.errors import AlgebraMismatch, DomainMismatch, InputError
from affhecke.induction import (GammaQFamily, InductionDatum, check_condition_gamma, compose,
                                extended_quotient, fourier_specialize, gamma_coset_reps, groupoid_act,
                                groupoid_arrows, induce, lower_crossed, same_constituents,
                                weights_of_induced)
from affhecke.rootdatum import parabolic

DATA = suite_data()
A1 = evaluated(DATA["A1"], 4)
GL2 = evaluated(DATA["GL2"], 4)


def datum(alg, Q, sigma="steinberg", t=None, fam=None):
    fam = fam or GammaQFamily.trivial(alg.gamma)
    low = lower_crossed(alg, Q, fam.of(Q))
    s = md.steinberg_module(low) if sigma == "steinberg" else md.trivial_module(low)
    return InductionDatum(alg, Q, s, t, fam)


def test_principal_series_a1_oracle():
    m = induce(datum(A1, (), t=(3,)))
    assert m.dim == 2 and m.exact
    assert sorted(w.values for w in md.weights(m).weights()) == [(Fraction(1, 3),), (Fraction(3),)]
    # x -> t(x) on theta_x: trace of theta_alpha is 3 + 1/3
    assert m.theta((1,)).trace() == Fraction(10, 3)


def test_inflation_q_delta():
    m = induce(datum(A1, (0,)))
    assert m.dim == 1
    assert md.weights(m).weights()[0].values == (Fraction(1, 4),)
    assert md.weights(m).same_as(weights_of_induced(datum(A1, (0,))))


def test_t_outside_TQ_rejected():
    with pytest.raises(DomainMismatch):
        datum(GL2, (0,), t=(2, 3))
    with pytest.raises(InputError):
        datum(A1, (), t=())
    with pytest.raises(AlgebraMismatch):
        InductionDatum(A1, (), md.steinberg_module(A1))


def test_gl2_q_delta_center_twist():
    # T^Q for Q = Delta is the centre: t = (c, c)
    d = datum(GL2, (0,), t=(2, 2))
    m = induce(d)
    assert md.weights(m).weights()[0].values == (Fraction(-1), Fraction(-4))


def test_gamma_coset_reps():
    d, gam = a1xa1_swap()
    reps = gamma_coset_reps(gam, (0,))
    assert reps == [0, 1]
    assert len(gamma_coset_reps(gam, (0, 1))) == 1


def test_groupoid_gl2():
    arrows = groupoid_arrows(GL2, (), ())
    assert len(arrows) == 2
    e = next(a for a in arrows if a.w == 0)
    for a in arrows:
        assert compose(GL2, e, a) == a == compose(GL2, a, e)
    d = datum(GL2, (), t=(2, 3))
    for a in arrows:
        assert same_constituents(d, groupoid_act(a, d))
    swapped = groupoid_act(next(a for a in arrows if a.w != 0), d)
    assert sorted(swapped.t.values) == [2, 3] and swapped.t.values != d.t.values


def test_groupoid_k_q_arrows_gl2():
    arrows = groupoid_arrows(GL2, (0,), (0,))
    assert len(arrows) == parabolic(GL2.datum, (0,)).K.order
    d = datum(GL2, (0,), t=(3, 3))
    assert all(same_constituents(d, groupoid_act(a, d)) for a in arrows)


def test_condition_checker():
    d, gam = a1xa1_swap()
    assert check_condition_gamma(GammaQFamily.trivial(gam)).passed
    good = GammaQFamily(gam, {(0, 1): (0, 1)})
    assert check_condition_gamma(good).passed
    bad = GammaQFamily.stabilizers(gam)
    rep = check_condition_gamma(bad)
    assert not rep.passed and rep.witnesses


def test_condition_checker_gl2_swap_inverts_centre():
    d, gam = gl2_swap()
    rep = check_condition_gamma(GammaQFamily(gam, {(0,): (0, 1)}))
    assert not rep.clauses[3]
    (w,) = [w for w in rep.witnesses if w["clause"] == 3]
    assert w["gamma"] == 1 and not w["in_K_Q"]


def test_swap_induction_dims():
    d, gam = a1xa1_swap()
    alg = evaluated(d, 4, gamma=gam)
    fam = GammaQFamily(gam, {(0, 1): (0, 1)})
    assert induce(datum(alg, (0, 1), fam=fam)).dim == 1
    assert induce(datum(alg, (), t=(2, 3), fam=fam)).dim == 8
    m = induce(datum(alg, (0, 1), fam=fam))
    assert md.is_discrete_series(m).holds


def test_extended_quotient_a1():
    entries = extended_quotient(DATA["A1"])
    ident = next(e for e in entries if e.word == ())
    refl = next(e for e in entries if e.word == (0,))
    assert (ident.dim, ident.components, ident.survives) == (1, 1, False)
    assert (refl.dim, refl.components, refl.survives) == (0, 2, True)


def test_fourier_specialize_blocks():
    ds = [datum(A1, (), t=(t,)) for t in (2, 3)]
    h = A1.theta((1,))
    m = fourier_specialize(h, ds)
    assert m.shape == (4, 4)
    assert sorted(m[i, i] for i in range(4)) == sorted([2, Fraction(1, 2), 3, Fraction(1, 3)])


@pytest.mark.parametrize("name", ["A2", "B2"])
def test_dims_all_Q(name):
    alg = evaluated(DATA[name], 4)
    D = alg.datum
    for k in range(D.n_simple + 1):
        for Q in itertools.combinations(range(D.n_simple), k):
            d = datum(alg, Q)
            m = induce(d)
            assert m.dim == len(D.weyl) // len(parabolic(D, Q).weyl_Q)
            assert md.weights(m).same_as(weights_of_induced(d))


@pytest.mark.parametrize("c", [Fraction(1), Fraction(2), Fraction(-1, 3), Fraction(5, 7)])
def test_essential_discreteness_independent_of_central_twist(c):
    base = induce(datum(GL2, (0,)))
    twisted = induce(datum(GL2, (0,), t=(c, c)))
    assert md.is_essentially_discrete(twisted).holds == md.is_essentially_discrete(base).holds
    assert md.is_essentially_discrete(base).holds
    # only the unitary twists stay tempered
    assert md.is_tempered(twisted).holds == (abs(c) == 1)
