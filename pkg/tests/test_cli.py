import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from affhecke.cli import eval_hecke, main, parse_eval
from affhecke.errors import InputError
from affhecke.specfile import SpecError, SpecFile, build, parse, serialize

SPECS = Path(__file__).resolve().parent.parent / "specs"

vec = st.lists(st.integers(-3, 3), min_size=2, max_size=2).map(tuple)
rat = st.fractions(min_value=0, max_value=1, max_denominator=6).filter(lambda x: x < 1)


@st.composite
def specs(draw):
    k = draw(st.integers(0, 2))
    roots = tuple(draw(vec) for _ in range(k))
    coroots = tuple(draw(vec) for _ in range(k))
    params = tuple((draw(st.sampled_from(["all", "s1", "s0"])),
                    draw(st.one_of(st.fractions(min_value=Fraction(1, 9), max_value=9, max_denominator=9)
                                   .filter(lambda v: v > 0), st.sampled_from(["q", "u"]))))
                   for _ in range(draw(st.integers(0, 2))))
    gamma = tuple((((0, 1), (1, 0)), (draw(rat), draw(rat))) for _ in range(draw(st.integers(0, 1))))
    fam = tuple(((0,), (0, 1)) for _ in range(draw(st.integers(0, 1))))
    jobs = tuple(draw(st.sampled_from(["datum-info", "hecke Ns*Ns", "extquot"]))
                 for _ in range(draw(st.integers(0, 2))))
    return SpecFile(2, roots, coroots, draw(st.sampled_from(["", "X"])), None, params, gamma, fam, jobs)


@given(specs())
def test_round_trip(spec):
    assert parse(serialize(spec)) == spec
    assert serialize(parse(serialize(spec))) == serialize(spec)


def test_parse_errors_have_lines():
    with pytest.raises(SpecError) as e:
        parse("[datum]\nrank = 2\nroot = 1 2 3\ncoroot = 1 1\n")
    assert e.value.line == 3
    with pytest.raises(SpecError) as e:
        parse("[datum]\nrank = 1\n[bogus]\n")
    assert e.value.line == 3
    with pytest.raises(SpecError):
        parse("[parameters]\nall = -2\n")


def test_build_and_basis_change():
    spec = parse("[datum]\nrank = 2\nroot = 1 -1\ncoroot = 1 -1\nbasis = 1 0\nbasis = 1 1\n"
                 "[parameters]\nall = 4\n")
    b = build(spec)
    # roots transform by B^{-T}, coroots by B
    assert b.datum.simple_roots == ((2, -1),) and b.datum.simple_coroots == ((1, 0),)
    assert b.q.values == {"q": Fraction(4)}


def test_eval_parsing():
    assert parse_eval("q=4, q_s0=1/9") == {"q": 4, "q_s0": Fraction(1, 9)}
    with pytest.raises(InputError):
        parse_eval("q")


def test_hecke_expressions():
    b = build(parse((SPECS / "a1.spec").read_text()))
    alg = b.algebra(values={"q": 4})
    assert eval_hecke(alg, "trace(Ns*Ns)") == 1
    assert eval_hecke(alg, "theta(x)*theta(-x)") == alg.one()
    assert eval_hecke(alg, "Ns*Ns - (3/2)*Ns") == alg.one()
    assert eval_hecke(alg, "N(s1, s0)") == eval_hecke(alg, "N('s1', 's0')") == alg.Ns("s1") * alg.Ns("s0")
    with pytest.raises(InputError):
        eval_hecke(alg, "__import__('os')")
    with pytest.raises(InputError):
        eval_hecke(alg, "N(theta(x))")


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    out.unlink(missing_ok=True)
    code = main(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


@pytest.mark.parametrize("spec", ["a1", "gl2", "b2", "a1xa1_swap", "torus_inversion"])
def test_spec_jobs_pass(spec, tmp_path):
    code, rep = run(["run", "--spec", str(SPECS / f"{spec}.spec")], tmp_path)
    assert code == 0, rep
    assert rep["provenance"]["tolerance"] == 1e-8
    assert all("error" not in j for j in rep["jobs"])


def test_determinism_across_threads(tmp_path):
    spec = str(SPECS / "gl2.spec")
    _, r1 = run(["run", "--spec", spec, "--threads", "1"], tmp_path, "a.json")
    _, r2 = run(["run", "--spec", spec, "--threads", "4"], tmp_path, "b.json")
    _, r3 = run(["run", "--spec", spec, "--threads", "4"], tmp_path, "c.json")
    assert r1 == r2 == r3


def test_exit_codes(tmp_path):
    spec = str(SPECS / "a1.spec")
    assert run(["hecke", "Ns*Ns", "--spec", spec], tmp_path)[0] == 0
    assert run(["hecke", "nope(1)", "--spec", spec], tmp_path)[0] == 2
    assert run(["datum-info", "--spec", str(tmp_path / "missing.spec")], tmp_path)[0] == 2
    assert run(["hecke", "Ns", "--spec", spec, "--eval", "zz=2"], tmp_path)[0] == 2
    bad = tmp_path / "bad.spec"
    bad.write_text("[datum]\nrank = 2\nroot = 1 -1\ncoroot = 1 -1\n[parameters]\nall = 4\n"
                   "[gamma]\ngen = 0 -1 ; -1 0 | 0 0\n[gamma_family]\nQ = 0 : 0 1\n")
    code, rep = run(["induce", "--Q", "0", "--t", "2,2", "--spec", str(bad)], tmp_path)
    assert code == 1
    assert rep["error"]["type"] == "RelationFailure"
    # option names of the command itself are not taken as abbreviations of global flags
    code, rep = run(["induce", "--Q", "-", "--t", "2,3", "--spec", str(SPECS / "gl2.spec")], tmp_path)
    assert code == 0 and rep["results"]["dim"] == 2


def test_isogeny_report(tmp_path):
    code, rep = run(["isogeny", "--p", "2", "--spec", str(SPECS / "torus_inversion.spec")], tmp_path)
    assert code == 0
    assert rep["results"]["gamma_prime_order"] == 4
