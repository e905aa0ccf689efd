"""Line-oriented spec files describing a root datum, parameters, Gamma and jobs.

Example::

    [datum]
    name = GL2
    rank = 2
    root = 1 -1
    coroot = 1 -1

    [parameters]
    all = 4

    [gamma]
    gen = 0 -1 ; -1 0 | 0 0

    [gamma_family]
    Q = 0 : 0 1

    [jobs]
    job = datum-info

Only integer and rational literals are accepted. Optional ``basis`` rows in
``[datum]`` give a new basis of ``X`` in input coordinates; roots, coroots and
Gamma generators are rewritten in that basis.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InputError
from .hecke import HeckeAlgebra
from .lattice import as_matrix, det, integer_inverse, matmul, matvec, transpose
from .rootdatum import BasedRootDatum, GammaAction
from .weyl import ParameterFunction, make_parameter_function

SECTIONS = ("datum", "parameters", "gamma", "gamma_family", "jobs")


class SpecError(InputError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class SpecFile:
    rank: int
    roots: tuple[tuple[int, ...], ...] = ()
    coroots: tuple[tuple[int, ...], ...] = ()
    name: str = ""
    basis: tuple[tuple[int, ...], ...] | None = None
    parameters: tuple[tuple[str, object], ...] = ()
    gamma: tuple[tuple[tuple[tuple[int, ...], ...], tuple[Fraction, ...]], ...] = ()
    family: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...] = ()
    jobs: tuple[str, ...] = field(default=())


def _ints(s: str, line: int) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in s.split())
    except ValueError:
        raise SpecError(f"expected integers, got {s!r}", line) from None


def _rats(s: str, line: int) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(v) for v in s.split())
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"expected rationals, got {s!r}", line) from None


def _value(s: str, line: int):
    s = s.strip()
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", s):
        return s
    try:
        v = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"bad parameter value {s!r}", line) from None
    if v <= 0:
        raise SpecError("parameters must be positive", line)
    return v


def parse(text: str) -> SpecFile:
    section = None
    rank = None
    name = ""
    roots, coroots, basis = [], [], []
    params: list[tuple[str, object]] = []
    gamma = []
    family = []
    jobs = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise SpecError(f"unknown section [{section}]", no)
            continue
        if "=" not in line:
            raise SpecError("expected 'key = value'", no)
        key, val = (p.strip() for p in line.split("=", 1))
        if section is None:
            raise SpecError("entry outside any section", no)
        if section == "datum":
            if key == "name":
                name = val
            elif key == "rank":
                try:
                    rank = int(val)
                except ValueError:
                    raise SpecError("rank must be an integer", no) from None
            elif key == "root":
                roots.append((_ints(val, no), no))
            elif key == "coroot":
                coroots.append((_ints(val, no), no))
            elif key == "basis":
                basis.append((_ints(val, no), no))
            else:
                raise SpecError(f"unknown datum key {key!r}", no)
        elif section == "parameters":
            params.append((key, _value(val, no)))
        elif section == "gamma":
            if key != "gen":
                raise SpecError("gamma entries are 'gen = rows ; ... | translation'", no)
            mat_s, _, tr_s = val.partition("|")
            mat = tuple(_ints(r, no) for r in mat_s.split(";"))
            tr = _rats(tr_s, no) if tr_s.strip() else tuple(Fraction(0) for _ in mat)
            gamma.append((mat, tr, no))
        elif section == "gamma_family":
            if key != "Q":
                raise SpecError("gamma_family entries are 'Q = indices : element indices'", no)
            q_s, sep, g_s = val.partition(":")
            if not sep:
                raise SpecError("missing ':' in gamma_family entry", no)
            q = () if q_s.strip() in ("", "-") else _ints(q_s, no)
            family.append((tuple(sorted(q)), _ints(g_s, no)))
        elif section == "jobs":
            if key != "job":
                raise SpecError("jobs entries are 'job = ...'", no)
            jobs.append(val)
    if rank is None:
        if roots:
            rank = len(roots[0][0])
        else:
            raise SpecError("rank is required when no roots are given")
    for v, no in roots + coroots + basis:
        if len(v) != rank:
            raise SpecError(f"vector has {len(v)} entries, rank is {rank}", no)
    if len(roots) != len(coroots):
        raise SpecError("number of roots and coroots differ")
    if basis and len(basis) != rank:
        raise SpecError("basis needs exactly rank rows")
    for mat, tr, no in gamma:
        if len(mat) != rank or any(len(r) != rank for r in mat) or len(tr) != rank:
            raise SpecError("gamma generator has the wrong size", no)
    return SpecFile(rank, tuple(v for v, _ in roots), tuple(v for v, _ in coroots), name,
                    tuple(v for v, _ in basis) if basis else None, tuple(params),
                    tuple((m, t) for m, t, _ in gamma), tuple(family), tuple(jobs))


def _fmt(v) -> str:
    return " ".join(str(x) for x in v)


def serialize(spec: SpecFile) -> str:
    out = ["[datum]"]
    if spec.name:
        out.append(f"name = {spec.name}")
    out.append(f"rank = {spec.rank}")
    out += [f"root = {_fmt(r)}" for r in spec.roots]
    out += [f"coroot = {_fmt(c)}" for c in spec.coroots]
    if spec.basis:
        out += [f"basis = {_fmt(b)}" for b in spec.basis]
    if spec.parameters:
        out += ["", "[parameters]"] + [f"{k} = {v}" for k, v in spec.parameters]
    if spec.gamma:
        out += ["", "[gamma]"]
        out += [f"gen = {' ; '.join(_fmt(r) for r in m)} | {_fmt(t)}" for m, t in spec.gamma]
    if spec.family:
        out += ["", "[gamma_family]"]
        out += [f"Q = {_fmt(q) if q else '-'} : {_fmt(g)}" for q, g in spec.family]
    if spec.jobs:
        out += ["", "[jobs]"] + [f"job = {j}" for j in spec.jobs]
    return "\n".join(out) + "\n"


def load(path: str) -> SpecFile:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse(fh.read())
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from None


# -- building the objects -----------------------------------------------------------

@dataclass
class Built:
    spec: SpecFile
    datum: BasedRootDatum
    gamma: GammaAction
    q: ParameterFunction
    family: object = None

    def algebra(self, box: int = 8, values: dict | None = None) -> HeckeAlgebra:
        q = self.q.evaluated(values) if values else self.q
        return HeckeAlgebra(self.datum, q, gamma=self.gamma, box=box)


def _rebase(spec: SpecFile):
    roots, coroots = list(spec.roots), list(spec.coroots)
    gens = list(spec.gamma)
    if spec.basis:
        b = as_matrix(spec.basis)
        if abs(det(b)) != 1:
            raise SpecError("basis change must be unimodular")
        bt_inv = integer_inverse(transpose(b))
        roots = [tuple(matvec(bt_inv, r)) for r in roots]
        coroots = [tuple(matvec(b, c)) for c in coroots]
        gens = [(as_matrix(matmul(matmul(bt_inv, m), transpose(b))), tuple(matvec(b, t))) for m, t in gens]
    return roots, coroots, gens


def build(spec: SpecFile) -> Built:
    from .induction import GammaQFamily

    roots, coroots, gens = _rebase(spec)
    d = BasedRootDatum(spec.rank, roots, coroots, name=spec.name)
    gamma = GammaAction(d, [(m, t) for m, t in gens])
    assignments = {}
    for k, v in spec.parameters:
        if k == "all":
            assignments.update({lab: v for lab in _labels(d)})
    assignments.update({k: v for k, v in spec.parameters if k != "all"})
    q = make_parameter_function(d, assignments or None, gamma=gamma)
    fam = None
    if spec.family:
        fam = GammaQFamily(gamma, {q_: g for q_, g in spec.family})
    return Built(spec, d, gamma, q, fam)


def _labels(d: BasedRootDatum):
    from .weyl import ext_affine_weyl

    return ext_affine_weyl(d).labels
