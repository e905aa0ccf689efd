"""Command line front end: ``affhecke <command> --spec FILE ...`` with JSON reports."""

from __future__ import annotations

import argparse
import ast
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version

from . import modules as md
from .errors import AffHeckeError, InputError
from .hecke import HeckeAlgebra, HeckeElt
from .induction import (GammaQFamily, InductionDatum, check_condition_gamma, compose, extended_quotient,
                        groupoid_act, groupoid_arrows, induce, lower_crossed, same_constituents,
                        weights_of_induced)
from .lattice import AffineTorusAut, isogeny_lift
from .rootdatum import parabolic
from .specfile import Built, build, load

COMMANDS = ("datum-info", "hecke", "module", "induce", "groupoid", "extquot", "isogeny", "run")


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


class Failure(Exception):
    """An invariant check failed; the report is still written."""


# -- parsing helpers -----------------------------------------------------------------

def parse_eval(s: str | None) -> dict[str, Fraction]:
    if not s:
        return {}
    out = {}
    for part in s.split(","):
        if "=" not in part:
            raise InputError(f"--eval expects NAME=VALUE, got {part!r}")
        k, v = (p.strip() for p in part.split("=", 1))
        try:
            out[k] = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"bad value in --eval: {v!r}") from None
    return out


def _apply_eval(built: Built, values: dict[str, Fraction]) -> dict[str, Fraction]:
    """Expand ``q=VALUE`` to every formal symbol when ``q`` is not itself a symbol."""
    names = built.q.names
    if "q" in values and "q" not in names:
        v = values.pop("q")
        for n in names:
            values.setdefault(n, v)
    return values


def _ints(s: str) -> tuple[int, ...]:
    s = s.replace(",", " ").strip()
    if s in ("", "-"):
        return ()
    try:
        return tuple(int(v) for v in s.split())
    except ValueError:
        raise InputError(f"expected integers, got {s!r}") from None


def _rats(s: str) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(v) for v in s.replace(",", " ").split())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"expected rationals, got {s!r}") from None


def _matrix(s: str):
    rows = [_ints(r) for r in s.split(";")]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise InputError(f"expected a square integer matrix, got {s!r}")
    return tuple(rows)


def _fmt(v) -> str:
    return str(v)


# -- hecke expressions ---------------------------------------------------------------------

class _Vec(tuple):
    def __neg__(self):
        return _Vec(-a for a in self)

    def __add__(self, other):
        return _Vec(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        return _Vec(a - b for a, b in zip(self, other))

    def __rmul__(self, k):
        return _Vec(k * a for a in self)


def eval_hecke(alg: HeckeAlgebra, expr: str):
    G, d = alg.group, alg.datum
    n = d.rank
    names = {f"e{i + 1}": _Vec(int(i == j) for j in range(n)) for i in range(n)}
    for nm, i in (("x", 0), ("y", 1)):
        if i < n:
            names[nm] = names[f"e{i + 1}"]
    if G.labels:
        names["Ns"] = alg.Ns(G.labels[0])
    for lab in G.labels:
        names[lab] = alg.Ns(lab)

    def _label(v):
        if isinstance(v, str) and v in G.labels:
            return v
        for lab in G.labels:
            if v is names[lab]:
                return lab
        raise InputError(f"not a generator label: {v!r}")

    def N(*labels):
        return alg.N(G.word_element([_label(l) for l in labels]))

    def theta(*v):
        vec = v[0] if len(v) == 1 and isinstance(v[0], tuple) else v
        return alg.theta(tuple(int(a) for a in vec))

    def omega(k=0):
        return alg.N(G.omega.generators[int(k)])

    funcs = {"N": N, "Ns": lambda lab: alg.Ns(_label(lab)), "theta": theta, "omega": omega,
             "star": alg.star, "trace": alg.trace, "bernstein": lambda h: alg.to_bernstein(h),
             "bernstein_right": lambda h: alg.to_bernstein(h, right=True)}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, str)):
            return node.value
        if isinstance(node, ast.Tuple):
            return _Vec(ev(e) for e in node.elts)
        if isinstance(node, ast.Name):
            if node.id in names:
                return names[node.id]
            raise InputError(f"unknown name {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            ops = {ast.Add: lambda: a + b, ast.Sub: lambda: a - b, ast.Mult: lambda: a * b,
                   ast.Pow: lambda: a ** b, ast.Div: lambda: a * Fraction(1, b)}
            for k, f in ops.items():
                if isinstance(node.op, k):
                    return f()
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in funcs:
            return funcs[node.func.id](*[ev(a) for a in node.args])
        raise InputError(f"unsupported expression element: {ast.dump(node)[:60]}")

    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise InputError(f"cannot parse expression {expr!r}: {exc.msg}") from None
    return ev(tree)


def _render(alg: HeckeAlgebra, value):
    if isinstance(value, HeckeElt):
        return {"element": str(value),
                "terms": [[alg.format_elt(g), str(c)] for g, c in sorted(value.terms.items())]}
    if isinstance(value, list):
        return {"bernstein": [[list(t.x), list(alg.datum.weyl[t.w].word), str(t.coefficient)] for t in value]}
    return {"scalar": str(value)}


# -- commands ----------------------------------------------------------------------------------

def _algebra(built: Built, opts) -> HeckeAlgebra:
    values = _apply_eval(built, parse_eval(opts.eval))
    return built.algebra(box=opts.box, values=values or None)


def cmd_datum_info(built: Built, opts, args) -> dict:
    d = built.datum
    alg = HeckeAlgebra(d, built.q, gamma=built.gamma, box=opts.box)
    G = alg.group
    om = G.omega
    return {
        "name": d.name, "rank": d.rank, "n_roots": len(d.roots), "positive_roots": [list(r) for r in d.positive_roots],
        "weyl_order": len(d.weyl), "semisimple": d.is_semisimple, "S_aff": list(G.labels),
        "omega": {"orders": list(om.orders), "free_rank": om.free_rank, "order": om.order},
        "gamma_order": len(built.gamma), "parameters": built.q.describe(),
    }


def cmd_hecke(built: Built, opts, args) -> dict:
    if not args:
        raise InputError("hecke needs an expression")
    alg = _algebra(built, opts)
    expr = " ".join(args)
    return {"expression": expr, **_render(alg, eval_hecke(alg, expr))}


def _builder(alg: HeckeAlgebra, spec: str) -> md.FinModule:
    kind, _, rest = spec.partition(":")
    if kind == "steinberg":
        return md.steinberg_module(alg)
    if kind == "trivial":
        return md.trivial_module(alg)
    if kind == "character":
        return md.character_module(alg, _rats(rest))
    if kind == "principal":
        low = alg.lower(())
        return induce(InductionDatum(alg, (), md.one_dim(low), _rats(rest)))
    raise InputError(f"unknown module builder {spec!r}; use steinberg, trivial, character:T, principal:T")


def _module_report(m: md.FinModule, tol: float, with_cc: bool = True) -> dict:
    ws = md.weights(m, tol)
    out = {"dim": m.dim, "exact": m.exact,
           "weights": [[[_fmt(v) for v in w.values], k] for w, k in ws.entries],
           "tempered": _verdict(md.is_tempered(m, tol)),
           "discrete_series": _verdict(md.is_discrete_series(m, tol)),
           "essentially_discrete": _verdict(md.is_essentially_discrete(m, tol))}
    if with_cc:
        try:
            cc = md.central_character(m, tol)
            out["central_character"] = {"orbit": [[_fmt(v) for v in w.values] for w in cc.orbit],
                                        "norm": cc.norm}
        except AffHeckeError as exc:
            out["central_character"] = {"error": type(exc).__name__, "message": str(exc)}
    return out


def _verdict(v: md.Verdict) -> dict:
    return {"holds": v.holds, "boundary": v.boundary, "reason": v.reason}


def cmd_module(built: Built, opts, args) -> dict:
    if not args:
        raise InputError("module needs a builder")
    alg = _algebra(built, opts)
    m = _builder(alg, args[0])
    out = {"builder": args[0], **_module_report(m, opts.tolerance)}
    dual = md.dual_module(m)
    ok = md.weights(dual, opts.tolerance).same_as(md.weights(m, opts.tolerance))
    ok = ok and bool(md.is_tempered(dual, opts.tolerance)) == out["tempered"]["holds"]
    out["dual_round_trip"] = ok
    if not ok:
        raise Failure(out)
    return out


def _family(built: Built) -> GammaQFamily:
    return built.family if built.family is not None else GammaQFamily.trivial(built.gamma)


def _datum_from(alg: HeckeAlgebra, built: Built, Q, sigma: str, t) -> InductionDatum:
    fam = _family(built)
    low = lower_crossed(alg, Q, fam.of(Q))
    if sigma == "steinberg":
        sig = md.steinberg_module(low)
    elif sigma == "trivial":
        sig = md.trivial_module(low)
    else:
        raise InputError(f"unknown sigma {sigma!r}")
    return InductionDatum(alg, Q, sig, t or None, fam)


def _opt_args(args, keys):
    p = argparse.ArgumentParser(prog="affhecke", add_help=False, allow_abbrev=False)
    for k, default in keys.items():
        p.add_argument(f"--{k}", default=default)
    ns, extra = p.parse_known_args(args)
    if extra:
        raise InputError(f"unexpected arguments {extra}")
    return ns


def cmd_induce(built: Built, opts, args) -> dict:
    a = _opt_args(args, {"Q": "", "sigma": "steinberg", "t": ""})
    alg = _algebra(built, opts)
    Q = _ints(a.Q)
    d = _datum_from(alg, built, Q, a.sigma, _rats(a.t))
    m = induce(d)
    pd = parabolic(alg.datum, Q)
    expected = (len(alg.gamma) // len(d.gamma_Q)) * (len(alg.datum.weyl) // len(pd.weyl_Q)) * d.sigma.dim
    pred = weights_of_induced(d)
    got = md.weights(m, opts.tolerance)
    out = {"Q": list(Q), "t": [_fmt(v) for v in d.t.values], "dim": m.dim, "expected_dim": expected,
           "weights_match_prediction": got.same_as(pred), **_module_report(m, opts.tolerance, with_cc=False)}
    if m.dim != expected or not out["weights_match_prediction"]:
        raise Failure(out)
    return out


def cmd_groupoid(built: Built, opts, args) -> dict:
    a = _opt_args(args, {"Q": "", "Q2": None, "t": "", "sigma": "steinberg"})
    alg = _algebra(built, opts)
    Q = _ints(a.Q)
    Q2 = Q if a.Q2 is None else _ints(a.Q2)
    arrows = groupoid_arrows(alg, Q, Q2)
    listing = [{"w": list(alg.datum.weyl[x.w].word), "gamma": x.gamma, "u": str(x.u)} for x in arrows]
    out = {"Q": list(Q), "Q2": list(Q2), "arrows": listing}
    loops = groupoid_arrows(alg, Q, Q)
    assoc = all(compose(alg, compose(alg, c, b), a1) == compose(alg, c, compose(alg, b, a1))
                for a1 in loops for b in loops for c in loops)
    out["associative_on_loops"] = assoc
    ok = assoc
    if all(v is not None for v in alg.q.values.values()):
        d = _datum_from(alg, built, Q, a.sigma, _rats(a.t))
        same = [same_constituents(d, groupoid_act(x, d)) for x in arrows]
        out["same_constituents"] = same
        ok = ok and all(same)
    if not ok:
        raise Failure(out)
    return out


def cmd_extquot(built: Built, opts, args) -> dict:
    fam = _family(built)
    entries = extended_quotient(built.datum, built.gamma, fam)
    return {"classes": [{"w": list(e.word), "gamma": e.gamma, "class_size": e.class_size, "dim": e.dim,
                         "components": e.components, "survives": e.survives} for e in entries],
            "condition": check_condition_gamma(fam).clauses}


def cmd_isogeny(built: Built, opts, args) -> dict:
    a = _opt_args(args, {"p": None})
    if a.p is None:
        raise InputError("isogeny needs --p MATRIX (rows separated by ';')")
    p = _matrix(a.p)
    gens = [g.torus_aut() for g in built.gamma.generators]
    res = isogeny_lift(p, gens)
    hom = all(res.project(x @ y) == res.project(x) @ res.project(y)
              for x in res.gamma_prime for y in res.gamma_prime)
    kernel = set(res.kernel)
    cocycle_ok = all(c in kernel for c in res.cocycle.values())
    sizes = set()
    for g in res.gamma:
        for k in range(len(res.kernel)):
            alt = isogeny_lift(p, gens, choices={g: k})
            sizes.add(frozenset(alt.gamma_prime))
    out = {"gamma_order": len(res.gamma), "gamma_prime_order": len(res.gamma_prime),
           "kernel_order": len(res.kernel), "projection_homomorphism": hom, "cocycle_in_kernel": cocycle_ok,
           "independent_of_lift": len(sizes) == 1}
    if not (hom and cocycle_ok and len(sizes) == 1):
        raise Failure(out)
    return out


HANDLERS = {"datum-info": cmd_datum_info, "hecke": cmd_hecke, "module": cmd_module, "induce": cmd_induce,
            "groupoid": cmd_groupoid, "extquot": cmd_extquot, "isogeny": cmd_isogeny}


def run_job(built: Built, opts, command: str, args: list[str]) -> tuple[dict, int]:
    report = {"command": command, "args": args}
    try:
        report["results"] = HANDLERS[command](built, opts, args)
        code = 0
    except Failure as exc:
        report["results"] = exc.args[0]
        report["failed"] = True
        code = 1
    except InputError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 2
    except AffHeckeError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 1
    return report, code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affhecke", description="Affine Hecke algebra computations.",
                                allow_abbrev=False)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("args", nargs=argparse.REMAINDER)
    p.add_argument("--spec", required=True, help="spec file")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--tolerance", type=float, default=md.CLUSTER_TOL)
    p.add_argument("--box", type=int, default=8)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--eval", help="parameter values, e.g. q=4 or q_s1=4,q_s0=9")
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # options may follow the command's own arguments
    front, rest = [], []
    it = iter(argv)
    for a in it:
        if a in ("--spec", "--out", "--tolerance", "--box", "--threads", "--eval"):
            front += [a, next(it, "")]
        elif any(a.startswith(f"{k}=") for k in ("--spec", "--out", "--tolerance", "--box", "--threads", "--eval")):
            front.append(a)
        else:
            rest.append(a)
    try:
        opts = parser.parse_args(front + rest)
    except SystemExit as exc:
        return 2 if exc.code else 0
    provenance = {"version": _version(), "tolerance": opts.tolerance, "box": opts.box,
                  "relation_tolerance": md.RELATION_TOL,
                  "inner_product": "standard form on X averaged over W Gamma"}
    try:
        built = build(load(opts.spec))
    except InputError as exc:
        report, code = {"command": opts.command, "error": {"type": type(exc).__name__, "message": str(exc)}}, 2
        _emit(report, opts, provenance)
        return code
    if opts.command == "run":
        jobs = [j.split() for j in built.spec.jobs]
        with ThreadPoolExecutor(max_workers=max(1, opts.threads)) as ex:
            results = list(ex.map(lambda j: run_job(built, opts, j[0], j[1:]) if j and j[0] in HANDLERS
                                  else ({"command": " ".join(j), "error": {"type": "InputError",
                                                                          "message": "unknown job"}}, 2), jobs))
        report = {"command": "run", "jobs": [r for r, _ in results]}
        code = max((c for _, c in results), default=0)
    else:
        report, code = run_job(built, opts, opts.command, opts.args)
    _emit(report, opts, provenance)
    return code


def _emit(report: dict, opts, provenance: dict) -> None:
    report["provenance"] = provenance
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    if opts.out:
        with open(opts.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


if __name__ == "__main__":
    sys.exit(main())
