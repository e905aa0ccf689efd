"""Small standard root data used by the tests and the command line."""

from __future__ import annotations

from .rootdatum import BasedRootDatum, GammaAction, build_root_datum

CARTAN = {
    "A2": [[2, -1], [-1, 2]],
    "B2": [[2, -2], [-1, 2]],
    "C2": [[2, -1], [-2, 2]],
    "G2": [[2, -1], [-3, 2]],
    "A1xA1": [[2, 0], [0, 2]],
}


def a1(lattice: str = "root") -> BasedRootDatum:
    """``A1`` on the root lattice (``X = Z alpha``) or the weight lattice (``alpha = 2 varpi``)."""
    if lattice == "root":
        return BasedRootDatum.from_cartan([[2]], name="A1")
    if lattice == "weight":
        return build_root_datum([(2,)], [(1,)], name="A1_wt")
    raise ValueError(f"unknown lattice {lattice!r}")


def gl2() -> BasedRootDatum:
    return build_root_datum([(1, -1)], [(1, -1)], name="GL2")


def cartan_datum(name: str) -> BasedRootDatum:
    return BasedRootDatum.from_cartan(CARTAN[name], name=name)


def torus(n: int = 1) -> BasedRootDatum:
    """The root datum with no roots on ``X = Z^n``."""
    return build_root_datum([], [], rank=n, name=f"T{n}")


def a1xa1_swap() -> tuple[BasedRootDatum, GammaAction]:
    d = cartan_datum("A1xA1")
    return d, GammaAction(d, [(((0, 1), (1, 0)), (0, 0))])


def gl2_swap() -> tuple[BasedRootDatum, GammaAction]:
    """``x -> -w0 x``: fixes the simple root and inverts the centre."""
    d = gl2()
    return d, GammaAction(d, [(((0, -1), (-1, 0)), (0, 0))])


def standard_data() -> dict[str, BasedRootDatum]:
    return {"A1": a1(), "A1_wt": a1("weight"), "GL2": gl2(), "A2": cartan_datum("A2"),
            "B2": cartan_datum("B2")}
