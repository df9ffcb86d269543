"""Named counterexamples and demo instances, stored as exact instance files."""

from __future__ import annotations

from fractions import Fraction as F

from .corr import FiniteCorrespondence, aggregate, linear_map, orient_demand, product_grid
from .errors import InputError
from .flow import Additive, Affine, FlowProblem, Network, Tabulated
from .io import InstanceFile
from .markets import HedonicMarket, ItuMarket, MonotoneMap, NtuMarket
from .rat import fmt, point

GRID_012 = (0, 1, 2)

M_A2 = ((5, -1), (-4, 1))
C_KETTLE = ((25, 10, 24), (10, 5, 10), (24, 10, 25))
Y_TOPKIS = ((F(63, 28), F(-28, 28), F(-28, 28)), (F(-28, 28), F(16, 28), F(12, 28)), (F(-28, 28), F(12, 28), F(16, 28)))
X_TOPKIS = ((4, 4, 4), (4, 8, 1), (4, 1, 8))

# four prices shared by the two four-good tables
_P, _PJ, _PM, _P2 = (1, 1, 2, 2), (2, 2, 2, 2), (1, 1, 1, 1), (2, 2, 1, 1)


def _mat(M) -> list:
    return [[fmt(F(x)) for x in row] for row in M]


def _table(rows: dict) -> FiniteCorrespondence:
    images = {point(p): frozenset(point(q) for q in qs) for p, qs in rows.items()}
    return FiniteCorrespondence(len(next(iter(images))), images)


def transpose(M) -> tuple:
    return tuple(zip(*M))


def kettle_inverse() -> tuple:
    """C^{-1} / 2, solved exactly."""
    from .corr import _solve_exact

    n = len(C_KETTLE)
    C = [[F(x) for x in row] for row in C_KETTLE]
    cols = []
    for j in range(n):
        e = [F(int(i == j)) for i in range(n)]
        cols.append(_solve_exact(C, e))
    return tuple(tuple(cols[j][i] / 2 for j in range(n)) for i in range(n))


def a2_parts() -> tuple[FiniteCorrespondence, FiniteCorrespondence, FiniteCorrespondence]:
    g = product_grid(GRID_012, 2)
    A = linear_map(M_A2, g)
    B = linear_map(transpose(M_A2), g)
    return A, B, aggregate(A, B)


def _a2():
    _, _, S = a2_parts()
    return InstanceFile("correspondence", S, {
        "name": "a2_sum_m0",
        "description": "sum of p -> Mp and p -> M^T p on {0,1,2}^2",
        "M": _mat(M_A2), "MT": _mat(transpose(M_A2)),
        "sum": _mat([[a + b for a, b in zip(r, s)] for r, s in zip(M_A2, transpose(M_A2))]),
        "grid": [[fmt(F(x)) for x in p] for p in product_grid(GRID_012, 2)],
    })


A3_TABLE = {
    _P: [(1, 0, 1, 1), (0, 1, 1, 0)],
    _PJ: [(1, 1, 1, 0), (0, 1, 1, 1)],
    _PM: [(1, 0, 0, 0), (0, 0, 0, 1)],
    _P2: [(1, 1, 0, 1), (0, 1, 1, 0)],
}


def _a3():
    # the printed table is a demand table; the checkers read supply, so signs are flipped
    Q = orient_demand(_table(A3_TABLE))
    return InstanceFile("correspondence", Q, {
        "name": "a3_kelso_crawford", "orientation": "demand (stored negated)",
        "printed_table": [{"p": list(p), "q": [list(q) for q in qs]} for p, qs in A3_TABLE.items()],
    })


A4_PS_TABLE = {_P: [(0, 1, 2, 1)], _PJ: [(0, 2, 2, 0)], _PM: [(1, 0, 2, 1)], _P2: [(1, 2, 2, 0)]}
A4_UGS_TABLE = {(1, 1): [(1, 0), (3, 0)], (1, 2): [(0, 0), (2, 0)]}


def _a4_ps():
    return InstanceFile("correspondence", _table(A4_PS_TABLE), {"name": "a4_ps_not_ugs"})


def _a4_ugs():
    return InstanceFile("correspondence", _table(A4_UGS_TABLE), {"name": "a4_ugs_not_ps"})


def _a6_topkis():
    g = product_grid(GRID_012, 3)
    return InstanceFile("correspondence", linear_map(Y_TOPKIS, g), {
        "name": "a6_topkis_not_ugs", "Y": _mat(Y_TOPKIS), "inverse_matrix": _mat(X_TOPKIS)})


def _a6_involution():
    g = product_grid(GRID_012, 2)
    return InstanceFile("correspondence", linear_map(((0, 1), (1, 0)), g), {
        "name": "a6_ugs_not_milgrom_shannon", "description": "q1 = p2, q2 = p1 on {0,1,2}^2"})


def simplex_argmax(p) -> list:
    """Vertices of the face of the unit simplex maximizing p.q."""
    top = max(p)
    winners = [i for i, x in enumerate(p) if x == top]
    return [tuple(F(int(i == w)) for i in range(len(p))) for w in winners]


def _b1():
    Q = FiniteCorrespondence.from_sets(product_grid((1, 2), 2), simplex_argmax)
    return InstanceFile("correspondence", Q, {
        "name": "b1_simplex_argmax", "description": "argmax vertices of p.q over the simplex on {1,2}^2"})


def _b2():
    Ci = kettle_inverse()
    Q = linear_map(Ci, product_grid(GRID_012, 3))
    return InstanceFile("correspondence", Q, {
        "name": "b2_kettle", "C": _mat(C_KETTLE), "half_C_inverse": _mat(Ci),
        "weights": ["2", "1", "1"]})


def figure2_style_problem() -> FlowProblem:
    """Three nodes, one of each connection type; constructed fresh, not copied from a figure."""
    conn = {
        ("o", "m"): Additive(F(1)),
        ("m", "d"): Affine(F(2), F(-3)),
        ("o", "d"): Tabulated(((F(0), F(0)), (F(4), F(2)), (F(10), F(5)))),
    }
    net = Network(("o", "m", "d"), tuple(conn), conn)
    return FlowProblem(net, {"o": F(-2), "m": F(0), "d": F(2)})


def _fig2():
    return InstanceFile("network", figure2_style_problem(), {
        "name": "figure2_style_flow",
        "grid": [[fmt(F(x)) for x in p] for p in product_grid((0, 1, 2, 3, 4), 3)],
    })


def demo_ntu() -> NtuMarket:
    # opposed preferences: two stable matchings
    alpha = {("a", "A"): 2, ("a", "B"): 1, ("b", "A"): 1, ("b", "B"): 2}
    gamma = {("a", "A"): 1, ("a", "B"): 2, ("b", "A"): 2, ("b", "B"): 1}
    return NtuMarket(("a", "b"), ("A", "B"), alpha, {"a": 0, "b": 0}, gamma, {"A": 0, "B": 0})


def demo_tu() -> ItuMarket:
    alpha = {("x1", "y1"): 3, ("x1", "y2"): 0, ("x2", "y1"): 0, ("x2", "y2"): 2}
    gamma = {k: 0 for k in alpha}
    return ItuMarket.tu({"x1": 1, "x2": 1}, {"y1": 1, "y2": 1}, alpha, gamma)


def demo_hedonic() -> HedonicMarket:
    return HedonicMarket({"x": 1}, {"y": 2}, ("w",), {("x", "w"): MonotoneMap.affine(1, -1)},
                         {("y", "w"): MonotoneMap.affine(-1, 5)})


CATALOG = {
    "a2_sum_m0": _a2,
    "a3_kelso_crawford": _a3,
    "a4_ps_not_ugs": _a4_ps,
    "a4_ugs_not_ps": _a4_ugs,
    "a6_topkis_not_ugs": _a6_topkis,
    "a6_ugs_not_milgrom_shannon": _a6_involution,
    "b1_simplex_argmax": _b1,
    "b2_kettle": _b2,
    "figure2_style_flow": _fig2,
    "demo_ntu_2x2": lambda: InstanceFile("ntu", demo_ntu(), {"name": "demo_ntu_2x2"}),
    "demo_tu_2x2": lambda: InstanceFile("itu", demo_tu(), {"name": "demo_tu_2x2"}),
    "demo_hedonic_1x1x1": lambda: InstanceFile("hedonic", demo_hedonic(), {"name": "demo_hedonic_1x1x1"}),
}


def fixture(name: str) -> InstanceFile:
    try:
        return CATALOG[name]()
    except KeyError:
        raise InputError(f"unknown fixture {name!r}; known: {', '.join(CATALOG)}") from None


def names() -> list[str]:
    return list(CATALOG)
