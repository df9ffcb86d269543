"""Producer problems: argmax supply, indirect profit, and the logit example."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

from .corr import FiniteCorrespondence, Taxonomy, Verdict, _first, check_monotonicity, check_substitutes, label_for
from .errors import InputError
from .latt import ConsistencyError
from .rat import Point, add, dot, join, leq, meet, point, rat, sub


@dataclass(frozen=True)
class DiscreteProducer:
    dim: int
    quantities: tuple
    cost: Mapping[Point, Fraction]

    def __post_init__(self):
        qs = tuple(sorted({point(q) for q in self.quantities}))
        if not qs:
            raise InputError("a producer needs at least one quantity")
        cost = {point(q): rat(c) for q, c in self.cost.items()}
        for q in qs:
            if len(q) != self.dim:
                raise InputError("quantity of wrong dimension")
            if q not in cost:
                raise InputError(f"no cost for quantity {q}")
        object.__setattr__(self, "quantities", qs)
        object.__setattr__(self, "cost", {q: cost[q] for q in qs})

    @classmethod
    def from_lists(cls, points: Sequence, costs: Sequence) -> "DiscreteProducer":
        pts = [point(q) for q in points]
        if len(pts) != len(costs):
            raise InputError("points and costs differ in length")
        return cls(len(pts[0]), tuple(pts), dict(zip(pts, (rat(c) for c in costs))))

    def profit(self, p: Point, q: Point) -> Fraction:
        return dot(p, q) - self.cost[q]


def argmax_correspondence(prod: DiscreteProducer, grid: Iterable) -> FiniteCorrespondence:
    images = {}
    for p in grid:
        p = point(p)
        if len(p) != prod.dim:
            raise InputError("grid dimension differs from producer dimension")
        vals = {q: prod.profit(p, q) for q in prod.quantities}
        best = max(vals.values())
        images[p] = frozenset(q for q, v in vals.items() if v == best)
    return FiniteCorrespondence(prod.dim, images)


@dataclass(frozen=True)
class GridFunction:
    values: Mapping[Point, Fraction]

    @property
    def grid(self) -> tuple:
        return tuple(sorted(self.values))

    def __call__(self, p) -> Fraction:
        return self.values[point(p)]


def indirect_profit(prod: DiscreteProducer, grid: Iterable) -> GridFunction:
    return GridFunction({point(p): max(prod.profit(point(p), q) for q in prod.quantities) for p in grid})


def check_submodular(f: GridFunction) -> Verdict:
    grid = f.grid
    present = set(grid)

    def gen():
        for i, a in enumerate(grid):
            for b in grid[i + 1:]:
                m, j = meet(a, b), join(a, b)
                if m not in present or j not in present:
                    raise InputError("grid is not a sublattice")
                lhs = f.values[m] + f.values[j]
                rhs = f.values[a] + f.values[b]
                if lhs > rhs:
                    yield {"p": a, "p2": b, "lhs": lhs, "rhs": rhs}

    return _first("submodular", gen())


@dataclass(frozen=True)
class ProducerReport:
    submodular: Verdict
    ugs: Verdict
    nonreversing: Verdict
    agree: bool

    def to_dict(self) -> dict:
        return {
            "submodular": self.submodular.to_dict(),
            "ugs": self.ugs.to_dict(),
            "nonreversing": self.nonreversing.to_dict(),
            "agree": self.agree,
        }


def spice_equivalence(prod: DiscreteProducer, grid: Iterable) -> ProducerReport:
    """Submodular indirect profit vs substitutes of the argmax, on one grid."""
    grid = [point(p) for p in grid]
    Q = argmax_correspondence(prod, grid)
    sm = check_submodular(indirect_profit(prod, grid))
    u = check_substitutes(Q, "ugs")
    nr = check_monotonicity(Q, "nonreversing")
    if not nr.holds:
        # argmax of a profit that is linear in p always has single crossing
        raise ConsistencyError("argmax correspondence reported reversing")
    return ProducerReport(sm, u, nr, sm.holds == u.holds)


# no complementarities


def _axis_values(prod: DiscreteProducer) -> list[set]:
    return [{q[z] for q in prod.quantities} for z in range(prod.dim)]


def is_grid_producer(prod: DiscreteProducer) -> bool:
    axes = _axis_values(prod)
    return len(prod.quantities) == math.prod(len(a) for a in axes)


def discrete_convexity(prod: DiscreteProducer) -> Verdict:
    """Midpoint test: c((q+q2)/2) <= (c(q)+c(q2))/2 whenever the midpoint is a quantity."""
    qs = prod.quantities
    qset = prod.cost

    def gen():
        for i, a in enumerate(qs):
            for b in qs[i + 1:]:
                mid = tuple((x + y) / 2 for x, y in zip(a, b))
                if mid in qset and 2 * qset[mid] > qset[a] + qset[b]:
                    yield {"q": a, "q2": b, "midpoint": mid}

    return _first("midpoint_convex", gen())


def _box_steps(lo_anchor: Point, bound: Point, axes, sign: int) -> list[Point]:
    """Nonnegative steps d <= bound such that anchor + sign*d stays on each axis."""
    per = []
    for z, (a, b) in enumerate(zip(lo_anchor, bound)):
        opts = [Fraction(0)]
        for v in sorted(axes[z]):
            d = (v - a) * sign
            if 0 < d <= b:
                opts.append(d)
        per.append(opts)
    return [tuple(x) for x in product(*per)]


def check_no_complementarities(prod: DiscreteProducer, p) -> Verdict:
    """Steps are restricted to the lattice spanned by the quantity axes."""
    p = point(p)
    axes = _axis_values(prod)
    best = max(prod.profit(p, q) for q in prod.quantities)
    opt = [q for q in prod.quantities if prod.profit(p, q) == best]

    def gen():
        for q in opt:
            for q2 in prod.quantities:
                if q2 == q:
                    continue
                up = tuple(max(a - b, 0) for a, b in zip(q2, q))
                down = tuple(max(b - a, 0) for a, b in zip(q2, q))
                base = prod.profit(p, q2)
                adds = _box_steps(q2, down, axes, +1)
                for d1 in _box_steps(q2, up, axes, -1):
                    found = False
                    for d2 in adds:
                        cand = add(sub(q2, d1), d2)
                        if cand in prod.cost and prod.profit(p, cand) >= base:
                            found = True
                            break
                    if not found:
                        yield {"p": p, "q": q, "q2": q2, "delta1": d1}

    return _first("no_complementarities", gen())


def no_complementarities_on_grid(prod: DiscreteProducer, grid: Iterable) -> Verdict:
    for p in grid:
        v = check_no_complementarities(prod, p)
        if not v.holds:
            return v
    return Verdict("no_complementarities", True)


# single crossing


@dataclass(frozen=True)
class ObjectiveTable:
    p_grid: tuple
    q_grid: tuple
    values: Mapping[tuple, Fraction]

    def __post_init__(self):
        pg = tuple(sorted({point(p) for p in self.p_grid}))
        qg = tuple(sorted({point(q) for q in self.q_grid}))
        vals = {(point(p), point(q)): rat(v) for (p, q), v in self.values.items()}
        for p in pg:
            for q in qg:
                if (p, q) not in vals:
                    raise InputError("objective table is not total")
        object.__setattr__(self, "p_grid", pg)
        object.__setattr__(self, "q_grid", qg)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, p_grid, q_grid, phi) -> "ObjectiveTable":
        pg = [point(p) for p in p_grid]
        qg = [point(q) for q in q_grid]
        return cls(tuple(pg), tuple(qg), {(p, q): phi(p, q) for p in pg for q in qg})

    def argmax(self) -> FiniteCorrespondence:
        images = {}
        for p in self.p_grid:
            best = max(self.values[p, q] for q in self.q_grid)
            images[p] = frozenset(q for q in self.q_grid if self.values[p, q] == best)
        return FiniteCorrespondence(len(self.p_grid[0]), images)


def check_single_crossing(tab: ObjectiveTable) -> tuple[Verdict, Verdict]:
    phi = tab.values

    def gen():
        for p in tab.p_grid:
            for p2 in tab.p_grid:
                if not leq(p, p2):
                    continue
                for q in tab.q_grid:
                    for q2 in tab.q_grid:
                        if not leq(q2, q):
                            continue
                        hi = phi[p2, q] - phi[p2, q2]
                        lo = phi[p, q] - phi[p, q2]
                        if hi <= 0 and lo >= 0 and (hi != 0 or lo != 0):
                            yield {"p": p, "p2": p2, "q": q, "q2": q2}

    sc = _first("single_crossing", gen())
    nr = check_monotonicity(tab.argmax(), "nonreversing")
    if sc.holds and not nr.holds:
        raise ConsistencyError("single crossing holds but the argmax reverses")
    return sc, nr


# logit


@dataclass(frozen=True)
class LogitModel:
    """Producer types choose one good; profit of type x on good z is slope*p_z + intercept.

    With `normalized`, the last good's price is pinned to `fixed_price` and
    the map is restricted to the first N-1 goods.
    """

    counts: tuple
    slopes: tuple
    intercepts: tuple
    normalized: bool = False
    fixed_price: float = 0.0

    def __post_init__(self):
        if any(n <= 0 for n in self.counts):
            raise InputError("type counts must be positive")
        if any(a <= 0 for row in self.slopes for a in row):
            raise InputError("profit maps must be strictly increasing")
        if len(self.slopes) != len(self.counts) or len(self.intercepts) != len(self.counts):
            raise InputError("one slope/intercept row per producer type")

    @property
    def goods(self) -> int:
        return len(self.slopes[0])

    @property
    def dim(self) -> int:
        return self.goods - 1 if self.normalized else self.goods


def logit_supply(model: LogitModel, p: Sequence[float]) -> tuple[float, ...]:
    p = [float(x) for x in p]
    if len(p) != model.dim:
        raise InputError("price vector has the wrong length")
    if model.normalized:
        p = p + [float(model.fixed_price)]
    out = [0.0] * model.goods
    for n, a, b in zip(model.counts, model.slopes, model.intercepts):
        u = [ai * pz + bi for ai, pz, bi in zip(a, p, b)]
        top = max(u)
        e = [math.exp(x - top) for x in u]
        s = math.fsum(e)
        for z in range(model.goods):
            out[z] += n * e[z] / s
    return tuple(out[: model.dim])


EPS_LOGIT = 1e-9


def logit_taxonomy(model: LogitModel, grid: Iterable, eps: float = EPS_LOGIT) -> Taxonomy:
    """Classify the logit map on a grid, comparing every inequality up to eps."""
    grid = [tuple(float(x) for x in p) for p in grid]
    vals = {p: logit_supply(model, p) for p in grid}

    def le(a, b):
        return all(x <= y + eps for x, y in zip(a, b))

    def same(a, b):
        return all(abs(x - y) <= eps for x, y in zip(a, b))

    ugs = True
    nonrev = True
    for p in grid:
        for p2 in grid:
            if p == p2 or not le(p2, p):
                continue
            q, q2 = vals[p], vals[p2]
            for i in range(len(p)):
                if p[i] == p2[i] and q[i] > q2[i] + eps:
                    ugs = False
            if le(q, q2) and not same(q, q2):
                nonrev = False
    ipv = True
    for i, p in enumerate(grid):
        for p2 in grid[i + 1:]:
            if same(vals[p], vals[p2]):
                ipv = False
    return Taxonomy(ugs, nonrev, True, ipv, label_for(ugs, nonrev, True, ipv))


def logit_conservation_gap(model: LogitModel, grid: Iterable) -> float:
    """Largest |sum_z Q_z - sum_x n_x| over the grid (unnormalized model)."""
    if model.normalized:
        raise InputError("conservation applies to the unnormalized model")
    total = float(sum(model.counts))
    return max(abs(math.fsum(logit_supply(model, p)) - total) for p in grid)
