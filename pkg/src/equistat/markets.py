"""Matching and hedonic markets, reduced to equilibrium flows or solved by excess-supply zeros."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

from .corr import FiniteCorrespondence, Verdict, _first, check_monotonicity, check_substitutes, classify
from .errors import DomainError, InputError
from .latt import ConsistencyError
from .flow import (
    Additive,
    Affine,
    Connection,
    FlowOutcome,
    FlowProblem,
    Network,
    Tabulated,
    equilibrium_flow_at,
    solve_additive,
    solve_general,
    to_eps,
)
from .rat import fmt, join, meet, rat

RESERVE = "0"  # the outside-option node


# monotone transfer maps


@dataclass(frozen=True)
class MonotoneMap:
    """A strictly monotone piecewise-linear map: affine, or interpolated through points."""

    slope: Fraction | None = None
    intercept: Fraction | None = None
    points: tuple | None = None

    def __post_init__(self):
        if self.points is None:
            if self.slope is None or self.intercept is None:
                raise InputError("a monotone map needs a slope and intercept, or points")
            object.__setattr__(self, "slope", rat(self.slope))
            object.__setattr__(self, "intercept", rat(self.intercept))
            if self.slope == 0:
                raise InputError("a monotone map cannot be flat")
            return
        pts = tuple((rat(a), rat(b)) for a, b in self.points)
        if len(pts) < 2:
            raise InputError("a tabulated map needs two points")
        xs = [a for a, _ in pts]
        ys = [b for _, b in pts]
        if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
            raise InputError("tabulated map arguments must increase")
        up = all(y1 > y0 for y0, y1 in zip(ys, ys[1:]))
        down = all(y1 < y0 for y0, y1 in zip(ys, ys[1:]))
        if not (up or down):
            raise InputError("tabulated map is not strictly monotone")
        object.__setattr__(self, "points", pts)

    @classmethod
    def affine(cls, slope, intercept) -> "MonotoneMap":
        return cls(rat(slope), rat(intercept))

    @property
    def increasing(self) -> bool:
        if self.points is None:
            return self.slope > 0
        return self.points[1][1] > self.points[0][1]

    def __call__(self, w) -> Fraction:
        w = rat(w)
        if self.points is None:
            return self.slope * w + self.intercept
        xs = [a for a, _ in self.points]
        if w < xs[0] or w > xs[-1]:
            raise DomainError(f"map query {fmt(w)} outside its table")
        i = bisect_left(xs, w)
        if xs[i] == w:
            return self.points[i][1]
        (x0, y0), (x1, y1) = self.points[i - 1], self.points[i]
        return y0 + (y1 - y0) * (w - x0) / (x1 - x0)

    def inverse(self, v) -> Fraction:
        v = rat(v)
        if self.points is None:
            return (v - self.intercept) / self.slope
        pts = self.points if self.increasing else tuple(reversed(self.points))
        flipped = MonotoneMap(points=tuple((b, a) for a, b in pts))
        return flipped(v)

    def to_dict(self) -> dict:
        if self.points is None:
            return {"type": "affine", "slope": fmt(self.slope), "intercept": fmt(self.intercept)}
        return {"type": "tabulated", "points": [[fmt(a), fmt(b)] for a, b in self.points]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "MonotoneMap":
        if d.get("type") == "tabulated":
            return cls(points=tuple(tuple(x) for x in d["points"]))
        return cls(rat(d["slope"]), rat(d["intercept"]))


def _as_connection(f: Callable[[Fraction], Fraction], breaks: Sequence[Fraction] | None, affine: tuple | None) -> Connection:
    if affine is not None:
        a, b = affine
        return Additive(-b) if a == 1 else Affine(a, b)
    pts = sorted((x, f(x)) for x in breaks)
    return Tabulated(tuple(pts))


def compose_transfer(U: MonotoneMap, V: MonotoneMap) -> Connection:
    """G(p) = U(V^{-1}(-p)) for U increasing and V decreasing in the wage."""
    if not U.increasing or V.increasing:
        raise InputError("worker utility must increase and firm utility decrease in the wage")
    if U.points is None and V.points is None:
        # V(w) = c w + d, so V^{-1}(-p) = (-p - d)/c
        a = -U.slope / V.slope
        return _as_connection(None, None, (a, U.intercept - U.slope * V.intercept / V.slope))
    lo, hi = None, None
    ws = set()
    for m in (U, V):
        if m.points is not None:
            xs = [x for x, _ in m.points]
            lo = xs[0] if lo is None else max(lo, xs[0])
            hi = xs[-1] if hi is None else min(hi, xs[-1])
            ws.update(xs)
    ws = sorted(w for w in ws if lo <= w <= hi)
    if len(ws) < 2:
        raise InputError("transfer tables do not overlap")
    return Tabulated(tuple((-V(w), U(w)) for w in ws))


def decreasing_inverse_connection(s: MonotoneMap) -> Connection:
    """G(p) = s^{-1}(-p) for s decreasing."""
    if s.increasing:
        raise InputError("surplus map must decrease in the price")
    if s.points is None:
        return _as_connection(None, None, (-1 / s.slope, -s.intercept / s.slope))
    return Tabulated(tuple(sorted((-b, a) for a, b in s.points)))


def increasing_connection(f: MonotoneMap) -> Connection:
    if not f.increasing:
        raise InputError("profit map must increase in the price")
    if f.points is None:
        return _as_connection(None, None, (f.slope, f.intercept))
    return Tabulated(f.points)


@dataclass(frozen=True)
class Matching:
    mu: Mapping[tuple, Fraction]
    wages: Mapping[tuple, Fraction] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mu": [{"from": x, "to": y, "mass": fmt(v)} for (x, y), v in sorted(self.mu.items()) if v],
            "wages": [{"from": x, "to": y, "wage": fmt(v)} for (x, y), v in sorted(self.wages.items())],
        }


# transferable / imperfectly transferable utility


@dataclass(frozen=True)
class ItuMarket:
    workers: Mapping[str, Fraction]  # n_x
    firms: Mapping[str, Fraction]  # m_y
    U: Mapping[tuple, MonotoneMap]  # worker utility of the wage
    V: Mapping[tuple, MonotoneMap]  # firm utility of the wage
    with_singles: bool = False

    def __post_init__(self):
        n = {str(k): rat(v) for k, v in self.workers.items()}
        m = {str(k): rat(v) for k, v in self.firms.items()}
        if set(n) & set(m) or RESERVE in n or RESERVE in m:
            raise InputError("worker, firm and reservation labels must be distinct")
        if any(v < 0 for v in list(n.values()) + list(m.values())):
            raise InputError("type counts must be nonnegative")
        if not self.with_singles and sum(n.values()) != sum(m.values()):
            raise InputError("without singles the numbers of workers and firms must agree")
        pairs = {(x, y) for x in n for y in m}
        U = {(str(x), str(y)): f for (x, y), f in self.U.items()}
        V = {(str(x), str(y)): f for (x, y), f in self.V.items()}
        if set(U) != pairs or set(V) != pairs:
            raise InputError("U and V must be given for every worker-firm pair")
        for k in pairs:
            if not U[k].increasing or V[k].increasing:
                raise InputError(f"pair {k}: U must increase and V decrease in the wage")
        object.__setattr__(self, "workers", n)
        object.__setattr__(self, "firms", m)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @classmethod
    def tu(cls, workers, firms, alpha: Mapping, gamma: Mapping, with_singles=False) -> "ItuMarket":
        """U = alpha + w and V = gamma - w."""
        U = {k: MonotoneMap.affine(1, a) for k, a in alpha.items()}
        V = {k: MonotoneMap.affine(-1, g) for k, g in gamma.items()}
        return cls(workers, firms, U, V, with_singles)

    def is_tu(self) -> bool:
        return all(f.points is None and f.slope == 1 for f in self.U.values()) and all(
            f.points is None and f.slope == -1 for f in self.V.values())

    def surplus(self, pair) -> Fraction:
        """alpha + gamma for TU pairs (wage-free joint surplus)."""
        if not self.is_tu():
            raise InputError("joint surplus is defined for TU markets only")
        return self.U[pair].intercept + self.V[pair].intercept


def itu_to_flow(m: ItuMarket) -> FlowProblem:
    nodes = list(m.workers) + list(m.firms)
    conn = {}
    for (x, y) in m.U:
        conn[(x, y)] = compose_transfer(m.U[(x, y)], m.V[(x, y)])
    q = {x: -n for x, n in m.workers.items()}
    q.update(m.firms)
    fixed = {}
    if m.with_singles:
        nodes.append(RESERVE)
        for x in m.workers:
            conn[(x, RESERVE)] = Additive(0)
        for y in m.firms:
            conn[(RESERVE, y)] = Additive(0)
        q[RESERVE] = sum(m.workers.values()) - sum(m.firms.values())
        fixed = {RESERVE: Fraction(0)}
    net = Network(tuple(nodes), tuple(conn), conn)
    return FlowProblem(net, q, fixed)


def itu_solve(m: ItuMarket, **opts) -> FlowOutcome:
    prob = itu_to_flow(m)
    if prob.network.is_additive():
        return solve_additive(prob)
    return solve_general(prob, **opts)


def flow_to_matching(m: ItuMarket, out: FlowOutcome) -> Matching:
    """Copy the flow and put each matched pair's wage at the midpoint of its admissible interval."""
    mu, wages = {}, {}
    for (x, y), v in out.mu.items():
        mu[(x, y)] = rat(v)
        if v > 0 and x in m.workers and y in m.firms:
            lo = m.V[(x, y)].inverse(-out.p[y])
            hi = m.U[(x, y)].inverse(out.p[x])
            if lo > hi:
                raise InputError(f"empty wage interval on matched pair {x}-{y}")
            wages[(x, y)] = (lo + hi) / 2
    return Matching(mu, wages)


def itu_payoffs(m: ItuMarket, match: Matching) -> tuple[dict, dict, list]:
    """Realized payoffs (u, v) and a list of inconsistencies (unequal payoffs within one type)."""
    issues = []
    got_u: dict = {x: set() for x in m.workers}
    got_v: dict = {y: set() for y in m.firms}
    for (x, y), w in match.wages.items():
        if match.mu.get((x, y), 0) > 0:
            got_u[x].add(m.U[(x, y)](w))
            got_v[y].add(m.V[(x, y)](w))
    for x in m.workers:
        if match.mu.get((x, RESERVE), 0) > 0:
            got_u[x].add(Fraction(0))
    for y in m.firms:
        if match.mu.get((RESERVE, y), 0) > 0:
            got_v[y].add(Fraction(0))
    u, v = {}, {}
    for z, vals, out in [(x, got_u[x], u) for x in m.workers] + [(y, got_v[y], v) for y in m.firms]:
        if len(vals) > 1:
            issues.append({"type": z, "payoffs": sorted(vals)})
        out[z] = min(vals) if vals else None
    return u, v, issues


def check_stability_itu(m: ItuMarket, match: Matching) -> Verdict:
    """Feasibility, equal treatment within a type, individual rationality and no blocking pair."""
    mu = match.mu
    for (x, y), val in mu.items():
        if val < 0:
            return Verdict("itu_stable", False, {"negative_mass": (x, y)})
    for x, n in m.workers.items():
        s = sum((mu.get((x, y), 0) for y in m.firms), Fraction(0)) + mu.get((x, RESERVE), 0)
        if s != n:
            return Verdict("itu_stable", False, {"feasibility": x, "sent": s, "count": n})
    for y, c in m.firms.items():
        s = sum((mu.get((x, y), 0) for x in m.workers), Fraction(0)) + mu.get((RESERVE, y), 0)
        if s != c:
            return Verdict("itu_stable", False, {"feasibility": y, "received": s, "count": c})
    if not m.with_singles and any(mu.get(k, 0) for k in mu if RESERVE in k):
        return Verdict("itu_stable", False, {"feasibility": "reservation mass without singles"})
    for (x, y), val in mu.items():
        if val > 0 and x in m.workers and y in m.firms and (x, y) not in match.wages:
            return Verdict("itu_stable", False, {"missing_wage": (x, y)})
    u, v, issues = itu_payoffs(m, match)
    if issues:
        return Verdict("itu_stable", False, {"unequal_treatment": issues[0]})

    def gen():
        if m.with_singles:
            for x, val in u.items():
                if val is not None and val < 0:
                    yield {"individual_rationality": x, "u": val}
            for y, val in v.items():
                if val is not None and val < 0:
                    yield {"individual_rationality": y, "v": val}
        for (x, y) in sorted(m.U):
            if u[x] is None or v[y] is None:
                continue
            # x and y block iff some wage gives both strictly more
            try:
                best = m.U[(x, y)](m.V[(x, y)].inverse(v[y]))
            except DomainError:
                continue
            if best > u[x]:
                yield {"blocking_pair": (x, y), "u": u[x], "v": v[y], "u_if_matched": best}

    return _first("itu_stable", gen())


def payoff_prices(m: ItuMarket, p: Mapping) -> tuple[dict, dict]:
    return {x: p[x] for x in m.workers}, {y: -p[y] for y in m.firms}


# no transfers


@dataclass(frozen=True)
class NtuMarket:
    men: tuple
    women: tuple
    alpha: Mapping[tuple, Fraction]  # man's utility from (x, y)
    alpha0: Mapping[str, Fraction]
    gamma: Mapping[tuple, Fraction]  # woman's utility from (x, y)
    gamma0: Mapping[str, Fraction]

    def __post_init__(self):
        X = tuple(str(x) for x in self.men)
        Y = tuple(str(y) for y in self.women)
        if len(set(X)) != len(X) or len(set(Y)) != len(Y):
            raise InputError("duplicate agent label")
        pairs = {(x, y) for x in X for y in Y}
        a = {(str(x), str(y)): rat(v) for (x, y), v in self.alpha.items()}
        g = {(str(x), str(y)): rat(v) for (x, y), v in self.gamma.items()}
        a0 = {str(x): rat(v) for x, v in self.alpha0.items()}
        g0 = {str(y): rat(v) for y, v in self.gamma0.items()}
        if set(a) != pairs or set(g) != pairs or set(a0) != set(X) or set(g0) != set(Y):
            raise InputError("utilities must be given for every pair and every outside option")
        for x in X:
            vals = [a[(x, y)] for y in Y] + [a0[x]]
            if len(set(vals)) != len(vals):
                raise InputError(f"strict preferences violated: man {x} is indifferent between two options")
        for y in Y:
            vals = [g[(x, y)] for x in X] + [g0[y]]
            if len(set(vals)) != len(vals):
                raise InputError(f"strict preferences violated: woman {y} is indifferent between two options")
        object.__setattr__(self, "men", X)
        object.__setattr__(self, "women", Y)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "alpha0", a0)
        object.__setattr__(self, "gamma0", g0)

    def choice(self, x: str, v: Mapping) -> str:
        """x's favourite among the women willing to take him at v, or RESERVE."""
        best, arg = self.alpha0[x], RESERVE
        for y in self.women:
            if self.gamma[(x, y)] >= v[y] and self.alpha[(x, y)] > best:
                best, arg = self.alpha[(x, y)], y
        return arg


def ntu_excess_supply(m: NtuMarket, v: Mapping) -> dict:
    v = {y: rat(v[y]) for y in m.women}
    picks = {y: 0 for y in m.women}
    for x in m.men:
        c = m.choice(x, v)
        if c != RESERVE:
            picks[c] += 1
    return {y: Fraction(1 - picks[y] - (1 if m.gamma0[y] >= v[y] else 0)) for y in m.women}


def ntu_levels(m: NtuMarket) -> list[list[Fraction]]:
    """Realizable payoff levels of each woman: her partner utilities and her outside option."""
    return [sorted({m.gamma[(x, y)] for x in m.men} | {m.gamma0[y]}) for y in m.women]


def ntu_reconstruct(m: NtuMarket, v: Mapping) -> Matching:
    mu = {}
    for x in m.men:
        c = m.choice(x, v)
        mu[(x, c)] = Fraction(1)
    for y in m.women:
        if m.gamma0[y] >= v[y]:
            mu[(RESERVE, y)] = Fraction(1)
    return Matching(mu)


@dataclass(frozen=True)
class NtuOutcome:
    v: tuple
    matching: Matching


def ntu_solve(m: NtuMarket) -> list[NtuOutcome]:
    """All zeros of the excess supply map on the realizable-level grid, with their matchings."""
    found = []
    for v in product(*ntu_levels(m)):
        vd = dict(zip(m.women, v))
        if all(val == 0 for val in ntu_excess_supply(m, vd).values()):
            match = ntu_reconstruct(m, vd)
            verdict = check_stability_ntu(m, match)
            if not verdict.holds:
                raise ConsistencyError(f"zero of the excess supply map is not stable: {verdict.witness}")
            found.append(NtuOutcome(tuple(v), match))
    return found


def ntu_partners(m: NtuMarket, match: Matching) -> tuple[dict, dict]:
    """Each man's and woman's option under a 0/1 matching; raises on infeasibility."""
    hx, hy = {}, {}
    for (x, y), val in match.mu.items():
        if val == 0:
            continue
        if val != 1:
            raise InputError("NTU matchings are 0/1")
        if x != RESERVE:
            if x in hx:
                raise InputError(f"man {x} has two partners")
            hx[x] = y
        if y != RESERVE:
            if y in hy:
                raise InputError(f"woman {y} has two partners")
            hy[y] = x
    for x in m.men:
        if x not in hx:
            raise InputError(f"man {x} has no assignment")
    for y in m.women:
        if y not in hy:
            raise InputError(f"woman {y} has no assignment")
    for x, y in hx.items():
        if y != RESERVE and hy.get(y) != x:
            raise InputError("matching is not symmetric")
    return hx, hy


def ntu_payoffs(m: NtuMarket, match: Matching) -> tuple[dict, dict]:
    hx, hy = ntu_partners(m, match)
    u = {x: m.alpha0[x] if y == RESERVE else m.alpha[(x, y)] for x, y in hx.items()}
    v = {y: m.gamma0[y] if x == RESERVE else m.gamma[(x, y)] for y, x in hy.items()}
    return u, v


def check_stability_ntu(m: NtuMarket, match: Matching) -> Verdict:
    u, v = ntu_payoffs(m, match)

    def gen():
        for x in m.men:
            if u[x] < m.alpha0[x]:
                yield {"individual_rationality": x}
        for y in m.women:
            if v[y] < m.gamma0[y]:
                yield {"individual_rationality": y}
        for x in m.men:
            for y in m.women:
                if m.alpha[(x, y)] > u[x] and m.gamma[(x, y)] > v[y]:
                    yield {"blocking_pair": (x, y)}

    return _first("ntu_stable", gen())


def gale_shapley(m: NtuMarket, proposing: str = "men") -> Matching:
    """Deferred acceptance with outside options as acceptability cutoffs."""
    if proposing not in ("men", "women"):
        raise InputError("proposing side must be 'men' or 'women'")
    if proposing == "men":
        P, R = m.men, m.women
        pu = lambda a, b: m.alpha[(a, b)]
        ru = lambda a, b: m.gamma[(a, b)]
        p0, r0 = m.alpha0, m.gamma0
    else:
        P, R = m.women, m.men
        pu = lambda a, b: m.gamma[(b, a)]
        ru = lambda a, b: m.alpha[(b, a)]
        p0, r0 = m.gamma0, m.alpha0
    prefs = {a: sorted((b for b in R if pu(a, b) > p0[a]), key=lambda b: -pu(a, b)) for a in P}
    nxt = {a: 0 for a in P}
    held: dict = {}
    free = list(P)
    while free:
        a = free.pop()
        while nxt[a] < len(prefs[a]):
            b = prefs[a][nxt[a]]
            nxt[a] += 1
            if ru(a, b) <= r0[b]:
                continue
            cur = held.get(b)
            if cur is None or ru(a, b) > ru(cur, b):
                held[b] = a
                if cur is not None:
                    free.append(cur)
                break
    mu = {}
    for b, a in held.items():
        x, y = (a, b) if proposing == "men" else (b, a)
        mu[(x, y)] = Fraction(1)
    matched_men = {x for x, _ in mu}
    matched_women = {y for _, y in mu}
    for x in m.men:
        if x not in matched_men:
            mu[(x, RESERVE)] = Fraction(1)
    for y in m.women:
        if y not in matched_women:
            mu[(RESERVE, y)] = Fraction(1)
    return Matching(mu)


def ntu_correspondence(m: NtuMarket, grid: Iterable | None = None) -> FiniteCorrespondence:
    pts = list(grid) if grid is not None else list(product(*ntu_levels(m)))
    return FiniteCorrespondence.from_function(
        pts, lambda v: tuple(ntu_excess_supply(m, dict(zip(m.women, v)))[y] for y in m.women))


def ntu_m0_check(m: NtuMarket, grid: Iterable | None = None) -> Verdict:
    """Weak gross substitutes, monotone total output and an M0-function label on a payoff grid."""
    Q = ntu_correspondence(m, grid)
    for v in (check_substitutes(Q, "wgs_function"), check_monotonicity(Q, "monotone_total_output")):
        if not v.holds:
            return Verdict("ntu_m0_function", False, {"failed": v.property, **v.witness})
    tax = classify(Q)
    if not (tax.ugs and tax.nonreversing and tax.point_valued):
        return Verdict("ntu_m0_function", False, {"label": tax.label})
    return Verdict("ntu_m0_function", True, note=f"label {tax.label}")


# hedonic pricing


@dataclass(frozen=True)
class HedonicMarket:
    producers: Mapping[str, Fraction]  # n_x
    consumers: Mapping[str, Fraction]  # m_y
    qualities: tuple
    pi: Mapping[tuple, MonotoneMap]  # (x, w) -> profit of the price, increasing
    s: Mapping[tuple, MonotoneMap]  # (y, w) -> surplus of the price, decreasing

    def __post_init__(self):
        X = {str(k): rat(v) for k, v in self.producers.items()}
        Y = {str(k): rat(v) for k, v in self.consumers.items()}
        W = tuple(str(w) for w in self.qualities)
        labels = list(X) + list(Y) + list(W)
        if len(set(labels)) != len(labels) or RESERVE in labels:
            raise InputError("producer, consumer, quality and reservation labels must be distinct")
        if any(v < 0 for v in list(X.values()) + list(Y.values())):
            raise InputError("counts must be nonnegative")
        pi = {(str(x), str(w)): f for (x, w), f in self.pi.items()}
        s = {(str(y), str(w)): f for (y, w), f in self.s.items()}
        for (x, w), f in pi.items():
            if x not in X or w not in W:
                raise InputError(f"profit map for unknown pair {(x, w)}")
            if not f.increasing:
                raise InputError(f"profit of {x} on {w} must increase in the price")
        for (y, w), f in s.items():
            if y not in Y or w not in W:
                raise InputError(f"surplus map for unknown pair {(y, w)}")
            if f.increasing:
                raise InputError(f"surplus of {y} on {w} must decrease in the price")
        object.__setattr__(self, "producers", X)
        object.__setattr__(self, "consumers", Y)
        object.__setattr__(self, "qualities", W)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "s", s)


def hedonic_to_flow(m: HedonicMarket) -> FlowProblem:
    nodes = list(m.producers) + list(m.qualities) + list(m.consumers) + [RESERVE]
    conn = {}
    for (x, w), f in m.pi.items():
        conn[(x, w)] = increasing_connection(f)
    for x in m.producers:
        conn[(x, RESERVE)] = Additive(0)
    for (y, w), f in m.s.items():
        conn[(w, y)] = decreasing_inverse_connection(f)
    for y in m.consumers:
        conn[(RESERVE, y)] = Additive(0)
    q = {x: -n for x, n in m.producers.items()}
    q.update({w: Fraction(0) for w in m.qualities})
    q.update(m.consumers)
    q[RESERVE] = sum(m.producers.values()) - sum(m.consumers.values())
    net = Network(tuple(nodes), tuple(conn), conn)
    return FlowProblem(net, q, {RESERVE: Fraction(0)})


@dataclass(frozen=True)
class HedonicOutcome:
    p: Mapping[str, Fraction]  # quality prices
    u: Mapping[str, Fraction]
    v: Mapping[str, Fraction]
    mu: Mapping[tuple, Fraction]

    def node_prices(self) -> dict:
        """The flow-side vector (u, p, -v) with the reservation price 0."""
        out = dict(self.u)
        out.update(self.p)
        out.update({y: -val for y, val in self.v.items()})
        out[RESERVE] = Fraction(0)
        return out


def hedonic_indirect(m: HedonicMarket, p: Mapping) -> tuple[dict, dict]:
    u = {x: max([m.pi[(x, w)](p[w]) for w in m.qualities if (x, w) in m.pi] + [Fraction(0)]) for x in m.producers}
    v = {y: max([m.s[(y, w)](p[w]) for w in m.qualities if (y, w) in m.s] + [Fraction(0)]) for y in m.consumers}
    return u, v


def outcome_from_flow(m: HedonicMarket, out: FlowOutcome) -> HedonicOutcome:
    p = {w: out.p[w] for w in m.qualities}
    u, v = hedonic_indirect(m, p)
    return HedonicOutcome(p, u, v, dict(out.mu))


def hedonic_solve(m: HedonicMarket, **opts) -> HedonicOutcome:
    prob = hedonic_to_flow(m)
    out = solve_additive(prob) if prob.network.is_additive() else solve_general(prob, **opts)
    return outcome_from_flow(m, out)


def verify_hedonic(m: HedonicMarket, p: Mapping, mu: Mapping, eps=0, q: Mapping | None = None) -> Verdict:
    """Feasibility, quality balance (q_w, zero by default) and the four optimality relations."""
    eps = to_eps(eps)
    p = {w: rat(p[w]) for w in m.qualities}
    mu = {k: rat(v) for k, v in mu.items() if v}
    target = {w: rat((q or {}).get(w, 0)) for w in m.qualities}
    u, v = hedonic_indirect(m, p)
    allowed = set(m.pi) | {(x, RESERVE) for x in m.producers}
    allowed |= {(w, y) for (y, w) in m.s} | {(RESERVE, y) for y in m.consumers}

    def gen():
        for k, val in mu.items():
            if k not in allowed:
                yield {"unknown_flow": k}
            elif val < 0:
                yield {"negative_flow": k}
        for x, n in m.producers.items():
            tot = sum((mu.get((x, w), 0) for w in m.qualities), Fraction(0)) + mu.get((x, RESERVE), 0)
            if abs(tot - n) > eps:
                yield {"hed1_producer": x, "allocated": tot, "count": n}
        for y, c in m.consumers.items():
            tot = sum((mu.get((w, y), 0) for w in m.qualities), Fraction(0)) + mu.get((RESERVE, y), 0)
            if abs(tot - c) > eps:
                yield {"hed1_consumer": y, "allocated": tot, "count": c}
        for w in m.qualities:
            made = sum((mu.get((x, w), 0) for x in m.producers), Fraction(0))
            used = sum((mu.get((w, y), 0) for y in m.consumers), Fraction(0))
            if abs(made - used - target[w]) > eps:
                yield {"hed2_quality": w, "excess_supply": made - used, "target": target[w]}
        for (x, w), f in m.pi.items():
            if mu.get((x, w), 0) > 0 and mu[(x, w)] * (u[x] - f(p[w])) > eps:
                yield {"hed3_producer_not_optimal": (x, w), "u": u[x], "profit": f(p[w])}
        for x in m.producers:
            if mu.get((x, RESERVE), 0) > 0 and mu[(x, RESERVE)] * u[x] > eps:
                yield {"hed3_producer_idle_with_rent": x, "u": u[x]}
        for (y, w), f in m.s.items():
            if mu.get((w, y), 0) > 0 and mu[(w, y)] * (v[y] - f(p[w])) > eps:
                yield {"hed3_consumer_not_optimal": (y, w), "v": v[y], "surplus": f(p[w])}
        for y in m.consumers:
            if mu.get((RESERVE, y), 0) > 0 and mu[(RESERVE, y)] * v[y] > eps:
                yield {"hed3_consumer_idle_with_rent": y, "v": v[y]}

    return _first("hedonic_equilibrium", gen())


# lattice structure of equilibrium sets


def lattice_closure(points: Iterable, member: Callable[[tuple], bool], prop: str = "lattice_closed") -> Verdict:
    """Every meet and join of two verified points must verify again."""
    pts = sorted(set(tuple(p) for p in points))

    def gen():
        for i, a in enumerate(pts):
            for b in pts[i + 1:]:
                for name, c in (("meet", meet(a, b)), ("join", join(a, b))):
                    if c not in pts and not member(c):
                        yield {"p": a, "p2": b, name: c}

    return _first(prop, gen())


def strong_set_order(lo: Iterable, hi: Iterable, member_lo, member_hi, prop: str = "strong_set_order") -> Verdict:
    """lo <= hi in the strong set order: a^b stays in lo and a v b stays in hi."""
    A = [tuple(a) for a in lo]
    B = [tuple(b) for b in hi]

    def gen():
        for a in A:
            for b in B:
                if not member_lo(meet(a, b)):
                    yield {"a": a, "b": b, "meet_not_in_lower_set": meet(a, b)}
                if not member_hi(join(a, b)):
                    yield {"a": a, "b": b, "join_not_in_upper_set": join(a, b)}

    return _first(prop, gen())


def flow_member(prob: FlowProblem) -> Callable[[tuple], bool]:
    """Membership in the equilibrium price set of prob, for price tuples in node order."""
    nodes = prob.network.nodes

    def member(p) -> bool:
        return equilibrium_flow_at(prob, dict(zip(nodes, p))) is not None

    return member


@dataclass(frozen=True)
class LatticeReport:
    points: int
    closure: Verdict
    comparative: Verdict | None = None

    def to_dict(self) -> dict:
        d = {"points": self.points, "closure": self.closure.to_dict()}
        if self.comparative is not None:
            d["comparative_statics"] = self.comparative.to_dict()
        return d


def equilibrium_lattice_report(prob: FlowProblem, prices: Iterable[Mapping], shifted: FlowProblem | None = None,
                               shifted_prices: Iterable[Mapping] | None = None) -> LatticeReport:
    """Closure of verified equilibrium prices under meet and join; optionally the strong-set-order
    comparison against the equilibrium prices of a second problem whose prices should be higher."""
    nodes = prob.network.nodes
    pts = [tuple(rat(p[z]) for z in nodes) for p in prices]
    member = flow_member(prob)
    for p in pts:
        if not member(p):
            raise InputError("a supplied price vector is not an equilibrium price")
    closure = lattice_closure(pts, member, "equilibrium_prices_lattice")
    comp = None
    if shifted is not None:
        if shifted.network.nodes != nodes:
            raise InputError("comparative statics needs the same node order")
        hi = [tuple(rat(p[z]) for z in nodes) for p in shifted_prices or []]
        comp = strong_set_order(pts, hi, member, flow_member(shifted), "comparative_statics")
    return LatticeReport(len(pts), closure, comp)
