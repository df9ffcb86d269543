"""Equilibrium flows on a network with increasing connection functions.

A price vector p and an arc flow mu form an equilibrium for exiting flows q when
mass balances at every node, no arc earns a positive rent (p_x >= G_xy(p_y)),
and only zero-rent arcs carry flow. Everything is exact over Fractions unless a
tolerance is passed explicitly.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Iterable, Mapping, Sequence

from .corr import FiniteCorrespondence, Verdict
from .errors import DomainError, EquistatError, Inconclusive, InputError
from .rat import fmt, point, rat

Node = str
Arc = tuple  # (tail, head)


def to_eps(x) -> Fraction:
    """Tolerances may be floats such as 1e-9; they are read through their decimal repr."""
    if isinstance(x, float):
        x = Fraction(str(x))
    e = rat(x)
    if e < 0:
        raise InputError("tolerance must be nonnegative")
    return e


# connection functions


class Connection:
    """Strictly increasing G: downstream price -> break-even upstream price."""

    kind = ""

    def __call__(self, v: Fraction) -> Fraction:
        raise NotImplementedError

    def inverse(self, v: Fraction) -> Fraction:
        raise NotImplementedError

    def slope(self, v: Fraction, direction: int) -> Fraction:
        """One-sided derivative at v, to the right if direction > 0."""
        raise NotImplementedError

    def next_break(self, v: Fraction, direction: int) -> Fraction | None:
        """Distance from v to the next kink in the given direction, or None."""
        return None

    def domain(self) -> tuple:
        """(lowest, highest) admissible downstream price; None means unbounded."""
        return None, None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Additive(Connection):
    c: Fraction
    kind = "additive"

    def __post_init__(self):
        object.__setattr__(self, "c", rat(self.c))

    def __call__(self, v):
        return v - self.c

    def inverse(self, v):
        return v + self.c

    def slope(self, v, direction):
        return Fraction(1)

    def to_dict(self):
        return {"type": "additive", "c": fmt(self.c)}


@dataclass(frozen=True)
class Affine(Connection):
    a: Fraction
    b: Fraction
    kind = "affine"

    def __post_init__(self):
        object.__setattr__(self, "a", rat(self.a))
        object.__setattr__(self, "b", rat(self.b))
        if self.a <= 0:
            raise InputError("affine connection needs a positive slope")

    def __call__(self, v):
        return self.a * v + self.b

    def inverse(self, v):
        return (v - self.b) / self.a

    def slope(self, v, direction):
        return self.a

    def to_dict(self):
        return {"type": "affine", "a": fmt(self.a), "b": fmt(self.b)}


@dataclass(frozen=True)
class Tabulated(Connection):
    """Piecewise-linear interpolation through (p_y, p_x) breakpoints; no extrapolation."""

    points: tuple
    kind = "tabulated"

    def __post_init__(self):
        pts = tuple((rat(a), rat(b)) for a, b in self.points)
        if len(pts) < 2:
            raise InputError("a tabulated connection needs at least two breakpoints")
        for (a0, b0), (a1, b1) in zip(pts, pts[1:]):
            if not (a0 < a1 and b0 < b1):
                raise InputError("tabulated breakpoints must increase in both coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def xs(self):
        return [a for a, _ in self.points]

    @property
    def ys(self):
        return [b for _, b in self.points]

    @staticmethod
    def _interp(xs, ys, v):
        if v < xs[0] or v > xs[-1]:
            raise DomainError(f"tabulated query {fmt(v)} outside [{fmt(xs[0])}, {fmt(xs[-1])}]")
        i = bisect_left(xs, v)
        if xs[i] == v:
            return ys[i]
        x0, x1, y0, y1 = xs[i - 1], xs[i], ys[i - 1], ys[i]
        return y0 + (y1 - y0) * (v - x0) / (x1 - x0)

    @staticmethod
    def _slope(xs, ys, v, direction):
        if direction > 0:
            i = bisect_right(xs, v)
            if i == 0 or i >= len(xs):
                raise DomainError(f"cannot move right of {fmt(v)} on a tabulated connection")
        else:
            i = bisect_left(xs, v)
            if i == 0 or i == len(xs):
                raise DomainError(f"cannot move left of {fmt(v)} on a tabulated connection")
        return (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])

    @staticmethod
    def _next(xs, v, direction):
        if direction > 0:
            i = bisect_right(xs, v)
            return xs[i] - v if i < len(xs) else None
        i = bisect_left(xs, v)
        return v - xs[i - 1] if i > 0 else None

    def __call__(self, v):
        return self._interp(self.xs, self.ys, v)

    def inverse(self, v):
        return self._interp(self.ys, self.xs, v)

    def slope(self, v, direction):
        return self._slope(self.xs, self.ys, v, direction)

    def next_break(self, v, direction):
        return self._next(self.xs, v, direction)

    def domain(self):
        return self.points[0][0], self.points[-1][0]

    def to_dict(self):
        return {"type": "tabulated", "points": [[fmt(a), fmt(b)] for a, b in self.points]}


def connection_from_dict(d: Mapping) -> Connection:
    kind = d.get("type")
    if kind == "additive":
        return Additive(rat(d["c"]))
    if kind == "affine":
        return Affine(rat(d["a"]), rat(d["b"]))
    if kind == "tabulated":
        return Tabulated(tuple(tuple(pt) for pt in d["points"]))
    raise InputError(f"unknown connection type {kind!r}")


def eval_connection(G: Connection, p_y) -> Fraction:
    return G(rat(p_y))


def inverse_eval(G: Connection, p_x) -> Fraction:
    return G.inverse(rat(p_x))


# networks


@dataclass(frozen=True)
class Network:
    nodes: tuple
    arcs: tuple
    connection: Mapping[Arc, Connection]

    def __post_init__(self):
        nodes = tuple(str(z) for z in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise InputError("duplicate node label")
        known = set(nodes)
        arcs = tuple((str(x), str(y)) for x, y in self.arcs)
        if len(set(arcs)) != len(arcs):
            raise InputError("duplicate arc")
        for x, y in arcs:
            if x not in known or y not in known:
                raise InputError(f"arc {x}->{y} has an unknown endpoint")
            if x == y:
                raise InputError(f"self-loop at {x}")
        conn = {(str(x), str(y)): G for (x, y), G in self.connection.items()}
        if set(conn) != set(arcs):
            raise InputError("every arc needs exactly one connection function")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "connection", conn)

    @classmethod
    def additive(cls, nodes, costs: Mapping[Arc, object]) -> "Network":
        return cls(tuple(nodes), tuple(costs), {a: Additive(rat(c)) for a, c in costs.items()})

    def G(self, arc: Arc) -> Connection:
        return self.connection[arc]

    def index(self) -> dict:
        return {z: i for i, z in enumerate(self.nodes)}

    def out_arcs(self) -> dict:
        out = {z: [] for z in self.nodes}
        for a in self.arcs:
            out[a[0]].append(a)
        return out

    def is_additive(self) -> bool:
        return all(isinstance(G, Additive) for G in self.connection.values())

    def is_acyclic(self) -> bool:
        return topological_order(self) is not None


def topological_order(net: Network) -> list | None:
    indeg = {z: 0 for z in net.nodes}
    for _, y in net.arcs:
        indeg[y] += 1
    out = net.out_arcs()
    ready = [z for z in net.nodes if indeg[z] == 0]
    order = []
    while ready:
        z = ready.pop()
        order.append(z)
        for _, y in out[z]:
            indeg[y] -= 1
            if indeg[y] == 0:
                ready.append(y)
    return order if len(order) == len(net.nodes) else None


def incidence(net: Network) -> list[list[int]]:
    """Arc-by-node matrix: -1 at the tail, +1 at the head."""
    idx = net.index()
    rows = []
    for x, y in net.arcs:
        row = [0] * len(net.nodes)
        row[idx[x]] = -1
        row[idx[y]] = 1
        rows.append(row)
    return rows


def divergence(net: Network, mu: Mapping[Arc, Fraction]) -> dict:
    """Inflow minus outflow at each node, i.e. the transpose of the incidence applied to mu."""
    q = {z: Fraction(0) for z in net.nodes}
    for (x, y), m in mu.items():
        q[x] -= m
        q[y] += m
    return q


@dataclass(frozen=True)
class FlowProblem:
    network: Network
    q: Mapping[Node, Fraction]
    fixed: Mapping[Node, Fraction] = field(default_factory=dict)  # pinned prices, e.g. p_0 = 0

    def __post_init__(self):
        nodes = set(self.network.nodes)
        q = {str(z): rat(v) for z, v in self.q.items()}
        if not set(q) <= nodes:
            raise InputError("exiting flow given for an unknown node")
        q = {z: q.get(z, Fraction(0)) for z in self.network.nodes}
        fixed = {str(z): rat(v) for z, v in self.fixed.items()}
        if not set(fixed) <= nodes:
            raise InputError("fixed price given for an unknown node")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "fixed", fixed)

    def balanced(self) -> bool:
        return sum(self.q.values()) == 0


@dataclass(frozen=True)
class FlowOutcome:
    q: Mapping[Node, Fraction]
    mu: Mapping[Arc, Fraction]
    p: Mapping[Node, Fraction]

    def scaled(self, lam) -> "FlowOutcome":
        lam = rat(lam)
        return FlowOutcome({z: lam * v for z, v in self.q.items()},
                           {a: lam * v for a, v in self.mu.items()}, dict(self.p))

    def to_dict(self) -> dict:
        return {
            "q": {z: fmt(v) for z, v in self.q.items()},
            "mu": [{"from": x, "to": y, "flow": fmt(v)} for (x, y), v in self.mu.items()],
            "p": {z: fmt(v) for z, v in self.p.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FlowOutcome":
        mu = {(str(e["from"]), str(e["to"])): rat(e["flow"]) for e in d.get("mu", [])}
        return cls({str(z): rat(v) for z, v in d.get("q", {}).items()}, mu,
                   {str(z): rat(v) for z, v in d["p"].items()})


def rent_gap(net: Network, p: Mapping[Node, Fraction], arc: Arc) -> Fraction:
    """p_x - G_xy(p_y): nonnegative iff the arc earns no positive rent."""
    x, y = arc
    return p[x] - net.G(arc)(p[y])


def verify_equilibrium(prob: FlowProblem, out: FlowOutcome, eps=0) -> Verdict:
    """Check mass balance, no positive rent and complementary slackness, listing every violation."""
    eps = to_eps(eps)
    net = prob.network
    for a, m in out.mu.items():
        if a not in net.connection:
            raise InputError(f"flow on unknown arc {a}")
        if m < 0:
            raise InputError(f"negative flow on arc {a[0]}->{a[1]}")
    if set(out.p) != set(net.nodes):
        raise InputError("prices must cover every node")
    mu = {a: out.mu.get(a, Fraction(0)) for a in net.arcs}
    q_out = {z: rat(out.q.get(z, prob.q[z])) for z in net.nodes}
    div = divergence(net, mu)

    bad_balance = []
    bal_res = Fraction(0)
    for z in net.nodes:
        r = max(abs(div[z] - q_out[z]), abs(q_out[z] - prob.q[z]))
        bal_res = max(bal_res, r)
        if r > eps:
            bad_balance.append(z)
    bad_fixed = [z for z, v in prob.fixed.items() if abs(out.p[z] - v) > eps]

    bad_rent, bad_slack = [], []
    rent_res = slack_res = Fraction(0)
    for a in net.arcs:
        gap = rent_gap(net, out.p, a)
        rent_res = max(rent_res, -gap)
        if gap < -eps:
            bad_rent.append(f"{a[0]}->{a[1]}")
        cs = mu[a] * gap
        slack_res = max(slack_res, abs(cs))
        if abs(cs) > eps:
            bad_slack.append(f"{a[0]}->{a[1]}")

    details = {
        "mass_balance": {"residual": bal_res, "violations": bad_balance},
        "no_positive_rent": {"residual": rent_res, "violations": bad_rent},
        "complementary_slackness": {"residual": slack_res, "violations": bad_slack},
    }
    if prob.fixed:
        details["fixed_prices"] = {"violations": bad_fixed}
    ok = not (bad_balance or bad_rent or bad_slack or bad_fixed)
    witness = None
    if not ok:
        witness = {k: v["violations"] for k, v in details.items() if v["violations"]}
    return Verdict("equilibrium_flow", ok, witness, details=details)


# additive solver


class Infeasible(InputError):
    """No flow meets the exiting flows, or the dual is unbounded."""


def _bellman_ford(n: int, edges: Sequence[tuple], source: int | None):
    """Shortest distances from source (or from a virtual root to all nodes); None on a negative cycle."""
    inf = None
    dist = [Fraction(0) if source is None else inf for _ in range(n)]
    pred = [None] * n
    if source is not None:
        dist[source] = Fraction(0)
    for it in range(n + 1):
        changed = False
        for u, v, w, tag in edges:
            if dist[u] is None:
                continue
            nd = dist[u] + w
            if dist[v] is None or nd < dist[v]:
                dist[v] = nd
                pred[v] = tag
                changed = True
        if not changed:
            return dist, pred
    return None, pred


def _shift_to_fixed(prob: FlowProblem, p: dict) -> dict:
    if not prob.fixed:
        return p
    items = list(prob.fixed.items())
    z0, v0 = items[0]
    d = v0 - p[z0]
    p = {z: v + d for z, v in p.items()}
    for z, v in items[1:]:
        if p[z] != v:
            raise Inconclusive("additive prices are shift-invariant; two pinned prices conflict")
    return p


def solve_additive(prob: FlowProblem) -> FlowOutcome:
    """Min-cost flow by successive shortest paths; prices are optimal dual potentials."""
    net = prob.network
    if not net.is_additive():
        raise InputError("solve_additive needs additive connections")
    if not prob.balanced():
        raise Infeasible("exiting flows do not sum to zero")
    idx = net.index()
    n = len(net.nodes)
    cost = {a: net.G(a).c for a in net.arcs}

    arcs_idx = [(idx[x], idx[y], cost[(x, y)], (x, y)) for x, y in net.arcs]
    dist, _ = _bellman_ford(n, arcs_idx, None)
    if dist is None:
        raise Infeasible("negative-cost cycle: no prices satisfy the no-rent condition")

    supply = {z: -v for z, v in prob.q.items() if v < 0}
    demand = {z: v for z, v in prob.q.items() if v > 0}
    total = sum(supply.values(), Fraction(0))
    src, snk = n, n + 1
    # residual graph as parallel lists; arc i and i^1 are mates
    head, cap, wt = [], [], []
    adj = [[] for _ in range(n + 2)]
    big = total + 1

    def add_edge(u, v, c, w):
        for a, b, cc, ww in ((u, v, c, w), (v, u, Fraction(0), -w)):
            adj[a].append(len(head))
            head.append(b)
            cap.append(cc)
            wt.append(ww)

    arc_edge = {}
    for x, y in net.arcs:
        arc_edge[(x, y)] = len(head)
        add_edge(idx[x], idx[y], big, cost[(x, y)])
    for z, s in supply.items():
        add_edge(src, idx[z], s, Fraction(0))
    for z, d in demand.items():
        add_edge(idx[z], snk, d, Fraction(0))

    # initial potentials: Bellman-Ford from the super source on positive-capacity edges
    pot = [None] * (n + 2)
    pot[src] = Fraction(0)
    for _ in range(n + 2):
        changed = False
        for u in range(n + 2):
            if pot[u] is None:
                continue
            for e in adj[u]:
                if cap[e] > 0:
                    v = head[e]
                    nd = pot[u] + wt[e]
                    if pot[v] is None or nd < pot[v]:
                        pot[v] = nd
                        changed = True
        if not changed:
            break
    unreached = max((v for v in pot if v is not None), default=Fraction(0))
    pot = [v if v is not None else unreached for v in pot]

    sent = Fraction(0)
    tie = count()
    while sent < total:
        dist = [None] * (n + 2)
        pred = [None] * (n + 2)
        dist[src] = Fraction(0)
        heap = [(Fraction(0), next(tie), src)]
        done = [False] * (n + 2)
        while heap:
            d, _, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for e in adj[u]:
                if cap[e] <= 0:
                    continue
                v = head[e]
                nd = d + wt[e] + pot[u] - pot[v]
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    pred[v] = e
                    heapq.heappush(heap, (nd, next(tie), v))
        if dist[snk] is None:
            raise Infeasible("no flow meets the exiting flows")
        for v in range(n + 2):
            if dist[v] is not None:
                pot[v] += dist[v]
            else:
                pot[v] += dist[snk]
        push = total - sent
        v = snk
        while v != src:
            e = pred[v]
            push = min(push, cap[e])
            v = head[e ^ 1]
        v = snk
        while v != src:
            e = pred[v]
            cap[e] -= push
            cap[e ^ 1] += push
            v = head[e ^ 1]
        sent += push

    mu = {a: cap[arc_edge[a] ^ 1] for a in net.arcs}

    # dual prices: shortest distances in the residual graph of the original nodes
    res = []
    for (x, y), m in mu.items():
        res.append((idx[x], idx[y], cost[(x, y)], None))
        if m > 0:
            res.append((idx[y], idx[x], -cost[(x, y)], None))
    dist, _ = _bellman_ford(n, res, None)
    if dist is None:
        raise EquistatError("residual graph has a negative cycle after optimisation")
    p = _shift_to_fixed(prob, {z: dist[idx[z]] for z in net.nodes})
    return FlowOutcome(dict(prob.q), mu, p)


def flow_cost(net: Network, mu: Mapping[Arc, Fraction]) -> Fraction:
    return sum((net.G(a).c * m for a, m in mu.items()), Fraction(0))


# latest departure


@dataclass(frozen=True)
class LatestDeparture:
    destination: Node
    p: Mapping[Node, Fraction | None]  # None marks nodes with no route to the destination
    next_hop: Mapping[Node, Node]

    def path(self, origin: Node) -> list:
        if self.p.get(origin) is None:
            raise InputError(f"no path from {origin} to {self.destination}")
        route = [origin]
        while route[-1] != self.destination:
            route.append(self.next_hop[route[-1]])
        return route

    def tight_arcs(self) -> list:
        return [(x, y) for x, y in self.next_hop.items()]


def solve_latest_departure(net: Network, destination: Node, p_d, origin: Node | None = None) -> LatestDeparture:
    """Latest time at each node that still reaches the destination by p_d.

    Bellman iteration of p_x = max over arcs xy of G_xy(p_y), with p_d pinned.
    Nodes without outgoing arcs (other than the destination) impose nothing.
    """
    if destination not in net.nodes:
        raise InputError(f"unknown destination {destination}")
    p: dict = {z: None for z in net.nodes}
    p[destination] = rat(p_d)
    hop: dict = {}
    for _ in range(len(net.nodes)):
        changed = False
        for x, y in net.arcs:
            if x == destination or p[y] is None:
                continue
            v = net.G((x, y))(p[y])
            if v >= p[y]:
                raise DomainError(f"connection {x}->{y} does not make progress at {fmt(p[y])}")
            if p[x] is None or v > p[x]:
                p[x] = v
                hop[x] = y
                changed = True
        if not changed:
            break
    else:
        raise DomainError("latest-departure iteration did not settle")
    out = LatestDeparture(destination, p, hop)
    if origin is not None:
        out.path(origin)
    return out


# sampled equilibrium correspondence


def feasible_prices(net: Network, grid: Iterable) -> tuple[list, list]:
    """Split grid points into those meeting the no-rent condition on every arc and the rest."""
    idx = net.index()
    keep, drop = [], []
    for p in grid:
        p = point(p)
        if len(p) != len(net.nodes):
            raise InputError("grid point has the wrong number of coordinates")
        pd = {z: p[i] for z, i in idx.items()}
        try:
            ok = all(rent_gap(net, pd, a) >= 0 for a in net.arcs)
        except DomainError:
            ok = False
        (keep if ok else drop).append(p)
    return keep, drop


def tight_arcs(net: Network, p: Mapping[Node, Fraction], eps=0) -> list:
    eps = to_eps(eps)
    return [a for a in net.arcs if abs(rent_gap(net, p, a)) <= eps]


def sample_equilibrium_correspondence(net: Network, grid: Iterable, cap: int = 1) -> FiniteCorrespondence:
    """Q(p) = divergences of integer flows 0..cap on the arcs tight at p, for p on the filtered grid."""
    if cap < 0:
        raise InputError("cap must be nonnegative")
    idx = net.index()
    keep, _ = feasible_prices(net, grid)
    if not keep:
        raise InputError("no grid point satisfies the no-rent condition")
    n = len(net.nodes)
    images = {}
    for p in keep:
        pd = {z: p[i] for z, i in idx.items()}
        qs = {tuple(Fraction(0) for _ in range(n))}
        for x, y in tight_arcs(net, pd):
            i, j = idx[x], idx[y]
            grown = set()
            for q in qs:
                for k in range(cap + 1):
                    r = list(q)
                    r[i] -= k
                    r[j] += k
                    grown.add(tuple(r))
            qs = grown
        images[p] = frozenset(qs)
    return FiniteCorrespondence(n, images)


# general solver


@dataclass
class SolveReport:
    status: str
    iterations: int
    trace: list = field(default_factory=list)
    p: dict | None = None
    mu: dict | None = None

    def to_dict(self) -> dict:
        d = {"status": self.status, "iterations": self.iterations, "trace": self.trace[-20:]}
        if self.p is not None:
            d["p"] = {z: fmt(v) for z, v in self.p.items()}
        return d


def _initial_prices(prob: FlowProblem) -> dict:
    """Some price vector meeting the no-rent condition and the pinned prices."""
    net = prob.network
    order = topological_order(net)
    fixed = prob.fixed
    if order is not None:
        ins = {z: [] for z in net.nodes}
        for a in net.arcs:
            ins[a[1]].append(a)
        ub: dict = {}
        for z in order:
            bound = fixed.get(z)
            for a in ins[z]:
                x = a[0]
                if ub.get(x) is not None:
                    v = net.G(a).inverse(ub[x])
                    bound = v if bound is None else min(bound, v)
            ub[z] = bound
        out = net.out_arcs()
        p: dict = {}
        for z in reversed(order):
            lb = None
            for a in out[z]:
                v = net.G(a)(p[a[1]])
                lb = v if lb is None else max(lb, v)
            if z in fixed:
                val = fixed[z]
            elif lb is not None:
                val = lb
            else:
                val = min(ub[z], Fraction(0)) if ub[z] is not None else Fraction(0)
            if lb is not None and val < lb or ub[z] is not None and val > ub[z]:
                raise Inconclusive("no starting prices respect the pinned prices")
            p[z] = val
        return p
    p = {z: fixed.get(z, Fraction(0)) for z in net.nodes}
    for _ in range(len(net.nodes) * len(net.arcs) + 1):
        changed = False
        for a in net.arcs:
            x, y = a
            gap = rent_gap(net, p, a)
            if gap >= 0:
                continue
            changed = True
            if x not in fixed:
                p[x] = net.G(a)(p[y])
            elif y not in fixed:
                p[y] = net.G(a).inverse(p[x])
            else:
                raise Inconclusive("pinned prices violate the no-rent condition")
        if not changed:
            return p
    raise Inconclusive("could not find starting prices on a cyclic network")


class _Stuck(Exception):
    pass


class _Pivot(Exception):
    """A tight arc without flow must stay tight but closes a cycle of flow-carrying arcs."""


def _rates(net: Network, p: dict, kept: set, movers: set, direction: int, frozen_roots: set) -> tuple:
    """Rates keeping every arc in `kept` tight; components that cannot move get rate 0."""
    nbr = {z: [] for z in movers}
    for a in kept:
        nbr[a[0]].append(a)
        nbr[a[1]].append(a)
    rate: dict = {}
    comp_of: dict = {}
    frozen = set()
    for root in sorted(movers):
        if root in comp_of:
            continue
        comp = [root]
        comp_of[root] = root
        rate[root] = Fraction(direction)
        pinned = False
        k = 0
        while k < len(comp):
            z = comp[k]
            k += 1
            for a in nbr[z]:
                x, y = a
                G = net.G(a)
                if x == z and y not in comp_of:
                    rate[y] = rate[x] / G.slope(p[y], direction)
                    comp_of[y] = root
                    comp.append(y)
                elif y == z and x not in comp_of:
                    rate[x] = G.slope(p[y], direction) * rate[y]
                    comp_of[x] = root
                    comp.append(x)
                elif rate[x] != G.slope(p[y], direction) * rate[y]:
                    pinned = True
        if pinned or root in frozen_roots:
            frozen.add(root)
    for z in movers:
        if comp_of[z] in frozen:
            rate[z] = Fraction(0)
    return rate, comp_of


def _price_move(net: Network, p: dict, tight: set, movers: set, direction: int, fixed, carrying: set) -> tuple:
    """Move the prices of `movers` in `direction` without creating rent.

    Arcs in `carrying` inside `movers` stay tight. A tight arc outside it
    that the move would push into positive rent is added to the rigid set, or
    freezes its component when the other end cannot follow. Returns (rates,
    step); step is None when nothing stops the move or nothing can move.
    """
    kept = {a for a in tight if a in carrying and a[0] in movers and a[1] in movers}
    frozen_roots: set = set()
    swaps = 0
    while True:
        rate, comp_of = _rates(net, p, kept, movers, direction, frozen_roots)
        for z in fixed:
            if z in movers and rate[z] != 0:
                frozen_roots.add(comp_of[z])
        if any(z in movers and rate[z] != 0 for z in fixed):
            continue
        changed = False
        for a in tight:
            x, y = a
            rx, ry = rate.get(x, Fraction(0)), rate.get(y, Fraction(0))
            if rx == 0 and ry == 0:
                continue
            if rx - net.G(a).slope(p[y], direction) * ry >= 0:
                continue
            both = x in movers and y in movers
            if both and a not in kept and rx != 0 and ry != 0:
                if comp_of[x] == comp_of[y] and a not in carrying:
                    adj: dict = {}
                    for b in kept:
                        adj.setdefault(b[0], []).append((b, b[1], 1))
                        adj.setdefault(b[1], []).append((b, b[0], -1))
                    path = _tree_path(adj, y, x)
                    idle = [b for b, sgn in path or [] if sgn < 0 and b not in carrying]
                    if not idle or swaps >= 4 * len(net.arcs):
                        if path and any(sgn < 0 for _, sgn in path):
                            raise _Pivot(a, path)
                        frozen_roots.add(comp_of[x])
                    else:
                        # degenerate exchange: an idle rigid arc leaves, a enters
                        kept.discard(idle[0])
                        kept.add(a)
                        swaps += 1
                    changed = True
                    break
                kept.add(a)
            else:
                for z in (x, y):
                    if z in movers and rate[z] != 0:
                        frozen_roots.add(comp_of[z])
            changed = True
            break
        if not changed:
            break
    moving = {z for z in movers if rate[z] != 0}
    if not moving:
        return rate, None
    step = None
    for a in net.arcs:
        x, y = a
        rx, ry = rate.get(x, Fraction(0)), rate.get(y, Fraction(0))
        if rx == 0 and ry == 0:
            continue
        G = net.G(a)
        gy = G.slope(p[y], direction) * ry if ry != 0 else Fraction(0)
        drift = rx - gy
        gap = rent_gap(net, p, a)
        if drift < 0:
            if gap == 0:
                raise _Stuck(a)
            t = gap / -drift
            step = t if step is None else min(step, t)
        if ry != 0:
            d = G.next_break(p[y], direction)
            if d is not None:
                t = d / abs(ry)
                step = t if step is None else min(step, t)
    return rate, step


def _cancel_support_cycles(mu: dict, trace: list) -> None:
    """Reroute flow around undirected cycles of flow-carrying arcs until the support is a forest.

    Divergence is unchanged and every rerouted arc already carries flow, so
    complementary slackness is kept; a forest support never pins the prices.
    """
    while True:
        adj: dict = {}
        cycle = None
        for a in sorted(a for a, v in mu.items() if v > 0):
            x, y = a
            path = _tree_path(adj, y, x)
            if path is not None:
                cycle = [(a, 1)] + path
                break
            adj.setdefault(x, []).append((a, y, 1))
            adj.setdefault(y, []).append((a, x, -1))
        if cycle is None:
            return
        if all(sgn > 0 for _, sgn in cycle):
            cycle = [(a, -sgn) for a, sgn in cycle]
        push = min(mu[a] for a, sgn in cycle if sgn < 0)
        for a, sgn in cycle:
            mu[a] += sgn * push
        trace.append({"cancel": fmt(push), "arcs": len(cycle)})


def _tree_path(adj: dict, src, dst) -> list | None:
    """Signed arcs of the unique src-to-dst path in a forest, or None."""
    if src == dst:
        return []
    prev = {src: None}
    stack = [src]
    while stack:
        u = stack.pop()
        for a, v, sgn in adj.get(u, []):
            if v in prev:
                continue
            prev[v] = (u, a, sgn)
            if v == dst:
                out = []
                while prev[v] is not None:
                    u, a, sgn = prev[v]
                    out.append((a, sgn))
                    v = u
                return out[::-1]
            stack.append(v)
    return None


def _pivot(mu: dict, arc, path) -> bool:
    """Route flow onto `arc` around the cycle it closes until another arc empties."""
    if not path:
        return False
    back = [mu[a] for a, sgn in path if sgn < 0]
    if not back or min(back) == 0:
        return False
    push = min(back)
    mu[arc] += push
    for a, sgn in path:
        mu[a] += sgn * push
    return True


def solve_general(prob: FlowProblem, max_iter: int = 5000, eps=0, p0: Mapping | None = None) -> FlowOutcome:
    """Primal-dual price adjustment with exact event steps.

    Flow is pushed along zero-rent residual paths from nodes that still have
    to ship to nodes that still have to receive. When none exists, the prices
    of the nodes reachable from the shippers are lowered (or the others
    raised) until a new arc reaches zero rent. Any failure raises Inconclusive
    carrying a SolveReport; it never claims that no equilibrium exists.
    """
    net = prob.network
    if not prob.balanced():
        raise InputError("exiting flows do not sum to zero")
    eps = to_eps(eps)
    report = SolveReport("running", 0)
    p = {z: rat(v) for z, v in p0.items()} if p0 is not None else _initial_prices(prob)
    for z, v in prob.fixed.items():
        if p[z] != v:
            raise InputError(f"starting price at {z} differs from its pinned value")
    if any(rent_gap(net, p, a) < 0 for a in net.arcs):
        raise InputError("starting prices earn a positive rent somewhere")
    mu = {a: Fraction(0) for a in net.arcs}
    bal = {z: Fraction(0) for z in net.nodes}
    out = net.out_arcs()
    ins = {z: [] for z in net.nodes}
    for a in net.arcs:
        ins[a[1]].append(a)

    def fail(msg):
        report.status = msg
        report.p = dict(p)
        report.mu = dict(mu)
        raise Inconclusive(msg, report)

    for it in range(max_iter):
        report.iterations = it
        need = {z: prob.q[z] - bal[z] for z in net.nodes}
        if all(v == 0 for v in need.values()):
            break
        tight = {a for a in net.arcs if rent_gap(net, p, a) == 0}
        sources = [z for z in net.nodes if need[z] < 0]
        pred: dict = {z: None for z in sources}
        frontier = list(sources)
        target = None
        while frontier and target is None:
            nxt = []
            for u in frontier:
                steps = [(a, a[1], +1) for a in out[u] if a in tight]
                steps += [(a, a[0], -1) for a in ins[u] if mu[a] > 0]
                for a, v, sgn in steps:
                    if v in pred:
                        continue
                    pred[v] = (u, a, sgn)
                    if need[v] > 0:
                        target = v
                        break
                    nxt.append(v)
                if target is not None:
                    break
            frontier = nxt
        if target is not None:
            path = []
            v = target
            while pred[v] is not None:
                u, a, sgn = pred[v]
                path.append((a, sgn))
                v = u
            push = min(-need[v], need[target])
            for a, sgn in path:
                if sgn < 0:
                    push = min(push, mu[a])
            for a, sgn in path:
                mu[a] += sgn * push
                bal[a[1]] += sgn * push
                bal[a[0]] -= sgn * push
            report.trace.append({"augment": fmt(push), "to": target})
            _cancel_support_cycles(mu, report.trace)
            continue

        reach = set(pred)
        rest = set(net.nodes) - reach
        moved = False
        # keep every tight arc rigid first; only flow-carrying ones if that cannot move
        flowing = {a for a in net.arcs if mu[a] > 0}
        for carrying, movers, direction in ((tight, reach, -1), (tight, rest, +1), (flowing, reach, -1),
                                            (flowing, rest, +1)):
            if not movers:
                continue
            try:
                rate, step = _price_move(net, p, tight, movers, direction, prob.fixed, carrying)
            except (_Stuck, DomainError):
                continue
            except _Pivot as exc:
                if not _pivot(mu, *exc.args):
                    continue
                moved = True
                report.trace.append({"pivot": list(exc.args[0])})
                break
            if step is None:
                continue
            for z, r in rate.items():
                if r:
                    p[z] += r * step
            moved = True
            report.trace.append({"move": "lower" if direction < 0 else "raise", "step": fmt(step)})
            break
        if not moved:
            fail("no price move opens a new zero-rent arc")
    else:
        fail("iteration budget exhausted")

    result = FlowOutcome(dict(prob.q), {a: m for a, m in mu.items()}, dict(p))
    v = verify_equilibrium(prob, result, eps)
    if not v.holds:
        fail(f"final check failed: {v.witness}")
    return result


# membership: is q in Q(p)?


def _max_flow(n: int, edges: list[tuple], s: int, t: int) -> tuple[Fraction, list]:
    """Edmonds-Karp over Fractions; edges are (u, v, cap) with cap None for unbounded."""
    head, cap, adj = [], [], [[] for _ in range(n)]
    total_cap = sum((c for _, _, c in edges if c is not None), Fraction(0)) + 1
    for u, v, c in edges:
        for a, b, cc in ((u, v, total_cap if c is None else c), (v, u, Fraction(0))):
            adj[a].append(len(head))
            head.append(b)
            cap.append(cc)
    flow = Fraction(0)
    while True:
        pred = [None] * n
        pred[s] = -1
        queue = [s]
        for u in queue:
            for e in adj[u]:
                if cap[e] > 0 and pred[head[e]] is None:
                    pred[head[e]] = e
                    queue.append(head[e])
        if pred[t] is None:
            break
        push, v = None, t
        while v != s:
            e = pred[v]
            push = cap[e] if push is None else min(push, cap[e])
            v = head[e ^ 1]
        v = t
        while v != s:
            e = pred[v]
            cap[e] -= push
            cap[e ^ 1] += push
            v = head[e ^ 1]
        flow += push
    return flow, [cap[2 * i + 1] for i in range(len(edges))]


def equilibrium_flow_at(prob: FlowProblem, p: Mapping[Node, Fraction], eps=0) -> dict | None:
    """A flow on the zero-rent arcs at p meeting prob.q, or None when p is not an equilibrium price."""
    net = prob.network
    eps = to_eps(eps)
    p = {z: rat(v) for z, v in p.items()}
    if any(p[z] != v for z, v in prob.fixed.items()):
        return None
    if any(rent_gap(net, p, a) < -eps for a in net.arcs):
        return None
    if not prob.balanced():
        return None
    idx = net.index()
    n = len(net.nodes)
    tight = tight_arcs(net, p, eps)
    edges = [(idx[x], idx[y], None) for x, y in tight]
    need = Fraction(0)
    for z, v in prob.q.items():
        if v < 0:
            edges.append((n, idx[z], -v))
        elif v > 0:
            edges.append((idx[z], n + 1, v))
            need += v
    value, flows = _max_flow(n + 2, edges, n, n + 1)
    if value != need:
        return None
    mu = {a: Fraction(0) for a in net.arcs}
    for a, f in zip(tight, flows):
        mu[a] = f
    return mu


def _upper_price(G: Connection, p_x: Fraction) -> Fraction:
    """Largest p_y with G(p_y) <= p_x, saturating at the top of a tabulated domain."""
    d_hi = G.domain()[1]
    if d_hi is not None and p_x >= G(d_hi):
        return d_hi
    return G.inverse(p_x)


def random_feasible_prices(prob: FlowProblem, rng, start: Mapping | None = None, rounds: int = 3, spread: int = 4) -> dict:
    """Resample node prices one at a time inside the interval the no-rent condition allows."""
    net = prob.network
    p = dict(start) if start is not None else _initial_prices(prob)
    out = net.out_arcs()
    ins = {z: [] for z in net.nodes}
    for a in net.arcs:
        ins[a[1]].append(a)
    for _ in range(rounds):
        for z in rng.sample(list(net.nodes), len(net.nodes)):
            if z in prob.fixed:
                continue
            lo = max((net.G(a)(p[a[1]]) for a in out[z]), default=None)
            hi = min((_upper_price(net.G(a), p[a[0]]) for a in ins[z]), default=None)
            if lo is None and hi is None:
                continue
            if lo is None:
                lo = hi - spread
            if hi is None:
                hi = lo + spread
            # stay inside every tabulated map that reads p_z
            for a in ins[z]:
                d_lo, d_hi = net.G(a).domain()
                if d_lo is not None:
                    lo = max(lo, d_lo)
                if d_hi is not None:
                    hi = min(hi, d_hi)
            p[z] = lo + (hi - lo) * Fraction(rng.randint(0, 4), 4)
    return p
