"""Finite correspondences on price sublattices and their property checkers.

Everything here is exact: prices and quantities are tuples of Fractions, and
every checker enumerates the finite grid. Verdicts therefore hold "on this
grid" and nowhere else.

Scan order is lexicographic in (p, p2, q, q2) over the sorted domain and the
sorted image sets, so the first violation reported is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import DomainError, InputError
from .rat import Point, add, dot, fmt, join, leq, meet, point, rat, scale

SUBSTITUTES_NOTIONS = (
    "ugs",
    "ugs_strong_antecedent",
    "kelso_crawford",
    "polterovich_spivak",
    "wgs_function",
)
MONOTONICITY_PROPERTIES = (
    "nonreversing",
    "strongly_nonreversing",
    "constant_aggregate_output",
    "monotone_total_output",
    "aggregate_monotonicity",
    "weighted_monotonicity",
    "walras",
    "p_correspondence",
    "bgh3",
)


def _jsonable(v):
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, tuple) and v and all(isinstance(x, Fraction) for x in v):
        return [fmt(x) for x in v]
    if isinstance(v, (list, tuple, set, frozenset)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


@dataclass(frozen=True)
class Verdict:
    property: str
    holds: bool
    witness: dict | None = None
    note: str = ""
    applicable: bool = True
    details: dict | None = None

    def __post_init__(self):
        if not self.holds and self.applicable and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    def to_dict(self) -> dict:
        d = {"property": self.property, "holds": self.holds}
        if not self.applicable:
            d["applicable"] = False
        if self.witness is not None:
            d["witness"] = _jsonable(self.witness)
        if self.note:
            d["note"] = self.note
        if self.details is not None:
            d["details"] = _jsonable(self.details)
        return d

    def summary(self) -> str:
        if not self.applicable:
            return f"{self.property}: n/a ({self.note})"
        head = f"{self.property}: {'holds' if self.holds else 'FAILS'}"
        if self.witness and not self.holds:
            parts = ", ".join(f"{k}={_jsonable(v)}" for k, v in self.witness.items())
            head += f"  [{parts}]"
        return head


def _first(prop: str, gen: Iterator[dict], note: str = "") -> Verdict:
    w = next(gen, None)
    return Verdict(prop, w is None, w, note)


@dataclass(frozen=True, eq=False)
class FiniteCorrespondence:
    """A map from a finite price grid to nonempty finite sets of quantities."""

    dim: int
    images: Mapping[Point, frozenset]
    _sorted: dict = field(init=False, repr=False)
    _domain: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("dimension must be positive")
        if not self.images:
            raise InputError("empty domain")
        clean = {}
        for p, qs in self.images.items():
            p = point(p)
            if len(p) != self.dim:
                raise InputError(f"price {p} has wrong dimension")
            qs = frozenset(point(q) for q in qs)
            if not qs:
                raise InputError(f"empty image at {list(map(fmt, p))}")
            for q in qs:
                if len(q) != self.dim:
                    raise InputError(f"quantity {q} has wrong dimension")
            if p in clean:
                raise InputError(f"duplicate price {list(map(fmt, p))}")
            clean[p] = qs
        object.__setattr__(self, "images", clean)
        object.__setattr__(self, "_domain", tuple(sorted(clean)))
        object.__setattr__(self, "_sorted", {p: tuple(sorted(qs)) for p, qs in clean.items()})

    @classmethod
    def from_function(cls, grid: Iterable, f: Callable[[Point], Iterable]) -> "FiniteCorrespondence":
        grid = [point(p) for p in grid]
        return cls(len(grid[0]), {p: frozenset([point(f(p))]) for p in grid})

    @classmethod
    def from_sets(cls, grid: Iterable, f: Callable[[Point], Iterable]) -> "FiniteCorrespondence":
        grid = [point(p) for p in grid]
        return cls(len(grid[0]), {p: frozenset(point(q) for q in f(p)) for p in grid})

    @property
    def domain(self) -> tuple:
        return self._domain

    def __call__(self, p) -> frozenset:
        return self.images[point(p)]

    def __contains__(self, p) -> bool:
        return point(p) in self.images

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteCorrespondence)
            and self.dim == other.dim
            and self.images == other.images
        )

    def __hash__(self):
        return hash((self.dim, frozenset(self.images.items())))

    def image(self, p) -> tuple:
        """Sorted image tuple, the canonical scan order."""
        return self._sorted[p]

    def graph(self) -> Iterator[tuple[Point, Point]]:
        for p in self._domain:
            for q in self._sorted[p]:
                yield p, q

    def quantities(self) -> tuple:
        return tuple(sorted({q for qs in self.images.values() for q in qs}))

    def is_point_valued(self) -> bool:
        return all(len(qs) == 1 for qs in self.images.values())

    def is_inverse_point_valued(self) -> bool:
        seen = set()
        for _, q in self.graph():
            if q in seen:
                return False
            seen.add(q)
        return True

    def value(self, p) -> Point:
        qs = self.images[point(p)]
        if len(qs) != 1:
            raise InputError("correspondence is set-valued here")
        return next(iter(qs))

    def restrict(self, grid: Iterable) -> "FiniteCorrespondence":
        keep = {point(p) for p in grid}
        return FiniteCorrespondence(self.dim, {p: qs for p, qs in self.images.items() if p in keep})


def product_grid(levels: Sequence, dim: int | None = None) -> list[Point]:
    """Cartesian grid. `levels` is either one list reused `dim` times or a list per axis."""
    if dim is not None:
        axes = [list(levels)] * dim
    else:
        axes = [list(a) for a in levels]
    return [point(p) for p in product(*axes)]


# domain


def domain_violations(points: Iterable) -> Iterator[dict]:
    pts = sorted(set(point(p) for p in points))
    present = set(pts)
    for a, b in combinations(pts, 2):
        m, j = meet(a, b), join(a, b)
        if m not in present or j not in present:
            yield {"p": a, "p2": b, "meet": m, "join": j,
                   "missing": [x for x in (("meet", m), ("join", j)) if x[1] not in present][0][0]}


def validate_domain(Q: FiniteCorrespondence | Iterable) -> Verdict:
    pts = Q.domain if isinstance(Q, FiniteCorrespondence) else Q
    return _first("sublattice_domain", domain_violations(pts))


def require_sublattice(Q: FiniteCorrespondence) -> None:
    v = validate_domain(Q)
    if not v.holds:
        w = v.witness
        raise DomainError(
            f"domain is not a sublattice: {w['missing']} of {list(map(fmt, w['p']))} and "
            f"{list(map(fmt, w['p2']))} is missing"
        )


# substitutes


def _ugs_bounds(p, p2, q, q2, strong: bool) -> tuple[Point, Point]:
    lo, hi = [], []
    for pz, p2z, qz, q2z in zip(p, p2, q, q2):
        if pz < p2z:
            lo.append(qz)
            hi.append(q2z)
        elif p2z < pz:
            lo.append(q2z)
            hi.append(qz)
        elif strong:
            lo.append(max(qz, q2z))
            hi.append(min(qz, q2z))
        else:
            lo.append(qz)
            hi.append(q2z)
    return tuple(lo), tuple(hi)


def ugs_tuple(Q: FiniteCorrespondence, p, p2, q, q2, strong: bool = False) -> dict | None:
    """Check one (p, p2, q, q2) tuple. Returns None when witnesses exist."""
    p, p2, q, q2 = point(p), point(p2), point(q), point(q2)
    m, j = meet(p, p2), join(p, p2)
    if m not in Q.images or j not in Q.images:
        raise DomainError("meet or join outside the grid")
    lo, hi = _ugs_bounds(p, p2, q, q2, strong)
    qm = next((x for x in Q.image(m) if leq(lo, x)), None)
    qj = next((x for x in Q.image(j) if leq(x, hi)), None)
    if qm is not None and qj is not None:
        return None
    missing = "both" if qm is None and qj is None else ("q_meet" if qm is None else "q_join")
    return {"p": p, "p2": p2, "q": q, "q2": q2, "meet": m, "join": j,
            "lower_bound": lo, "upper_bound": hi, "missing": missing}


def _ugs_violations(Q: FiniteCorrespondence, strong: bool) -> Iterator[dict]:
    up_cache: dict = {}
    down_cache: dict = {}
    for p in Q.domain:
        for p2 in Q.domain:
            m, j = meet(p, p2), join(p, p2)
            if m not in Q.images or j not in Q.images:
                raise DomainError("meet or join outside the grid")
            Qm, Qj = Q.image(m), Q.image(j)
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    lo, hi = _ugs_bounds(p, p2, q, q2, strong)
                    key = (m, lo)
                    ok_m = up_cache.get(key)
                    if ok_m is None:
                        ok_m = up_cache[key] = any(leq(lo, x) for x in Qm)
                    key = (j, hi)
                    ok_j = down_cache.get(key)
                    if ok_j is None:
                        ok_j = down_cache[key] = any(leq(x, hi) for x in Qj)
                    if not (ok_m and ok_j):
                        missing = "both" if not (ok_m or ok_j) else ("q_meet" if not ok_m else "q_join")
                        yield {"p": p, "p2": p2, "q": q, "q2": q2, "meet": m, "join": j,
                               "lower_bound": lo, "upper_bound": hi, "missing": missing}


def _kc_violations(Q: FiniteCorrespondence) -> Iterator[dict]:
    for p in Q.domain:
        for p2 in Q.domain:
            if not leq(p2, p):
                continue
            same = [z for z in range(Q.dim) if p[z] == p2[z]]
            for q in Q.image(p):
                if not any(all(q2[z] >= q[z] for z in same) for q2 in Q.image(p2)):
                    yield {"p": p, "p2": p2, "q": q, "equal_coords": same}


def _ps_violations(Q: FiniteCorrespondence) -> Iterator[dict]:
    # pairs with no unchanged price are skipped: the condition is about the
    # goods whose price stays put, and there are none
    for p in Q.domain:
        for p2 in Q.domain:
            if not leq(p, p2):
                continue
            same = [z for z in range(Q.dim) if p[z] == p2[z]]
            if not same:
                continue
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    if all(q2[z] > q[z] for z in same):
                        yield {"p": p, "p2": p2, "q": q, "q2": q2, "equal_coords": same}


def _wgs_violations(Q: FiniteCorrespondence) -> Iterator[dict]:
    if not Q.is_point_valued():
        raise InputError("wgs_function needs a point-valued correspondence")
    for p in Q.domain:
        qp = Q.value(p)
        for p2 in Q.domain:
            if p == p2 or not leq(p2, p):
                continue
            qp2 = Q.value(p2)
            for i in range(Q.dim):
                if p[i] == p2[i] and qp[i] > qp2[i]:
                    yield {"p": p, "p2": p2, "q": qp, "q2": qp2, "z": i}


def substitutes_violations(Q: FiniteCorrespondence, notion: str) -> Iterator[dict]:
    require_sublattice(Q)
    if notion == "ugs":
        return _ugs_violations(Q, False)
    if notion == "ugs_strong_antecedent":
        return _ugs_violations(Q, True)
    if notion == "kelso_crawford":
        return _kc_violations(Q)
    if notion == "polterovich_spivak":
        return _ps_violations(Q)
    if notion == "wgs_function":
        if not Q.is_point_valued():
            raise InputError("wgs_function needs a point-valued correspondence")
        return _wgs_violations(Q)
    raise InputError(f"unknown substitutes notion {notion!r}")


def check_substitutes(Q: FiniteCorrespondence, notion: str = "ugs") -> Verdict:
    return _first(notion, substitutes_violations(Q, notion))


# monotonicity


def _comparable_pairs(Q: FiniteCorrespondence):
    """(p, p2) with p >= p2, scan order."""
    for p in Q.domain:
        for p2 in Q.domain:
            if leq(p2, p):
                yield p, p2


def _semipositive_lt(q, q2) -> bool:
    return q != q2 and leq(q, q2)


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Gaussian elimination over the rationals; None when singular."""
    n = len(A)
    M = [row[:] + [bi] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c] / M[c][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def positive_weights(rows: Sequence[Sequence[Fraction]], n: int) -> tuple | None:
    """Find k with every k_z >= 1 and r.k >= 0 for each row r, or None.

    The feasible set contains no line, so if it is nonempty it has a vertex.
    Vertices are enumerated directly: some rows are tight, the matching
    number of coordinates are free, and the rest sit at 1.
    """
    rows = [tuple(rat(x) for x in r) for r in rows]
    ones = tuple(Fraction(1) for _ in range(n))

    def ok(k):
        return all(x >= 1 for x in k) and all(dot(r, k) >= 0 for r in rows)

    if ok(ones):
        return ones
    for t in range(1, min(len(rows), n) + 1):
        for tight in combinations(rows, t):
            for free in combinations(range(n), t):
                fixed = [z for z in range(n) if z not in free]
                A = [[r[z] for z in free] for r in tight]
                b = [-sum((r[z] for z in fixed), Fraction(0)) for r in tight]
                sol = _solve_exact(A, b)
                if sol is None:
                    continue
                k = list(ones)
                for z, v in zip(free, sol):
                    k[z] = v
                k = tuple(k)
                if ok(k):
                    return k
    return None


def weighted_certificate(Q: FiniteCorrespondence, p, p2, q, q2) -> dict | None:
    """Return {k, q_meet, q_join} certifying weighted monotonicity for one tuple."""
    p, p2, q, q2 = point(p), point(p2), point(q), point(q2)
    m, j = meet(p, p2), join(p, p2)
    for qm in Q.image(m):
        for qj in Q.image(j):
            rows = [tuple(a - b for a, b in zip(q, qm)), tuple(a - b for a, b in zip(qj, q2))]
            k = positive_weights(rows, Q.dim)
            if k is not None:
                return {"k": k, "q_meet": qm, "q_join": qj}
    return None


def weights_certify(q, q_meet, q_join, q2, k) -> bool:
    k = point(k)
    if any(x <= 0 for x in k):
        raise InputError("weights must be strictly positive")
    q, q_meet, q_join, q2 = map(point, (q, q_meet, q_join, q2))
    return dot(k, q) >= dot(k, q_meet) and dot(k, q_join) >= dot(k, q2)


def _monotonicity_violations(Q: FiniteCorrespondence, prop: str, k) -> Iterator[dict]:
    if prop in ("nonreversing", "strongly_nonreversing", "p_correspondence"):
        for p, p2 in _comparable_pairs(Q):
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    if not leq(q, q2):
                        continue
                    if prop == "nonreversing":
                        if q not in Q.images[p2] or q2 not in Q.images[p]:
                            yield {"p": p, "p2": p2, "q": q, "q2": q2}
                    elif p != p2:
                        yield {"p": p, "p2": p2, "q": q, "q2": q2}
    elif prop == "constant_aggregate_output":
        for p, q in Q.graph():
            if dot(k, q) != 0:
                yield {"p": p, "q": q, "k": k, "value": dot(k, q)}
    elif prop == "monotone_total_output":
        for p, p2 in _comparable_pairs(Q):
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    if sum(q) < sum(q2):
                        yield {"p": p, "p2": p2, "q": q, "q2": q2}
    elif prop == "aggregate_monotonicity":
        for p, p2 in _comparable_pairs(Q):
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    if _semipositive_lt(q, q2):
                        yield {"p": p, "p2": p2, "q": q, "q2": q2}
    elif prop == "weighted_monotonicity":
        for p in Q.domain:
            for p2 in Q.domain:
                for q in Q.image(p):
                    for q2 in Q.image(p2):
                        if weighted_certificate(Q, p, p2, q, q2) is None:
                            yield {"p": p, "p2": p2, "q": q, "q2": q2}
    elif prop == "walras":
        for p, q in Q.graph():
            if dot(p, q) != 0:
                yield {"p": p, "q": q, "value": dot(p, q)}
    elif prop == "bgh3":
        for p, p2 in _comparable_pairs(Q):
            if p == p2:
                continue
            B = [z for z in range(Q.dim) if p[z] == p2[z]]
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    if not leq(q, q2):
                        continue
                    if -sum(q) < -sum(q2):
                        continue
                    if any(q[z] < q2[z] for z in B):
                        continue
                    yield {"p": p, "p2": p2, "q": q, "q2": q2, "B": B}
    else:
        raise InputError(f"unknown monotonicity property {prop!r}")


def monotonicity_violations(Q: FiniteCorrespondence, prop: str, k=None) -> Iterator[dict]:
    require_sublattice(Q)
    if prop == "constant_aggregate_output":
        k = point(k) if k is not None else tuple(Fraction(1) for _ in range(Q.dim))
        if len(k) != Q.dim or any(x <= 0 for x in k):
            raise InputError("constant_aggregate_output needs a strictly positive k of length N")
    return _monotonicity_violations(Q, prop, k)


def check_monotonicity(Q: FiniteCorrespondence, prop: str, k=None) -> Verdict:
    return _first(prop, monotonicity_violations(Q, prop, k))


def check_property(Q: FiniteCorrespondence, prop: str, k=None) -> Verdict:
    """Dispatch on any substitutes or monotonicity property name."""
    if prop in SUBSTITUTES_NOTIONS:
        return check_substitutes(Q, prop)
    if prop in MONOTONICITY_PROPERTIES:
        return check_monotonicity(Q, prop, k)
    raise InputError(f"unknown property {prop!r}")


# transforms


def monetize(Q: FiniteCorrespondence) -> FiniteCorrespondence:
    if any(x < 0 for p in Q.domain for x in p):
        raise InputError("monetize needs nonnegative prices")
    return FiniteCorrespondence(
        Q.dim, {p: frozenset(tuple(a * b for a, b in zip(p, q)) for q in qs) for p, qs in Q.images.items()}
    )


def aggregate(Q1: FiniteCorrespondence, Q2: FiniteCorrespondence, lam=1, mu=1) -> FiniteCorrespondence:
    lam, mu = rat(lam), rat(mu)
    if lam < 0 or mu < 0:
        raise InputError("aggregation weights must be nonnegative")
    if Q1.dim != Q2.dim or set(Q1.domain) != set(Q2.domain):
        raise InputError("aggregate needs identical domains")
    return FiniteCorrespondence(
        Q1.dim,
        {
            p: frozenset(add(scale(lam, a), scale(mu, b)) for a in Q1.images[p] for b in Q2.images[p])
            for p in Q1.domain
        },
    )


def extend_outside_good(Q: FiniteCorrespondence, k=None, p0=(1,)) -> FiniteCorrespondence:
    """Append good 0 as the last coordinate: q0 = p0 - k.q, price p0.

    `p0` may be a single value or a sequence of values (a chain of outside prices).
    """
    k = point(k) if k is not None else tuple(Fraction(1) for _ in range(Q.dim))
    if len(k) != Q.dim or any(x <= 0 for x in k):
        raise InputError("outside-good weights must be strictly positive")
    p0s = [rat(p0)] if not isinstance(p0, (list, tuple)) else [rat(x) for x in p0]
    images = {}
    for p, qs in Q.images.items():
        for v in p0s:
            images[p + (v,)] = frozenset(q + (v - dot(k, q),) for q in qs)
    return FiniteCorrespondence(Q.dim + 1, images)


def transform(Q: FiniteCorrespondence, op: str, **kw) -> FiniteCorrespondence:
    if op == "monetize":
        return monetize(Q)
    if op == "aggregate":
        return aggregate(Q, kw["other"], kw.get("lam", 1), kw.get("mu", 1))
    if op == "extend_outside_good":
        return extend_outside_good(Q, kw.get("k"), kw.get("p0", (1,)))
    raise InputError(f"unknown transform {op!r}")


def orient_demand(Q: FiniteCorrespondence) -> FiniteCorrespondence:
    """Flip quantity signs so a demand correspondence can be fed to the supply-side checkers."""
    return FiniteCorrespondence(Q.dim, {p: frozenset(tuple(-x for x in q) for q in qs) for p, qs in Q.images.items()})


# taxonomy


@dataclass(frozen=True)
class Taxonomy:
    ugs: bool
    nonreversing: bool
    point_valued: bool
    inverse_point_valued: bool
    label: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def label_for(ugs: bool, nonreversing: bool, pv: bool, ipv: bool) -> str:
    if not (ugs and nonreversing):
        return "none"
    if pv and ipv:
        return "M-function"
    if pv:
        return "M0-function"
    if ipv:
        return "M-correspondence"
    return "M0-correspondence"


def classify(Q: FiniteCorrespondence) -> Taxonomy:
    u = check_substitutes(Q, "ugs").holds
    nr = check_monotonicity(Q, "nonreversing").holds
    pv, ipv = Q.is_point_valued(), Q.is_inverse_point_valued()
    return Taxonomy(u, nr, pv, ipv, label_for(u, nr, pv, ipv))


def linear_map(M: Sequence[Sequence], grid: Iterable, offset=None) -> FiniteCorrespondence:
    """Point-valued p -> M p (+ offset) on a grid."""
    M = [[rat(x) for x in row] for row in M]
    b = point(offset) if offset is not None else tuple(Fraction(0) for _ in M)
    return FiniteCorrespondence.from_function(
        grid, lambda p: tuple(dot(row, p) + bi for row, bi in zip(M, b))
    )
