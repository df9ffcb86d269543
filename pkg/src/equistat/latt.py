"""Inverse correspondences, inverse isotonicity and solution-set structure."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .corr import (
    FiniteCorrespondence,
    Verdict,
    _first,
    check_monotonicity,
    check_substitutes,
    require_sublattice,
)
from .errors import DomainError, EquistatError, InputError
from .rat import Point, join, leq, meet, point, rat

INVERSE_PROPERTIES = ("totally_isotone", "sso_isotone", "sublattice_fibers", "point_valued")


def invert(Q: FiniteCorrespondence) -> FiniteCorrespondence:
    """Transpose the graph: q -> {p : q in Q(p)}.

    The quantity set need not be a sublattice; nothing here assumes it is.
    """
    fibers: dict = {}
    for p, q in Q.graph():
        fibers.setdefault(q, set()).add(p)
    return FiniteCorrespondence(Q.dim, {q: frozenset(ps) for q, ps in fibers.items()})


def fibers(Q: FiniteCorrespondence) -> dict:
    return {q: tuple(sorted(ps)) for q, ps in invert(Q).images.items()}


def _need(Q: FiniteCorrespondence, x: Point) -> None:
    if x not in Q.images:
        raise DomainError(f"domain not meet/join complete for witness: {x} missing")


def _isotone_violations(Q: FiniteCorrespondence, total: bool) -> Iterator[dict]:
    for p in Q.domain:
        for p2 in Q.domain:
            m, j = meet(p, p2), join(p, p2)
            _need(Q, m)
            _need(Q, j)
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    if total:
                        # some B works iff every coordinate is covered by one side
                        ok = all(a <= b or c <= d for a, b, c, d in zip(p, p2, q, q2))
                    else:
                        ok = leq(q, q2)
                    if not ok:
                        continue
                    in_m, in_j = q in Q.images[m], q2 in Q.images[j]
                    if not (in_m and in_j):
                        B = [z for z in range(Q.dim) if p[z] <= p2[z]]
                        yield {"p": p, "p2": p2, "q": q, "q2": q2, "meet": m, "join": j, "B": B,
                               "missing": "q not in Q(meet)" if not in_m else "q2 not in Q(join)"}


def _fiber_violations(Q: FiniteCorrespondence) -> Iterator[dict]:
    for q, ps in sorted(fibers(Q).items()):
        present = set(ps)
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                for name, x in (("meet", meet(a, b)), ("join", join(a, b))):
                    if x not in present:
                        yield {"q": q, "p": a, "p2": b, name: x}
                        break


def _pv_violations(Q: FiniteCorrespondence) -> Iterator[dict]:
    for q, ps in sorted(fibers(Q).items()):
        if len(ps) > 1:
            yield {"q": q, "p": ps[0], "p2": ps[1]}


def inverse_violations(Q: FiniteCorrespondence, prop: str) -> Iterator[dict]:
    require_sublattice(Q)
    if prop == "totally_isotone":
        return _isotone_violations(Q, True)
    if prop == "sso_isotone":
        return _isotone_violations(Q, False)
    if prop == "sublattice_fibers":
        return _fiber_violations(Q)
    if prop == "point_valued":
        return _pv_violations(Q)
    raise InputError(f"unknown inverse property {prop!r}")


def check_inverse(Q: FiniteCorrespondence, prop: str) -> Verdict:
    return _first(prop, inverse_violations(Q, prop))


def _inverse_isotone_pv_violations(Q: FiniteCorrespondence) -> Iterator[dict]:
    """q in Q(p), q2 in Q(p2), q <= q2 must force p <= p2."""
    for p in Q.domain:
        for p2 in Q.domain:
            for q in Q.image(p):
                for q2 in Q.image(p2):
                    if leq(q, q2) and not leq(p, p2):
                        yield {"p": p, "p2": p2, "q": q, "q2": q2}


def check_inverse_isotone_point_valued(Q: FiniteCorrespondence) -> Verdict:
    require_sublattice(Q)
    return _first("inverse_point_valued_isotone", _inverse_isotone_pv_violations(Q))


@dataclass(frozen=True)
class PartialInverse:
    coords: tuple
    fixed: dict
    fibers: Mapping  # q_X -> frozenset of p_X

    def to_correspondence(self) -> FiniteCorrespondence:
        if not self.coords:
            raise InputError("empty coordinate set has no correspondence form")
        return FiniteCorrespondence(len(self.coords), dict(self.fibers))


def partial_inverse(Q: FiniteCorrespondence, X: Sequence[int], fixed: Mapping[int, object]) -> tuple[PartialInverse, Verdict]:
    """q_X -> {p_X : some q_{X^c} completes q_X inside Q(p_X, fixed)}, plus its sso verdict."""
    X = tuple(sorted(set(X)))
    comp = [z for z in range(Q.dim) if z not in X]
    if any(z < 0 or z >= Q.dim for z in X):
        raise InputError("coordinate out of range")
    fixed = {int(z): rat(v) for z, v in fixed.items()}
    if sorted(fixed) != comp:
        raise InputError("fixed values must cover exactly the complement of X")
    slice_ = [p for p in Q.domain if all(p[z] == fixed[z] for z in comp)]
    if not slice_:
        raise InputError("no grid point matches the fixed prices")
    fib: dict = {}
    for p in slice_:
        pX = tuple(p[z] for z in X)
        for q in Q.image(p):
            fib.setdefault(tuple(q[z] for z in X), set()).add(pX)
    pinv = PartialInverse(X, fixed, {k: frozenset(v) for k, v in fib.items()})

    def gen():
        keys = sorted(pinv.fibers)
        for a in keys:
            for b in keys:
                if not leq(a, b):
                    continue
                for pa in sorted(pinv.fibers[a]):
                    for pb in sorted(pinv.fibers[b]):
                        m, j = meet(pa, pb), join(pa, pb)
                        if m not in pinv.fibers[a] or j not in pinv.fibers[b]:
                            yield {"qX": a, "qX2": b, "pX": pa, "pX2": pb, "meet": m, "join": j}

    return pinv, _first("partial_inverse_sso_isotone", gen())


@dataclass(frozen=True)
class EquivalenceReport:
    ugs: bool
    nonreversing: bool
    totally_isotone_inverse: bool
    strongly_nonreversing: bool
    inverse_point_valued_isotone: bool
    inverse_point_valued: bool
    theorem1_consistent: bool
    theorem2_consistent: bool
    notes: tuple = ()

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["notes"] = list(self.notes)
        return d


class ConsistencyError(EquistatError):
    """Two checkers disagree where a proven equivalence says they cannot."""


def equivalence_suite(Q: FiniteCorrespondence, strict: bool = True) -> EquivalenceReport:
    u = check_substitutes(Q, "ugs").holds
    nr = check_monotonicity(Q, "nonreversing").holds
    ti = check_inverse(Q, "totally_isotone").holds
    snr = check_monotonicity(Q, "strongly_nonreversing").holds
    ipv = Q.is_inverse_point_valued()
    iso = check_inverse_isotone_point_valued(Q).holds and ipv
    m_corr = u and nr and ipv
    t1 = (not u) or (nr == ti)
    t2 = (not u) or (m_corr == iso == snr)
    notes = []
    if not u:
        notes.append("ugs fails: the equivalences are not in force on this instance")
    rep = EquivalenceReport(u, nr, ti, snr, iso, ipv, t1, t2, tuple(notes))
    if strict and not (t1 and t2):
        raise ConsistencyError(f"checker disagreement under ugs: {rep.to_dict()}")
    return rep


@dataclass(frozen=True)
class SolutionSets:
    target: Point
    subsolutions: frozenset
    supersolutions: frozenset
    solutions: frozenset
    join_closed: Verdict
    meet_closed: Verdict
    max_subsolution: Point | None
    coincidence: Verdict

    def to_dict(self) -> dict:
        from .rat import fmt_point

        return {
            "target": fmt_point(self.target),
            "subsolutions": [fmt_point(p) for p in sorted(self.subsolutions)],
            "supersolutions": [fmt_point(p) for p in sorted(self.supersolutions)],
            "solutions": [fmt_point(p) for p in sorted(self.solutions)],
            "max_subsolution": fmt_point(self.max_subsolution) if self.max_subsolution else None,
            "join_closed": self.join_closed.to_dict(),
            "meet_closed": self.meet_closed.to_dict(),
            "coincidence": self.coincidence.to_dict(),
        }


def _closure(points: Sequence, op, name: str) -> Iterator[dict]:
    present = set(points)
    pts = sorted(present)
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            x = op(a, b)
            if x not in present:
                yield {"p": a, "p2": b, name: x}


def solution_sets(Q: FiniteCorrespondence, target=None) -> SolutionSets:
    t = point(target) if target is not None else tuple(Fraction(0) for _ in range(Q.dim))
    if len(t) != Q.dim:
        raise InputError("target has the wrong dimension")
    sub = frozenset(p for p in Q.domain if any(leq(q, t) for q in Q.image(p)))
    sup = frozenset(p for p in Q.domain if any(leq(t, q) for q in Q.image(p)))
    sol = frozenset(p for p in Q.domain if t in Q.images[p])

    ugs = check_substitutes(Q, "ugs").holds
    if ugs:
        jc = _first("subsolutions_join_closed", _closure(sub, join, "join"))
        mc = _first("supersolutions_meet_closed", _closure(sup, meet, "meet"))
    else:
        jc = Verdict("subsolutions_join_closed", True, None, "ugs fails", applicable=False)
        mc = Verdict("supersolutions_meet_closed", True, None, "ugs fails", applicable=False)

    top = None
    maximal = [p for p in sub if not any(p != r and leq(p, r) for r in sub)]
    if len(maximal) == 1:
        top = maximal[0]

    m0 = ugs and check_monotonicity(Q, "nonreversing").holds
    if not m0:
        co = Verdict("max_subsolution_is_solution", True, None, "not an M0 instance", applicable=False)
    elif not sol or top is None:
        co = Verdict("max_subsolution_is_solution", True, None,
                     "no solution or no maximal subsolution", applicable=False)
    else:
        ok = top in sol and all(leq(s, top) for s in sol)
        co = Verdict("max_subsolution_is_solution", ok,
                     None if ok else {"max_subsolution": top, "solutions": sorted(sol)})
    return SolutionSets(t, sub, sup, sol, jc, mc, top, co)
