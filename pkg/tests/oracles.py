"""Brute-force reference implementations, written from the definitions and kept apart from the package.

Every function here takes plain dicts and tuples so that nothing in the
package under test is reused on the oracle side.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import chain, combinations, permutations, product


def _meet(a, b):
    return tuple(min(x, y) for x, y in zip(a, b))


def _join(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def _le(a, b):
    return all(x <= y for x, y in zip(a, b))


def _subsets(n):
    return chain.from_iterable(combinations(range(n), k) for k in range(n + 1))


# correspondences, as dict price -> set of quantities


def ugs(Q: dict, strong_antecedent: bool = False) -> bool:
    """Literal reading: for every (p, p', q, q') find one q_meet and one q_join satisfying both implications."""
    for p, p2 in product(Q, Q):
        m, j = _meet(p, p2), _join(p, p2)
        for q, q2 in product(Q[p], Q[p2]):
            found = False
            for qm, qj in product(Q[m], Q[j]):
                ok = True
                for z in range(len(p)):
                    if p[z] <= p2[z] and not (q[z] <= qm[z] and qj[z] <= q2[z]):
                        ok = False
                    second = p2[z] <= p[z] if strong_antecedent else p2[z] < p[z]
                    if second and not (q2[z] <= qm[z] and qj[z] <= q[z]):
                        ok = False
                if ok:
                    found = True
                    break
            if not found:
                return False
    return True


def kelso_crawford(Q: dict) -> bool:
    for p, p2 in product(Q, Q):
        if not _le(p2, p):
            continue
        for q in Q[p]:
            if not any(all(q2[z] >= q[z] for z in range(len(p)) if p[z] == p2[z]) for q2 in Q[p2]):
                return False
    return True


def nonreversing(Q: dict) -> bool:
    for p, p2 in product(Q, Q):
        if not _le(p2, p):
            continue
        for q, q2 in product(Q[p], Q[p2]):
            if _le(q, q2) and not (q in Q[p2] and q2 in Q[p]):
                return False
    return True


def strongly_nonreversing(Q: dict) -> bool:
    for p, p2 in product(Q, Q):
        if not _le(p2, p) or p == p2:
            continue
        for q, q2 in product(Q[p], Q[p2]):
            if _le(q, q2):
                return False
    return True


def totally_isotone_inverse(Q: dict) -> bool:
    """Enumerates every coordinate subset B, as the definition is stated."""
    n = len(next(iter(Q)))
    for p, p2 in product(Q, Q):
        for q, q2 in product(Q[p], Q[p2]):
            for B in _subsets(n):
                if all(p[z] <= p2[z] for z in B) and all(q[z] <= q2[z] for z in range(n) if z not in B):
                    if q not in Q[_meet(p, p2)] or q2 not in Q[_join(p, p2)]:
                        return False
                    break
    return True


def inverse_point_valued(Q: dict) -> bool:
    seen = {}
    for p, qs in Q.items():
        for q in qs:
            if q in seen and seen[q] != p:
                return False
            seen[q] = p
    return True


def submodular(f: dict) -> bool:
    return all(f[_meet(a, b)] + f[_join(a, b)] <= f[a] + f[b] for a, b in product(f, f))


def argmax_table(points, cost, grid) -> dict:
    out = {}
    for p in grid:
        vals = [sum(a * b for a, b in zip(p, q)) - cost[q] for q in points]
        best = max(vals)
        out[p] = {q for q, v in zip(points, vals) if v == best}
    return out


# flows


def min_cost_integer_flow(nodes, arcs: dict, q: dict):
    """Exhaustive minimum over integer flows with every arc at most the total supply.

    arcs maps (x, y) -> cost; q is inflow minus outflow per node. Returns None
    when no integer flow meets q. Dynamic programming over (arc index, partial
    divergence) visits every integer flow implicitly.
    """
    arc_list = list(arcs)
    bound = sum(v for v in q.values() if v > 0)
    idx = {z: i for i, z in enumerate(nodes)}
    target = tuple(q.get(z, 0) for z in nodes)
    last_use = {}
    for k, (x, y) in enumerate(arc_list):
        last_use[x] = k
        last_use[y] = k
    closes = [[z for z in nodes if last_use.get(z, -1) == k] for k in range(len(arc_list))]
    isolated = [z for z in nodes if z not in last_use]
    if any(q.get(z, 0) != 0 for z in isolated):
        return None

    @lru_cache(maxsize=None)
    def best(k, div):
        if k == len(arc_list):
            return 0 if div == target else None
        x, y = arc_list[k]
        out = None
        for f in range(bound + 1):
            d = list(div)
            d[idx[x]] -= f
            d[idx[y]] += f
            if any(d[idx[z]] != target[idx[z]] for z in closes[k]):
                continue
            rest = best(k + 1, tuple(d))
            if rest is None:
                continue
            val = f * arcs[(x, y)] + rest
            if out is None or val < out:
                out = val
        return out

    return best(0, tuple(0 for _ in nodes))


def simple_paths(arcs, src, dst):
    adj = {}
    for x, y in arcs:
        adj.setdefault(x, []).append(y)
    stack = [(src, [src])]
    while stack:
        node, path = stack.pop()
        if node == dst:
            yield path
            continue
        for nxt in adj.get(node, []):
            if nxt not in path:
                stack.append((nxt, path + [nxt]))


def latest_departure(arcs: dict, origin, dest, p_d):
    """Max over simple origin-destination paths of the composed connection maps; None if unreachable."""
    best = None
    for path in simple_paths(arcs, origin, dest):
        v = p_d
        for x, y in reversed(list(zip(path, path[1:]))):
            v = arcs[(x, y)](v)
        if best is None or v > best:
            best = v
    return best


def piecewise(points):
    """Plain linear interpolation through sorted (x, y) points."""
    pts = sorted(points)

    def f(v):
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x0 <= v <= x1:
                return y0 + (y1 - y0) * (v - x0) / (x1 - x0)
        raise ValueError("outside table")

    return f


# matching


def ntu_stable_matchings(men, women, alpha, alpha0, gamma, gamma0):
    """All stable one-to-one matchings, as dicts man -> woman or None."""
    out = []
    options = list(women) + [None] * len(men)
    seen = set()
    for perm in permutations(options, len(men)):
        if perm in seen:
            continue
        seen.add(perm)
        assign = dict(zip(men, perm))
        taken = [w for w in perm if w is not None]
        if len(taken) != len(set(taken)):
            continue
        partner = {w: m for m, w in assign.items() if w is not None}
        u = {m: alpha0[m] if assign[m] is None else alpha[(m, assign[m])] for m in men}
        v = {w: gamma0[w] if w not in partner else gamma[(partner[w], w)] for w in women}
        if any(u[m] < alpha0[m] for m in men) or any(v[w] < gamma0[w] for w in women):
            continue
        if any(alpha[(m, w)] > u[m] and gamma[(m, w)] > v[w] for m in men for w in women):
            continue
        out.append((assign, tuple(v[w] for w in women)))
    return out


def assignment_optimum(workers, firms, surplus: dict, singles: bool) -> Fraction:
    """Best total surplus over one-to-one assignments; unmatched agents earn zero."""
    best = None
    if singles:
        options = list(firms) + [None] * len(workers)
    else:
        options = list(firms)
    for perm in permutations(options, len(workers)):
        taken = [f for f in perm if f is not None]
        if len(taken) != len(set(taken)):
            continue
        if not singles and len(taken) != len(firms):
            continue
        total = sum((surplus[(w, f)] for w, f in zip(workers, perm) if f is not None), Fraction(0))
        if best is None or total > best:
            best = total
    return best


def tu_blocking_pairs(u: dict, v: dict, surplus: dict):
    return [(x, y) for (x, y), s in surplus.items() if s > u[x] + v[y]]
