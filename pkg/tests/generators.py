"""Seeded random instance builders shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction as F
from itertools import product

from equistat.conv import DiscreteProducer, argmax_correspondence
from equistat.corr import FiniteCorrespondence, check_substitutes, linear_map, product_grid
from equistat.flow import Additive, Affine, Network, Tabulated, feasible_prices, sample_equilibrium_correspondence
from equistat.markets import ItuMarket, MonotoneMap, NtuMarket


def as_dict(Q: FiniteCorrespondence) -> dict:
    return {p: set(qs) for p, qs in Q.images.items()}


def random_producer(rng: random.Random, dim: int, max_points: int = 20) -> DiscreteProducer:
    cube = list(product(range(3), repeat=dim))
    k = rng.randint(1, min(max_points, len(cube)))
    pts = rng.sample(cube, k)
    return DiscreteProducer.from_lists(pts, [F(rng.randint(0, 12), rng.choice((1, 2))) for _ in pts])


def random_grid_producer(rng: random.Random, dim: int) -> DiscreteProducer:
    """Quantities form a full product of per-axis value sets."""
    axes = [sorted(rng.sample(range(3), rng.randint(1, 3))) for _ in range(dim)]
    pts = list(product(*axes))
    return DiscreteProducer.from_lists(pts, [F(rng.randint(0, 10)) for _ in pts])


def random_z_matrix(rng: random.Random, dim: int) -> list:
    """Positive diagonal, nonpositive off-diagonal: the point map p -> Mp has weak gross substitutes."""
    return [[F(rng.randint(1, 5)) if i == j else F(-rng.randint(0, 3)) for j in range(dim)] for i in range(dim)]


def random_wgs_function(rng: random.Random, dim: int) -> FiniteCorrespondence:
    return linear_map(random_z_matrix(rng, dim), product_grid((0, 1, 2), dim))


def random_network(rng: random.Random, n_nodes: int, n_arcs: int, mixed: bool = True, dag: bool = False) -> Network:
    nodes = tuple(f"n{i}" for i in range(n_nodes))
    pairs = [(a, b) for a in nodes for b in nodes if a != b and (not dag or a < b)]
    arcs = rng.sample(pairs, min(n_arcs, len(pairs)))
    conn = {}
    for a in arcs:
        kind = rng.choice(("additive", "affine", "tabulated")) if mixed else "additive"
        if kind == "additive":
            conn[a] = Additive(F(rng.randint(-3, 3)))
        elif kind == "affine":
            conn[a] = Affine(F(rng.choice((1, 2, 3)), rng.choice((1, 2))), F(rng.randint(-3, 3)))
        else:
            conn[a] = random_tabulated(rng, -20, 20)
    return Network(nodes, tuple(arcs), conn)


def random_tabulated(rng: random.Random, lo: int, hi: int, progress: bool = False) -> Tabulated:
    """Strictly increasing piecewise-linear map on [lo, hi]; with `progress`, G(p) < p throughout."""
    xs = sorted({lo, hi, *(rng.randint(lo + 1, hi - 1) for _ in range(rng.randint(1, 3)))})
    ys = []
    for x in xs:
        if progress:
            # G(x) = x - delay(x), with delay slope bounded so G stays increasing
            ys.append(F(x) - F(rng.randint(1, 4)))
        else:
            ys.append(F(x) * F(rng.randint(1, 3), 2) + F(rng.randint(-2, 2)))
    if not progress:
        ys = sorted(ys)
        for i in range(1, len(ys)):
            if ys[i] <= ys[i - 1]:
                ys[i] = ys[i - 1] + 1
    else:
        for i in range(1, len(ys)):
            if ys[i] <= ys[i - 1]:
                ys[i] = ys[i - 1] + F(1, 2)
                if ys[i] >= xs[i]:
                    ys[i] = (ys[i - 1] + xs[i]) / 2
    return Tabulated(tuple((F(x), y) for x, y in zip(xs, ys)))


def sampled_correspondence(rng: random.Random, n_nodes: int, n_arcs: int, levels: int, cap: int):
    """A flow-sampled correspondence, or None when every grid price violates the no-rent condition."""
    net = random_network(rng, n_nodes, n_arcs)
    lv = sorted(rng.sample(range(-3, 4), levels))
    grid = product_grid(lv, n_nodes)
    keep, _ = feasible_prices(net, grid)
    if not keep:
        return None
    return net, sample_equilibrium_correspondence(net, keep, cap)


def ugs_pool(seed: int = 0, size: int = 200) -> list:
    """Finite correspondences passing unified gross substitutes, from three sources."""
    rng = random.Random(seed)
    pool = []
    tries = 0
    while len(pool) < size and tries < 20 * size:
        tries += 1
        src = tries % 3
        if src == 0:
            dim = rng.choice((2, 3))
            Q = argmax_correspondence(random_producer(rng, dim, 8), product_grid((0, 1, 2), dim))
        elif src == 1:
            Q = random_wgs_function(rng, rng.choice((2, 3)))
        else:
            got = sampled_correspondence(rng, 3, rng.randint(2, 4), 2, 1)
            if got is None:
                continue
            Q = got[1]
        if check_substitutes(Q, "ugs").holds:
            pool.append(Q)
    return pool


def random_ntu(rng: random.Random, n_men: int, n_women: int) -> NtuMarket:
    men = tuple(f"m{i}" for i in range(n_men))
    women = tuple(f"w{j}" for j in range(n_women))
    alpha, alpha0, gamma, gamma0 = {}, {}, {}, {}
    for x in men:
        vals = rng.sample(range(-n_women - 2, n_women + 3), n_women + 1)
        for y, v in zip(women, vals):
            alpha[(x, y)] = v
        alpha0[x] = vals[-1]
    for y in women:
        vals = rng.sample(range(-n_men - 2, n_men + 3), n_men + 1)
        for x, v in zip(men, vals):
            gamma[(x, y)] = v
        gamma0[y] = vals[-1]
    return NtuMarket(men, women, alpha, alpha0, gamma, gamma0)


def random_tu(rng: random.Random, n_workers: int, n_firms: int, singles: bool) -> ItuMarket:
    workers = {f"x{i}": 1 for i in range(n_workers)}
    firms = {f"y{j}": 1 for j in range(n_firms)}
    alpha = {(x, y): rng.randint(-2, 6) for x in workers for y in firms}
    gamma = {(x, y): rng.randint(-2, 6) for x in workers for y in firms}
    return ItuMarket.tu(workers, firms, alpha, gamma, singles)


def random_affine_itu(rng: random.Random, n_workers: int, n_firms: int) -> ItuMarket:
    workers = {f"x{i}": 1 for i in range(n_workers)}
    firms = {f"y{j}": 1 for j in range(n_firms)}
    U = {(x, y): MonotoneMap.affine(F(rng.randint(1, 3)), rng.randint(-2, 4)) for x in workers for y in firms}
    V = {(x, y): MonotoneMap.affine(-F(rng.randint(1, 3)), rng.randint(-2, 4)) for x in workers for y in firms}
    return ItuMarket(workers, firms, U, V, True)
