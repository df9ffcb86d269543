import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from equistat.errors import DomainError, InputError
from equistat.fixtures import demo_hedonic, demo_ntu, demo_tu
from equistat.flow import Additive, Affine, Tabulated, verify_equilibrium
from equistat.latt import ConsistencyError
from equistat.markets import (
    RESERVE,
    HedonicMarket,
    ItuMarket,
    Matching,
    MonotoneMap,
    NtuMarket,
    check_stability_itu,
    check_stability_ntu,
    compose_transfer,
    decreasing_inverse_connection,
    flow_to_matching,
    gale_shapley,
    hedonic_solve,
    hedonic_to_flow,
    itu_payoffs,
    itu_solve,
    itu_to_flow,
    lattice_closure,
    ntu_correspondence,
    ntu_excess_supply,
    ntu_m0_check,
    ntu_payoffs,
    ntu_reconstruct,
    ntu_solve,
    payoff_prices,
    strong_set_order,
    verify_hedonic,
)
from equistat.rat import join, meet, point
from generators import random_affine_itu, random_ntu, random_tu


# transfer maps


def test_affine_map_and_inverse():
    f = MonotoneMap.affine(2, 1)
    assert f(3) == 7 and f.inverse(7) == 3 and f.increasing


def test_tabulated_map():
    f = MonotoneMap(points=((0, 10), (2, 6), (4, 0)))
    assert not f.increasing
    assert f(1) == 8 and f.inverse(3) == 3
    with pytest.raises(DomainError):
        f(5)


def test_map_validation():
    with pytest.raises(InputError):
        MonotoneMap.affine(0, 1)
    with pytest.raises(InputError):
        MonotoneMap(points=((0, 0), (1, 1), (2, 0)))
    with pytest.raises(InputError):
        MonotoneMap(points=((0, 0),))
    with pytest.raises(InputError):
        MonotoneMap()


def test_map_dict_round_trip():
    for f in (MonotoneMap.affine(F(1, 3), -2), MonotoneMap(points=((0, 1), (1, 3)))):
        assert MonotoneMap.from_dict(f.to_dict()) == f


def test_compose_tu_is_additive():
    # U = w + 2, V = 3 - w: the worker gets 5 + p when the firm keeps -p
    G = compose_transfer(MonotoneMap.affine(1, 2), MonotoneMap.affine(-1, 3))
    assert isinstance(G, Additive) and G(F(1)) == 6


def test_compose_affine_slope():
    G = compose_transfer(MonotoneMap.affine(2, 0), MonotoneMap.affine(-1, 0))
    assert isinstance(G, Affine) and G(F(1)) == 2


def test_compose_tabulated_matches_pointwise():
    U = MonotoneMap(points=((0, 0), (2, 4), (4, 5)))
    V = MonotoneMap.affine(-1, 6)
    G = compose_transfer(U, V)
    assert isinstance(G, Tabulated)
    for w in (F(0), F(1), F(3), F(4)):
        assert G(-V(w)) == U(w)


def test_compose_rejects_wrong_monotonicity():
    with pytest.raises(InputError):
        compose_transfer(MonotoneMap.affine(-1, 0), MonotoneMap.affine(-1, 0))


def test_decreasing_inverse_connection():
    G = decreasing_inverse_connection(MonotoneMap.affine(-1, 5))
    # s(p) = 5 - p, so s^{-1}(-v) = 5 + v
    assert G(F(-2)) == 3


# TU / ITU


def test_demo_tu_prices_and_stability():
    m = demo_tu()
    out = itu_solve(m)
    match = flow_to_matching(m, out)
    assert {k for k, v in match.mu.items() if v} == {("x1", "y1"), ("x2", "y2")}
    assert check_stability_itu(m, match).holds
    u, v = payoff_prices(m, out.p)
    total = sum(u.values()) + sum(v.values())
    assert total == 5


def test_tu_singles_leave_bad_pairs_unmatched():
    m = ItuMarket.tu({"x": 1}, {"y": 1}, {("x", "y"): -3}, {("x", "y"): 1}, True)
    match = flow_to_matching(m, itu_solve(m))
    assert match.mu[("x", RESERVE)] == 1 and match.mu[(RESERVE, "y")] == 1
    assert check_stability_itu(m, match).holds


def test_tu_requires_balance_without_singles():
    with pytest.raises(InputError):
        ItuMarket.tu({"x": 1}, {"y": 2}, {("x", "y"): 0}, {("x", "y"): 0})


def test_itu_market_validation():
    U = {("x", "y"): MonotoneMap.affine(1, 0)}
    with pytest.raises(InputError):
        ItuMarket({"x": 1}, {"y": 1}, U, {("x", "y"): MonotoneMap.affine(1, 0)})
    with pytest.raises(InputError):
        ItuMarket({"x": 1}, {"x": 1}, U, U)
    with pytest.raises(InputError):
        ItuMarket({"x": -1}, {"y": 1}, U, {("x", "y"): MonotoneMap.affine(-1, 0)}, True)
    with pytest.raises(InputError):
        ItuMarket({"x": 1}, {"y": 1}, {}, {}, True)


def test_surplus_only_for_tu():
    m = random_affine_itu(random.Random(1), 2, 2)
    if not m.is_tu():
        with pytest.raises(InputError):
            m.surplus(("x0", "y0"))


def test_stability_detects_blocking_pair():
    m = demo_tu()
    swapped = Matching({("x1", "y2"): F(1), ("x2", "y1"): F(1)}, {("x1", "y2"): F(0), ("x2", "y1"): F(0)})
    v = check_stability_itu(m, swapped)
    assert not v.holds and "blocking_pair" in v.witness


def test_stability_detects_infeasibility_and_missing_wage():
    m = demo_tu()
    assert "feasibility" in check_stability_itu(m, Matching({("x1", "y1"): F(1)}, {("x1", "y1"): F(0)})).witness
    both = Matching({("x1", "y1"): F(1), ("x2", "y2"): F(1)}, {("x1", "y1"): F(0)})
    assert "missing_wage" in check_stability_itu(m, both).witness


def test_itu_payoffs_one_wage_per_pair():
    m = ItuMarket.tu({"x": 2}, {"y": 2}, {("x", "y"): 1}, {("x", "y"): 1})
    match = Matching({("x", "y"): F(2)}, {("x", "y"): F(0)})
    assert itu_payoffs(m, match)[2] == []


def test_itu_payoffs_flag_unequal_treatment():
    pairs = {("x", "y1"): 0, ("x", "y2"): 0}
    m = ItuMarket.tu({"x": 2}, {"y1": 1, "y2": 1}, pairs, pairs)
    match = Matching({("x", "y1"): F(1), ("x", "y2"): F(1)}, {("x", "y1"): F(0), ("x", "y2"): F(1)})
    assert itu_payoffs(m, match)[2][0]["type"] == "x"
    assert "unequal_treatment" in check_stability_itu(m, match).witness


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_tu_surplus_matches_assignment_oracle(seed):
    rng = random.Random(seed)
    singles = rng.random() < 0.5
    nw = rng.randint(1, 3)
    m = random_tu(rng, nw, rng.randint(1, 3) if singles else nw, singles)
    out = itu_solve(m)
    assert verify_equilibrium(itu_to_flow(m), out).holds
    match = flow_to_matching(m, out)
    assert check_stability_itu(m, match).holds
    surplus = {k: m.surplus(k) for k in m.U}
    total = sum((v * surplus[k] for k, v in out.mu.items() if k in surplus), F(0))
    assert total == oracles.assignment_optimum(list(m.workers), list(m.firms), surplus, singles)
    u, v, _ = itu_payoffs(m, match)
    assert not oracles.tu_blocking_pairs(u, v, surplus)


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_affine_itu_outcomes_are_stable(seed):
    rng = random.Random(seed)
    m = random_affine_itu(rng, rng.randint(1, 3), rng.randint(1, 3))
    match = flow_to_matching(m, itu_solve(m))
    assert check_stability_itu(m, match).holds


# NTU


def test_demo_ntu_two_stable_outcomes():
    m = demo_ntu()
    outs = ntu_solve(m)
    assert [o.v for o in outs] == [point((1, 1)), point((2, 2))]
    assert all(check_stability_ntu(m, o.matching).holds for o in outs)


def test_gale_shapley_extremes_on_demo():
    m = demo_ntu()
    assert tuple(ntu_payoffs(m, gale_shapley(m, "men"))[1].values()) == (1, 1)
    assert tuple(ntu_payoffs(m, gale_shapley(m, "women"))[1].values()) == (2, 2)
    with pytest.raises(InputError):
        gale_shapley(m, "firms")


def test_excess_supply_signs():
    m = demo_ntu()
    # B's cutoff is above both men's offers, so both pick A and B stays idle
    z = ntu_excess_supply(m, {"A": 0, "B": 3})
    assert z == {"A": -2, "B": 1}


def test_ntu_rejects_ties():
    with pytest.raises(InputError):
        NtuMarket(("a",), ("A", "B"), {("a", "A"): 1, ("a", "B"): 1}, {"a": 0},
                  {("a", "A"): 1, ("a", "B"): 1}, {"A": 0, "B": 0})
    with pytest.raises(InputError):
        NtuMarket(("a",), ("A",), {("a", "A"): 1}, {"a": 1}, {("a", "A"): 1}, {"A": 0})


def test_ntu_rejects_missing_utilities():
    with pytest.raises(InputError):
        NtuMarket(("a",), ("A",), {}, {"a": 0}, {("a", "A"): 1}, {"A": 0})


def test_ntu_stability_checks_partner_structure():
    m = demo_ntu()
    with pytest.raises(InputError):
        check_stability_ntu(m, Matching({("a", "A"): F(1), ("b", "A"): F(1)}))
    v = check_stability_ntu(m, Matching({("a", RESERVE): F(1), ("b", RESERVE): F(1),
                                         (RESERVE, "A"): F(1), (RESERVE, "B"): F(1)}))
    assert not v.holds and "blocking_pair" in v.witness


def test_ntu_m0_check_demo():
    v = ntu_m0_check(demo_ntu())
    assert v.holds
    Q = ntu_correspondence(demo_ntu())
    assert Q.is_point_valued()


def test_zero_set_can_exceed_stable_payoffs():
    # two zeros of the excess supply map reconstruct the same stable matching;
    # only (4,5,5) is the payoff vector the matching delivers
    m = random_ntu(random.Random(3), 3, 3)
    outs = ntu_solve(m)
    assert {o.v for o in outs} == {point((3, 5, 5)), point((4, 5, 5))}
    pairs = {frozenset(k for k, v in o.matching.mu.items() if v) for o in outs}
    assert len(pairs) == 1
    brute = oracles.ntu_stable_matchings(m.men, m.women, m.alpha, m.alpha0, m.gamma, m.gamma0)
    assert [v for _, v in brute] == [point((4, 5, 5))]


def _assign(match):
    return frozenset((x, None if y == RESERVE else y) for (x, y), v in match.mu.items() if v and x != RESERVE)


@settings(max_examples=60)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4))
def test_ntu_matches_brute_force(seed, nm, nw):
    m = random_ntu(random.Random(seed), nm, nw)
    outs = ntu_solve(m)
    brute = oracles.ntu_stable_matchings(m.men, m.women, m.alpha, m.alpha0, m.gamma, m.gamma0)
    assert {_assign(o.matching) for o in outs} == {frozenset(a.items()) for a, _ in brute}
    vs = {v for _, v in brute}
    assert vs <= {o.v for o in outs}
    for v in vs:
        assert ntu_reconstruct(m, dict(zip(m.women, v))).mu
    men = tuple(ntu_payoffs(m, gale_shapley(m, "men"))[1][y] for y in m.women)
    assert men == tuple(min(v[j] for v in vs) for j in range(nw))
    women = tuple(ntu_payoffs(m, gale_shapley(m, "women"))[1][y] for y in m.women)
    assert women == tuple(max(v[j] for v in vs) for j in range(nw))


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_ntu_m0_on_small_markets(seed):
    rng = random.Random(seed)
    m = random_ntu(rng, rng.randint(1, 3), rng.randint(1, 2))
    assert ntu_m0_check(m).holds


# hedonic


def test_demo_hedonic_price():
    m = demo_hedonic()
    h = hedonic_solve(m)
    assert h.p == {"w": 5} and h.u == {"x": 4} and h.v == {"y": 0}
    assert verify_hedonic(m, h.p, h.mu).holds
    assert h.node_prices()[RESERVE] == 0 and h.node_prices()["y"] == 0


def test_hedonic_below_clearing_price_fails():
    m = demo_hedonic()
    mu = {("x", "w"): F(1), ("w", "y"): F(1), (RESERVE, "y"): F(1)}
    v = verify_hedonic(m, {"w": 4}, mu)
    assert not v.holds and "hed3_consumer_idle_with_rent" in v.witness


def test_hedonic_quality_balance_target():
    m = demo_hedonic()
    h = hedonic_solve(m)
    assert not verify_hedonic(m, h.p, h.mu, q={"w": 1}).holds


def test_hedonic_validation():
    with pytest.raises(InputError):
        HedonicMarket({"x": 1}, {"y": 1}, ("w",), {("x", "w"): MonotoneMap.affine(-1, 0)},
                      {("y", "w"): MonotoneMap.affine(-1, 5)})
    with pytest.raises(InputError):
        HedonicMarket({"x": 1}, {"x": 1}, ("w",), {}, {})
    with pytest.raises(InputError):
        HedonicMarket({"x": 1}, {"y": 1}, ("w",), {("q", "w"): MonotoneMap.affine(1, 0)}, {})


def test_hedonic_flow_shape():
    prob = hedonic_to_flow(demo_hedonic())
    assert prob.fixed == {RESERVE: 0}
    assert prob.q["x"] == -1 and prob.q["y"] == 2 and prob.q[RESERVE] == -1


# lattice helpers


def test_lattice_closure_and_failure():
    pts = [point((0, 1)), point((1, 0))]
    assert lattice_closure(pts, lambda p: True).holds
    v = lattice_closure(pts, lambda p: False)
    assert not v.holds and ("meet" in v.witness or "join" in v.witness)


def test_strong_set_order():
    lo = [point((0, 0)), point((1, 0))]
    hi = [point((1, 1)), point((2, 1))]
    in_lo = lambda p: p in lo
    in_hi = lambda p: p in hi
    assert strong_set_order(lo, hi, in_lo, in_hi).holds
    assert not strong_set_order(hi, lo, in_hi, in_lo).holds


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=6))
def test_closure_of_a_lattice_is_clean(raw):
    pts = {point(p) for p in raw}
    # close the set, then every meet and join is a member
    changed = True
    while changed:
        new = {f(a, b) for a in pts for b in pts for f in (meet, join)} - pts
        changed = bool(new)
        pts |= new
    assert lattice_closure(pts, lambda p: p in pts).holds


def test_consistency_error_never_raised_on_demo():
    try:
        ntu_solve(demo_ntu())
    except ConsistencyError:  # pragma: no cover
        pytest.fail("a zero reconstructed an unstable matching")
