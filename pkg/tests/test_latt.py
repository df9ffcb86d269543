from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

import oracles
from equistat.corr import FiniteCorrespondence, check_substitutes, product_grid
from equistat.errors import DomainError, InputError
from equistat.fixtures import fixture
from equistat.latt import (
    ConsistencyError,
    check_inverse,
    check_inverse_isotone_point_valued,
    equivalence_suite,
    fibers,
    invert,
    inverse_violations,
    partial_inverse,
    solution_sets,
)
from equistat.rat import point
from generators import as_dict


def corr(rows):
    return FiniteCorrespondence(len(next(iter(rows))), {point(p): frozenset(point(q) for q in qs) for p, qs in rows.items()})


def P(*xs):
    return point(xs)


def test_invert_swaps_graph():
    Q = corr({(0,): [(1,)], (1,): [(1,), (2,)]})
    inv = invert(Q)
    assert inv.images == {P(1): {P(0), P(1)}, P(2): {P(1)}}


def test_fibers_sorted():
    Q = corr({(0,): [(1,)], (1,): [(1,)]})
    assert fibers(Q) == {P(1): (P(0), P(1))}


def test_invert_twice_recovers_graph():
    Q = fixture("b1_simplex_argmax").obj
    assert set(invert(invert(Q)).graph()) == set(Q.graph())


def test_a3_totally_isotone_fails_at_paper_point():
    Q = fixture("a3_kelso_crawford").obj
    assert not check_inverse(Q, "totally_isotone").holds
    hits = [w for w in inverse_violations(Q, "totally_isotone")
            if w["q"] == P(0, -1, -1, 0) and w["missing"] == "q not in Q(meet)"]
    assert hits


def test_a2_sum_has_no_totally_isotone_inverse():
    Q = fixture("a2_sum_m0").obj
    assert check_substitutes(Q, "ugs").holds
    v = check_inverse(Q, "totally_isotone")
    assert not v.holds and v.witness["B"] is not None


def test_topkis_inverse_is_isotone():
    Q = fixture("a6_topkis_not_ugs").obj
    assert not check_substitutes(Q, "ugs").holds
    assert check_inverse(Q, "sso_isotone").holds
    assert check_inverse_isotone_point_valued(Q).holds


def test_identity_inverse_point_valued():
    Q = FiniteCorrespondence.from_function(product_grid((0, 1, 2), 2), lambda p: p)
    for prop in ("point_valued", "sublattice_fibers", "totally_isotone", "sso_isotone"):
        assert check_inverse(Q, prop).holds, prop


def test_constant_fiber_is_whole_grid():
    Q = FiniteCorrespondence.from_function(product_grid((0, 1), 2), lambda p: (0, 0))
    assert check_inverse(Q, "sublattice_fibers").holds
    assert not check_inverse(Q, "point_valued").holds


def test_fiber_not_sublattice():
    Q = corr({(0, 0): [(1, 1)], (0, 1): [(0, 0)], (1, 0): [(0, 0)], (1, 1): [(1, 1)]})
    v = check_inverse(Q, "sublattice_fibers")
    assert not v.holds and v.witness["q"] == P(0, 0)


def test_unknown_inverse_property():
    with pytest.raises(InputError):
        check_inverse(fixture("b1_simplex_argmax").obj, "monotone")


def test_inverse_check_requires_sublattice():
    with pytest.raises(DomainError):
        check_inverse(corr({(0, 1): [(0, 0)], (1, 0): [(0, 0)]}), "totally_isotone")


# partial inverse


def test_partial_inverse_identity():
    Q = FiniteCorrespondence.from_function(product_grid((0, 1), 2), lambda p: p)
    pinv, v = partial_inverse(Q, [0], {1: 1})
    assert pinv.fibers == {P(0): {P(0)}, P(1): {P(1)}}
    assert v.holds
    assert pinv.to_correspondence().dim == 1


def test_partial_inverse_bad_fixed():
    Q = FiniteCorrespondence.from_function(product_grid((0, 1), 2), lambda p: p)
    with pytest.raises(InputError):
        partial_inverse(Q, [0], {})
    with pytest.raises(InputError):
        partial_inverse(Q, [0], {1: 7})
    with pytest.raises(InputError):
        partial_inverse(Q, [5], {0: 0, 1: 0})


def test_partial_inverse_decreasing_fails():
    Q = FiniteCorrespondence.from_function(product_grid((0, 1), 2), lambda p: (-p[0], p[1]))
    _, v = partial_inverse(Q, [0], {1: 0})
    assert not v.holds


# equivalence suite


def test_equivalence_suite_kettle():
    rep = equivalence_suite(fixture("b2_kettle").obj)
    assert rep.ugs and rep.nonreversing and rep.totally_isotone_inverse
    assert rep.theorem1_consistent and rep.theorem2_consistent


def test_equivalence_suite_non_ugs_note():
    rep = equivalence_suite(fixture("a3_kelso_crawford").obj)
    assert not rep.ugs and rep.notes
    assert rep.to_dict()["notes"] == list(rep.notes)


def test_consistency_error_is_library_error():
    from equistat.errors import EquistatError, InputError as IE

    assert issubclass(ConsistencyError, EquistatError) and not issubclass(ConsistencyError, IE)


# solution sets


def test_solution_sets_identity():
    Q = FiniteCorrespondence.from_function(product_grid((-1, 0, 1), 2), lambda p: p)
    s = solution_sets(Q)
    assert s.solutions == {P(0, 0)}
    assert s.max_subsolution == P(0, 0)
    assert s.join_closed.holds and s.meet_closed.holds
    assert s.coincidence.holds and s.coincidence.applicable


def test_solution_sets_target_dimension():
    with pytest.raises(InputError):
        solution_sets(fixture("b1_simplex_argmax").obj, (0, 0, 0))


def test_solution_sets_not_applicable_without_ugs():
    s = solution_sets(fixture("a3_kelso_crawford").obj)
    assert not s.join_closed.applicable
    assert s.to_dict()["target"] == ["0", "0", "0", "0"]


# oracle agreement

GRID = [tuple(F(x) for x in p) for p in ((0, 0), (0, 1), (1, 0), (1, 1))]
QPTS = [tuple(F(x) for x in q) for q in ((0, 0), (0, 1), (1, 0), (1, 1), (2, 1))]

set_valued = st.lists(st.sets(st.sampled_from(QPTS), min_size=1, max_size=2), min_size=4, max_size=4).map(
    lambda imgs: FiniteCorrespondence(2, {p: frozenset(i) for p, i in zip(GRID, imgs)}))


@given(set_valued)
def test_totally_isotone_matches_subset_enumeration(Q):
    assert check_inverse(Q, "totally_isotone").holds == oracles.totally_isotone_inverse(as_dict(Q))


@given(set_valued)
def test_point_valued_inverse_matches_oracle(Q):
    assert check_inverse(Q, "point_valued").holds == oracles.inverse_point_valued(as_dict(Q))


@given(set_valued)
def test_invert_is_involution_on_graph(Q):
    assert set(invert(invert(Q)).graph()) == set(Q.graph())


@given(set_valued)
def test_totally_isotone_implies_sso(Q):
    if check_inverse(Q, "totally_isotone").holds:
        assert check_inverse(Q, "sso_isotone").holds


@given(set_valued)
def test_equivalence_suite_never_inconsistent(Q):
    # strict mode raises on any disagreement under ugs
    equivalence_suite(Q, strict=True)
