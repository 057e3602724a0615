from fractions import Fraction

import pytest

from app.api.services import ifunctions
from app.api.services.catalogue import D3_CHAIN, family_model
from app.api.services.fixed_points import FixedPoint, distinguished_point, enumerate_fixed_points, generic_point
from app.api.services.ifunctions import (
    EffectivityFilter,
    Layout,
    building_block_I,
    building_block_I_dual,
    default_box,
    effectivity_prune,
    fiber_factor,
    lefschetz_factor,
    orientation,
    restricted_quiver_I,
    restricted_series,
    select_point,
)
from app.core.errors import FamilyError, SeriesError, UsageError

LAMBDAS = {"lambda1": Fraction(3, 11), "lambda2": Fraction(-5, 7)}


def _at(family, ranks, seed=0, truncation=3):
    return generic_point(family_model(family, ranks).parameter_names(), seed, truncation)


def test_block_q1_coefficient():
    point = FixedPoint.make("GrBlock", (1, 2, 0), {1: (1,)})
    series = restricted_quiver_I(point, LAMBDAS, ((0, 1),))
    expected = 1 / (LAMBDAS["lambda1"] - LAMBDAS["lambda2"] + 1)
    assert series.coefficient((0,)) == 1
    assert series.coefficient((1,)) == expected
    assert building_block_I(1, 2, 0, point, LAMBDAS, ((0, 1),)).coefficient((1,)) == expected


def test_dual_block_inverse_coefficient():
    point = FixedPoint.make("GrBlockDual", (1, 2, 0), {1: (2,)})
    expected = 1 / (LAMBDAS["lambda1"] - LAMBDAS["lambda2"] + 1)
    explicit = building_block_I_dual(1, 2, 0, point, LAMBDAS, ((-1, 0),))
    assert explicit.coefficient((0,)) == 1
    assert explicit.coefficient((-1,)) == expected
    assert restricted_quiver_I(point, LAMBDAS, ((-1, 0),)) == explicit


@pytest.mark.parametrize("ranks", [(1, 2, 0), (1, 3, 1), (2, 3, 1), (2, 4, 2), (1, 2, 2)])
def test_block_formulas_match_the_quiver_sum(ranks):
    at = _at("GrBlock", ranks)
    for point in enumerate_fixed_points("GrBlock", ranks):
        box = ((0, 3),)
        assert restricted_quiver_I(point, at, box) == building_block_I(*ranks, point, at, box)
    for point in enumerate_fixed_points("GrBlockDual", ranks):
        box = ((-3, 0),)
        assert restricted_quiver_I(point, at, box) == building_block_I_dual(*ranks, point, at, box)


def test_fiber_factor_at_degree_one():
    etas = [Fraction(1, 3), Fraction(2, 5)]
    lam = Fraction(-1, 2)
    assert fiber_factor(lam, etas, 1) == (etas[0] - lam) * (etas[1] - lam)
    assert fiber_factor(lam, etas, 0) == 1


@pytest.mark.parametrize("family", D3_CHAIN)
def test_degree_zero_coefficient_is_one(family):
    ranks = (2, 2, 3, 4)
    point = distinguished_point(family, ranks)
    series = restricted_quiver_I(point, _at(family, ranks), default_box(point, 1))
    assert series.coefficient((0, 0, 0)) == 1


def test_degree_zero_coefficient_on_the_star():
    ranks = (1, 1, 2, 2, 3, 2, 2, 3, 3)
    for family in ("Xs", "Zs"):
        point = distinguished_point(family, ranks)
        series = restricted_quiver_I(point, _at(family, ranks), default_box(point, 1))
        assert series.coefficient((0,) * 7) == 1


def test_pruning_does_not_change_coefficients():
    ranks = (2, 2, 3, 4)
    at = _at("X0", ranks)
    for point in enumerate_fixed_points("X0", ranks)[:6]:
        box = default_box(point, 1)
        assert restricted_quiver_I(point, at, box) == restricted_quiver_I(point, at, box, prune=False)


@pytest.mark.slow
def test_pruning_does_not_change_coefficients_at_radius_two():
    ranks = (2, 2, 3, 4)
    at = _at("X0", ranks)
    for point in enumerate_fixed_points("X0", ranks):
        box = default_box(point, 2)
        assert restricted_quiver_I(point, at, box) == restricted_quiver_I(point, at, box, prune=False)


def test_unpruned_walk_visits_the_vanishing_degrees(monkeypatch):
    calls = {"count": 0}
    original = ifunctions._factor_value

    def counting(*args):
        calls["count"] += 1
        return original(*args)

    monkeypatch.setattr(ifunctions, "_factor_value", counting)
    ranks = (2, 3, 1)
    at = _at("GrBlock", ranks)
    point = enumerate_fixed_points("GrBlock", ranks)[0]
    box = ((0, 2),)

    pruned = restricted_quiver_I(point, at, box)
    pruned_calls = calls["count"]
    calls["count"] = 0
    unpruned = restricted_quiver_I(point, at, box, prune=False)
    assert unpruned == pruned
    assert calls["count"] > pruned_calls


def test_unpruned_block_sum_matches_the_explicit_formula():
    ranks = (2, 4, 2)
    at = _at("GrBlock", ranks)
    box = ((0, 2),)
    for point in enumerate_fixed_points("GrBlock", ranks):
        assert restricted_quiver_I(point, at, box, prune=False) == building_block_I(*ranks, point, at, box)


def test_widening_the_domain_keeps_box_coefficients():
    ranks = (2, 2, 3, 4)
    point = distinguished_point("Z1", ranks)
    at = _at("Z1", ranks)
    box = default_box(point, 1)
    wider = restricted_quiver_I(point, at, box, widen=1)
    assert wider.restrict(box) == restricted_quiver_I(point, at, box)


def test_effectivity_filter_examples():
    point = FixedPoint.make("GrBlock", (1, 2, 0), {1: (1,)})
    f = EffectivityFilter.for_layout(Layout(family_model("GrBlock", (1, 2, 0)), point))
    assert effectivity_prune([0], f)
    assert effectivity_prune([3], f)


def test_lefschetz_factor_is_one_at_degree_zero():
    ranks = (2, 2, 3, 4)
    point = distinguished_point("Z1", ranks)
    assert lefschetz_factor(point, _at("Z1", ranks), {}) == 1
    assert lefschetz_factor(distinguished_point("X0", ranks), _at("X0", ranks), {}) == 1


def test_orientation_of_the_block():
    assert orientation(FixedPoint.make("GrBlock", (1, 2, 0), {1: (1,)})) == (1,)
    assert default_box(FixedPoint.make("GrBlock", (1, 2, 0), {1: (1,)}), 2) == ((0, 2),)


def test_box_must_match_the_variables():
    point = distinguished_point("X0", (2, 2, 3, 4))
    with pytest.raises(SeriesError):
        restricted_quiver_I(point, _at("X0", (2, 2, 3, 4)), ((0, 1),))


def test_non_fixed_point_is_rejected():
    bad = FixedPoint.make("GrBlock", (1, 2, 0), {1: (3,)})
    with pytest.raises(FamilyError):
        restricted_quiver_I(bad, LAMBDAS, ((0, 1),))


def test_select_point():
    assert select_point("GrBlock", (1, 3, 0), 2).labels == ((3,),)
    assert select_point("GrBlock", (1, 3, 0), subsets=[[2]]).labels == ((2,),)
    with pytest.raises(UsageError):
        select_point("GrBlock", (1, 3, 0), 3)


def test_restricted_series_payload():
    payload = restricted_series("X0", (2, 2, 3, 4), 0, radius=1, seed=0)
    terms = {tuple(t["e"]): t["c"] for t in payload["series"]["terms"]}
    assert terms[(0, 0, 0)] == "1/1"
    assert payload["point"]["subsets"] == [[1, 2], [1, 2], [1, 2, 3]]
    assert payload["parameters"]["seed"] == 0
    assert payload == restricted_series("X0", (2, 2, 3, 4), 0, radius=1, seed=0)
