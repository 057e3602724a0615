from fractions import Fraction

import numpy as np
import pytest

from app.api.services.series import (
    AffineForm,
    BinomialUnit,
    KahlerMap,
    LaurentSeries,
    Prefactor,
    binomial,
    expand_prefactor,
    inv_sfr,
    mul,
    sfr,
    substitute,
)
from app.core.errors import InsufficientBoxError, PoleError, SeriesError

X = Fraction(3, 7)


def test_sfr_examples():
    assert sfr(X, 0) == 1
    assert sfr(X, 2) == (X + 1) * (X + 2)
    assert sfr(X, -2) == 1 / (X * (X - 1))


def test_sfr_pole_is_an_error():
    with pytest.raises(PoleError):
        sfr(0, -1)
    with pytest.raises(PoleError):
        sfr(2, -3)


def test_sfr_vanishing_numerator_is_exact_zero():
    assert sfr(-2, 3) == 0
    assert inv_sfr(2, -3) == 0


def test_sfr_telescoping_on_random_rationals():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = Fraction(int(rng.integers(-500, 500)), int(rng.integers(1, 97)) * 2 + 1) + Fraction(1, 2)
        a = int(rng.integers(-5, 6))
        assert sfr(x, a + 1) == sfr(x, a) * (x + a + 1)
        assert sfr(x, a) * inv_sfr(x, a) == 1


def test_binomial_generalized():
    assert binomial(Fraction(1, 2), 2) == Fraction(-1, 8)
    assert binomial(-1, 3) == -1
    assert binomial(4, 5) == 0


BOX = ((-3, 3),)


def q(e, c=1):
    return LaurentSeries.monomial(("q",), BOX, (e,), c)


def test_mul_examples():
    one = LaurentSeries.one(("q",), BOX)
    b = q(1, 2) + q(-2, Fraction(1, 3))
    assert mul(one, b) == b
    assert mul(q(1), q(-1)) == one
    product = mul(one + q(1), one - q(1))
    assert product == one - q(2)


def test_mul_truncates_to_box():
    assert mul(q(2), q(2)).is_zero()


def _random_series(rng, box):
    terms = {}
    for _ in range(5):
        e = tuple(int(rng.integers(lo, hi + 1)) for lo, hi in box)
        terms[e] = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 9)))
    return LaurentSeries(("q1", "q2"), box, terms)


def test_mul_commutative_and_associative():
    rng = np.random.default_rng(11)
    box = ((-2, 2), (0, 2))
    for _ in range(20):
        a, b, c = (_random_series(rng, box) for _ in range(3))
        assert a * b == b * a
        assert mul(a, b, c) == mul(c, a, b)
        assert mul(a, b, c) == mul(b, c, a)


def test_nested_products_agree_on_one_signed_boxes():
    rng = np.random.default_rng(12)
    box = ((0, 3), (-2, 0))
    for _ in range(20):
        a, b, c = (_random_series(rng, box) for _ in range(3))
        assert (a * b) * c == a * (b * c) == mul(a, b, c)


def test_flat_product_keeps_terms_that_return_to_the_box():
    box = ((-2, 2),)
    q2 = LaurentSeries.monomial(("q",), box, (2,))
    q_2 = LaurentSeries.monomial(("q",), box, (-2,))
    assert mul(q2, q2, q_2) == q2
    assert mul(q_2, q2, q2) == q2
    assert ((q2 * q2) * q_2).is_zero()


def test_mul_box_must_sit_inside_the_factors():
    with pytest.raises(SeriesError):
        mul(q(1), q(1), box=((-4, 4),))
    assert mul(q(1), q(1), box=((0, 1),)).is_zero()


def test_box_mismatch_raises():
    with pytest.raises(SeriesError):
        q(0) + LaurentSeries.one(("q",), ((0, 3),))


def test_series_json_is_sorted():
    s = q(2, Fraction(-1, 2)) + q(-1, 3)
    payload = s.to_json()
    assert payload == {
        "vars": ["q"],
        "box": [[-3, 3]],
        "terms": [{"e": [-1], "c": "3/1"}, {"e": [2], "c": "-1/2"}],
    }
    assert LaurentSeries.from_json(payload) == s


def test_expand_exponential():
    c = Fraction(5, 3)
    p = Prefactor(exp_terms=((c, 0),))
    s = expand_prefactor(p, {}, ((0, 4),), ("q",))
    assert s[(2,)] == c * c / 2
    back = expand_prefactor(Prefactor(exp_terms=((-c, 0),)), {}, ((0, 4),), ("q",))
    assert mul(s, back) == LaurentSeries.one(("q",), ((0, 4),))


def test_expand_binomial_unit():
    e = AffineForm.of(1, {"lambda1": 1, "lambda2": -1})
    at = {"lambda1": Fraction(7, 3), "lambda2": Fraction(1, 5)}
    p = Prefactor(unit_terms=((BinomialUnit(0, 1), e),))
    s = expand_prefactor(p, at, ((0, 3),), ("q",))
    E = e.evaluate(at)
    assert s[(2,)] == E * (E - 1) / 2


def test_expand_geometric_series():
    p = Prefactor(unit_terms=((BinomialUnit(0, -1), AffineForm.of(-1)),))
    s = expand_prefactor(p, {}, ((0, 5),), ("q",))
    assert all(s[(n,)] == 1 for n in range(6))


def test_substitute_inversion():
    m = KahlerMap.from_rows(("q",), ("q",), ({"q": -1},))
    s = substitute(q(-2), m, BOX)
    assert s == q(2)


def test_substitute_with_unit():
    m = KahlerMap.from_rows(
        ("q1", "q3"), ("q1", "q3"), ({"q1": 1}, {"q3": 1}), units=[("q3", 1)], unit_powers=[(1,), (0,)]
    )
    box = ((0, 1), (0, 1))
    s = LaurentSeries.monomial(("q1", "q3"), ((0, 1), (-1, 1)), (1, 0))
    out = substitute(s, m, box)
    assert out.box == box
    assert out.terms == {(1, 0): 1, (1, 1): 1}


def test_substitute_needs_the_unit_slack_below_the_box():
    m = KahlerMap.from_rows(("q",), ("q",), ({"q": 1},), units=[("q", 1)], unit_powers=[(1,)])
    s = LaurentSeries.one(("q",), ((0, 2),))
    with pytest.raises(InsufficientBoxError):
        substitute(s, m, ((0, 2),))
    assert substitute(s, m, ((0, 2),), slack=0).terms == {(0,): 1}


def test_terms_below_the_box_reach_it_through_the_unit():
    # q -> q / (1 - q): q^-1 becomes q^-1 - 1
    m = KahlerMap.from_rows(("q",), ("q",), ({"q": 1},), units=[("q", -1)], unit_powers=[(-1,)])
    s = LaurentSeries.monomial(("q",), ((-1, 2),), (-1,))
    assert substitute(s, m, ((0, 2),), slack=1).terms == {(0,): -1}
    with pytest.raises(InsufficientBoxError):
        substitute(s.restrict(((0, 2),)), m, ((0, 2),), slack=1)


def test_substitute_needs_enough_source_box():
    m = KahlerMap.from_rows(("q1", "q2"), ("q1", "q2"), ({"q1": 1, "q2": 1}, {"q2": 1}))
    s = LaurentSeries.one(("q1", "q2"), ((0, 1), (0, 1)))
    with pytest.raises(InsufficientBoxError):
        substitute(s, m, ((0, 3), (0, 3)))


def test_substitute_is_a_monoid_action():
    names = ("q1", "q2")
    m1 = KahlerMap.from_rows(names, names, ({"q1": -1}, {"q2": 1, "q1": 1}))
    m2 = KahlerMap.from_rows(names, names, ({"q1": 1, "q2": 1}, {"q2": -1}))
    composed = m1.then(m2)
    box = ((-2, 2), (-2, 2))
    big = ((-10, 10), (-10, 10))
    s = LaurentSeries(names, big, {(1, 0): 2, (0, 1): Fraction(1, 3), (-1, 1): 5, (2, -1): -1})
    stepwise = substitute(substitute(s, m1, ((-4, 4), (-4, 4))), m2, box)
    assert stepwise == substitute(s, composed, box)


def test_kahler_map_singular_is_rejected():
    with pytest.raises(SeriesError):
        KahlerMap.from_rows(("q1", "q2"), ("q1", "q2"), ({"q1": 1, "q2": 1}, {"q1": 2, "q2": 2}))


def test_kahler_map_inverse_round_trip():
    names = ("q1", "q2", "q3")
    m = KahlerMap.from_rows(names, names, ({"q2": 1}, {"q1": -1}, {"q3": -1, "q2": -1}), signs=(1, -1, 1))
    assert m.then(m.inverse()).is_identity
    assert m.inverse().then(m).is_identity


def test_unit_maps_cannot_be_inverted():
    m = KahlerMap.from_rows(("q1",), ("q1",), ({"q1": 1},), units=[("q1", 1)], unit_powers=[(1,)])
    assert not m.is_unit_free
    with pytest.raises(SeriesError):
        m.inverse()
