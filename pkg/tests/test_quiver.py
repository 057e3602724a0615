import json
from fractions import Fraction

import numpy as np
import pytest

from app.api.services.catalogue import D3_SEQUENCE, catalogue_quiver
from app.api.services.quiver import (
    Arrow,
    CycleWord,
    KahlerCase,
    Node,
    Quiver,
    canonical_rotation,
    conjecture_kahler_map,
    emit_quiver,
    incoming,
    kahler_map_for,
    matrix_mutation,
    mutate,
    mutate_sequence,
    outgoing,
    parse_quiver,
)
from app.api.services.series import KahlerMap
from app.core.errors import CatalogueError, QuiverError, QuiverFileError

NAMES = ("q1", "q2", "q3")


def test_outgoing_incoming_d3(d3):
    assert outgoing(d3, 3) == 4
    assert incoming(d3, 3) == 4


def test_outgoing_incoming_star_centre(star):
    assert outgoing(star, 5) == 4
    assert incoming(star, 5) == 4


def test_isolated_node():
    q = Quiver((Node(1, 2), Node(2, 1)), ())
    assert outgoing(q, 1) == 0
    assert incoming(q, 1) == 0


def test_unknown_node():
    q = Quiver((Node(1, 2),), ())
    with pytest.raises(QuiverError):
        outgoing(q, 7)


def test_quiver_rejects_two_cycles():
    with pytest.raises(QuiverError):
        Quiver((Node(1, 1), Node(2, 1)), (Arrow(1, 2), Arrow(2, 1)))


def test_framed_node_cannot_mutate(d3):
    with pytest.raises(QuiverError) as exc:
        mutate(d3, 4)
    assert exc.value.code == "FRAMED_NODE"


def test_negative_rank_is_an_error():
    q = Quiver((Node(1, 5), Node(2, 1, framed=True)), (Arrow(1, 2),))
    with pytest.raises(QuiverError) as exc:
        mutate(q, 1)
    assert exc.value.code == "NEGATIVE_RANK"


def test_mu3_on_d3(d3):
    result = mutate(d3, 3)
    q = result.quiver
    assert q.ranks() == {1: 2, 2: 2, 3: 1, 4: 4}
    assert q.multiplicities == {(1, 4): 1, (2, 4): 1, (4, 3): 1, (3, 1): 1, (3, 2): 1}
    expected = {
        canonical_rotation(((1, 4, 0), (4, 3, 0), (3, 1, 0))),
        canonical_rotation(((2, 4, 0), (4, 3, 0), (3, 2, 0))),
    }
    assert {w.path for w in q.potential} == expected
    assert all(w.coeff == 1 for w in q.potential)
    assert result.kahler_case == KahlerCase.OUT_EQ_IN
    assert result.annihilated == {}
    assert q.family == "Z1"


def test_star_mu5_rank(star):
    result = mutate(star, 5)
    assert result.quiver.rank(5) == 1
    assert result.quiver.family == "Zs"


W1 = (
    CycleWord(Fraction(1), ((1, 4, 0), (4, 3, 0), (3, 1, 0))),
    CycleWord(Fraction(1), ((2, 4, 0), (4, 3, 0), (3, 2, 0))),
)
W2 = (CycleWord(Fraction(1), ((1, 3, 0), (3, 2, 0), (2, 4, 0), (4, 1, 0))),)
W3 = (
    CycleWord(Fraction(1), ((1, 3, 0), (3, 4, 0), (4, 1, 0))),
    CycleWord(Fraction(1), ((2, 3, 0), (3, 4, 0), (4, 2, 0))),
)


def test_mu1_integrates_out_the_quadratic_pair(d3):
    z1 = mutate(d3, 3).quiver
    result = mutate(z1, 1)
    assert result.annihilated == {(3, 4): 1}
    assert result.quiver.multiplicities == {(1, 3): 1, (2, 4): 1, (3, 2): 1, (4, 1): 1}
    assert result.quiver.potential == W2
    assert result.sign_flipped


def test_mu2_after_mu1_gives_two_cubic_terms(d3):
    z2 = mutate(mutate(d3, 3).quiver, 1).quiver
    result = mutate(z2, 2)
    assert result.annihilated == {}
    assert result.quiver.potential == W3
    assert not result.sign_flipped


@pytest.mark.parametrize("ranks", [(2, 2, 3, 4), (2, 3, 4, 5)])
def test_chain_potentials(ranks):
    assert catalogue_quiver("X0", ranks).potential == ()
    assert catalogue_quiver("Z1", ranks).potential == W1
    assert catalogue_quiver("Z2", ranks).potential == W2
    assert catalogue_quiver("Z3", ranks).potential == W3
    assert catalogue_quiver("X4", ranks).potential == ()


def test_star_mutation_adds_one_cubic_term_per_path(star):
    result = mutate(star, 5)
    words = result.quiver.potential
    assert len(words) == 4
    assert all(len(w.path) == 3 and w.coeff == 1 for w in words)
    assert {w.path[0][:2] for w in words} == {(3, 6), (3, 7), (4, 6), (4, 7)}


def test_mutation_without_potential_tracking_leaves_it_empty(d3):
    assert mutate(d3, 3, track_potential=False).quiver.potential == ()


def test_involution_on_d3(d3):
    back = mutate(mutate(d3, 3).quiver, 3).quiver
    assert np.array_equal(back.b_matrix(), d3.b_matrix())
    assert back.ranks() == d3.ranks()
    assert back.potential == ()


def test_nine_step_sequence_returns_to_d3(d3):
    results = mutate_sequence(d3, D3_SEQUENCE)
    final = results[-1].quiver
    assert [r.node for r in results] == list(D3_SEQUENCE)
    assert final.multiplicities == d3.multiplicities
    assert final.ranks() == d3.ranks()
    assert final.family == "X9"


def _random_quiver(rng):
    n = int(rng.integers(2, 7))
    framed = [bool(rng.random() < 0.25) for _ in range(n)]
    if all(framed):
        framed[0] = False
    nodes = tuple(Node(i + 1, int(rng.integers(0, 4)), framed[i]) for i in range(n))
    arrows = []
    for i in range(n):
        for j in range(i + 1, n):
            if framed[i] and framed[j]:
                continue
            roll = rng.random()
            if roll < 0.3:
                arrows.append(Arrow(i + 1, j + 1, int(rng.integers(1, 3))))
            elif roll < 0.6:
                arrows.append(Arrow(j + 1, i + 1, int(rng.integers(1, 3))))
    return Quiver(nodes, tuple(arrows))


def test_involution_on_random_quivers():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        q = _random_quiver(rng)
        k = int(rng.choice(q.gauge_ids))
        q = q.with_ranks({k: min(q.rank(k), max(outgoing(q, k), incoming(q, k)))})
        once = mutate(q, k, track_potential=False)
        new_rank = max(outgoing(q, k), incoming(q, k)) - q.rank(k)
        assert once.quiver.rank(k) == new_rank
        twice = mutate(once.quiver, k, track_potential=False).quiver
        assert np.array_equal(twice.b_matrix(), q.b_matrix())
        assert twice.ranks() == q.ranks()


def test_matrix_mutation_is_an_involution():
    b = np.array([[0, 1, -2], [-1, 0, 1], [2, -1, 0]])
    assert np.array_equal(matrix_mutation(matrix_mutation(b, 1), 1), b)


def test_paper_map_for_mu3(d3):
    kmap = kahler_map_for(mutate(d3, 3), "paper")
    expected = KahlerMap.from_rows(
        NAMES, NAMES, ({"q1": 1}, {"q2": 1}, {"q3": -1}), units=[("q3", -1)], unit_powers=[(1,), (1,), (0,)]
    )
    assert kmap.equivalent(expected)
    assert kmap.describe() == ["q1 = (1-q3)*q1", "q2 = (1-q3)*q2", "q3 = q3^-1"]


def test_paper_map_for_z1_to_z2(d3):
    z1 = mutate(d3, 3).quiver
    kmap = kahler_map_for(mutate(z1, 1), "paper")
    assert kmap.equivalent(KahlerMap.from_rows(NAMES, NAMES, ({"q1": -1}, {"q2": 1}, {"q3": 1})))


def test_paper_map_for_star_case_a():
    q = catalogue_quiver("Xs", (1, 1, 2, 2, 2, 3, 3, 4, 4))
    kmap = kahler_map_for(mutate(q, 5), "paper")
    assert kmap.describe()[4:] == ["q5 = q5^-1", "q6 = q5*q6", "q7 = q5*q7"]


def test_conjecture_rule_matches_star_mu5():
    q = catalogue_quiver("Xs", (1, 1, 2, 2, 2, 3, 3, 4, 4))
    result = mutate(q, 5)
    assert conjecture_kahler_map(result).equivalent(kahler_map_for(result, "paper"))


def test_paper_rule_needs_a_catalogued_mutation(d3):
    with pytest.raises(CatalogueError):
        kahler_map_for(mutate(d3, 1), "paper")


def test_quiver_file_round_trip(d3):
    z2 = catalogue_quiver("Z2", (2, 2, 3, 4))
    text = emit_quiver(z2)
    again = parse_quiver(text)
    assert emit_quiver(again) == text
    assert again.potential == z2.potential
    assert parse_quiver(emit_quiver(d3)) == d3


def test_quiver_file_parse_error_has_position():
    with pytest.raises(QuiverFileError) as exc:
        parse_quiver('{\n  "nodes": [\n}')
    assert exc.value.line == 3
    assert exc.value.code == "PARSE_ERROR"


def test_quiver_file_schema_error():
    with pytest.raises(QuiverFileError):
        parse_quiver(json.dumps({"nodes": [{"id": 1}]}))


def test_potential_rotation_is_canonical():
    a = CycleWord.make(1, ((2, 3, 0), (3, 1, 0), (1, 2, 0)))
    b = CycleWord.make(1, ((1, 2, 0), (2, 3, 0), (3, 1, 0)))
    assert a == b
