import pytest

from app.api.services.catalogue import (
    D3_CHAIN,
    D3_STEP_IDS,
    PHASES,
    block_case,
    catalogue_summary,
    d3_base_ranks,
    d3_step,
    parse_int_list,
    star_case,
    successor_family,
    chain_map_table,
    validate_ranks,
    catalogue_quiver,
)
from app.api.services.duality import cumulative_maps
from app.core.errors import CatalogueError, RankConstraintError, UsageError

RANKS = (2, 2, 3, 4)


def test_table_rows_match_composed_steps():
    rows = chain_map_table(RANKS)
    maps = cumulative_maps(RANKS)
    assert [family for _, family, _ in rows] == list(D3_CHAIN)
    for (node, family, expected), computed in zip(rows, maps):
        assert computed.equivalent(expected), family


def test_nine_steps_compose_to_identity():
    maps = cumulative_maps(RANKS)
    assert len(maps) == len(D3_STEP_IDS) + 1
    assert maps[-1].is_identity


def test_table_x4_row_is_unit_free():
    _, family, kmap = chain_map_table(RANKS)[4]
    assert family == "X4"
    assert kmap.is_unit_free
    assert kmap.describe() == ["q1 = q2^-1", "q2 = q1^-1", "q3 = q3^-1"]


def test_unit_sign_follows_parity():
    # N4 - N3 = 1 gives (1 - q3), N4 - N3 = 2 gives (1 + q3)
    odd = chain_map_table((2, 2, 3, 4))[1][2]
    even = chain_map_table((3, 3, 4, 6))[1][2]
    assert odd.describe()[0] == "q1 = (1-q3)*q1"
    assert even.describe()[0] == "q1 = (1+q3)*q1"


@pytest.mark.parametrize(
    "ranks",
    [(2, 2, 3), (0, 2, 3, 2), (2, 2, 3, 5), (2, 2, 4, 4), (2, 2, 2, 4)],
)
def test_d3_rank_constraints(ranks):
    with pytest.raises(RankConstraintError):
        validate_ranks("X0", ranks)


def test_star_rank_constraints():
    validate_ranks("Xs", (1, 1, 2, 2, 3, 2, 2, 3, 3))
    with pytest.raises(RankConstraintError):
        validate_ranks("Xs", (1, 1, 2, 2, 5, 2, 2, 3, 3))
    with pytest.raises(RankConstraintError):
        validate_ranks("Xs", (3, 1, 2, 2, 3, 2, 2, 3, 3))


def test_block_rank_constraints():
    assert validate_ranks("GrBlock", (1, 2, 0)) == (1, 2, 0)
    for ranks in ((0, 2, 0), (2, 2, 0), (1, 3, -1)):
        with pytest.raises(RankConstraintError):
            validate_ranks("GrBlock", ranks)


def test_unknown_family():
    with pytest.raises(CatalogueError):
        validate_ranks("Y7", RANKS)


@pytest.mark.parametrize(
    "ranks, case",
    [
        ((1, 1, 2, 2, 2, 3, 3, 4, 4), "a"),
        ((1, 1, 2, 2, 3, 3, 2, 3, 3), "b"),
        ((1, 1, 2, 2, 3, 2, 2, 3, 3), "c"),
    ],
)
def test_star_cases(ranks, case):
    assert star_case(ranks) == case


def test_star_case_below_threshold_is_not_catalogued():
    with pytest.raises(CatalogueError):
        star_case((1, 1, 3, 3, 3, 2, 2, 3, 3))


def test_block_cases():
    assert block_case((1, 3, 0)) == 1
    assert block_case((1, 2, 1)) == 2
    assert block_case((1, 2, 2)) == 3
    with pytest.raises(CatalogueError):
        block_case((1, 2, 3))


def test_chain_base_ranks_are_recovered():
    for family in D3_CHAIN:
        assert d3_base_ranks(family, catalogue_quiver(family, (2, 3, 4, 5))) == (2, 3, 4, 5)


def test_chain_quivers_carry_their_phase():
    for family in D3_CHAIN:
        assert catalogue_quiver(family, RANKS).meta["phase"] == list(PHASES[family])


def test_successor_family():
    assert successor_family("X0", 3).name == "Z1"
    assert successor_family("Z1", 3).name == "X0"
    assert successor_family("X0", 1) is None


def test_step_aliases():
    assert d3_step("corollary").id == "X0->Z1"
    assert d3_step("Z1→Z2").id == "Z1->Z2"
    with pytest.raises(CatalogueError):
        d3_step("X0->X5")


def test_catalogue_summary_lists_every_family():
    names = [entry["family"] for entry in catalogue_summary()]
    assert names[: len(D3_CHAIN)] == list(D3_CHAIN)
    assert {"Xs", "Zs", "GrBlock", "GrBlockDual"} <= set(names)


def test_parse_int_list():
    assert parse_int_list("2,2,3,4") == (2, 2, 3, 4)
    assert parse_int_list(" 3, 1 ,2", "sequence") == (3, 1, 2)
    assert parse_int_list([1, 2]) == (1, 2)
    with pytest.raises(UsageError):
        parse_int_list("2,x")
    with pytest.raises(UsageError):
        parse_int_list("")
