import json

import pytest

from app.api.services.quiver import parse_quiver
from app.cli import EXIT_PASS, EXIT_USAGE, main


def test_check_building_block_passes(tmp_path, capsys):
    out = tmp_path / "reports"
    code = main(["check", "building-block", "--r", "1", "--n", "2", "--m", "0", "--box", "2", "--trials", "1", "--out", str(out)])
    assert code == EXIT_PASS
    assert "building-block PASS" in capsys.readouterr().out
    report = json.loads((out / "building-block_1-2-0.json").read_text(encoding="utf-8"))
    assert report["verdict"] == "PASS"
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["passed"] == 1
    assert "building-block_1-2-0" in summary["timings"]


def test_check_with_r_not_below_n_is_a_usage_error(tmp_path, capsys):
    code = main(["check", "building-block", "--r", "2", "--n", "2", "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "RANK_CONSTRAINT" in capsys.readouterr().err


def test_check_needs_ranks(tmp_path):
    assert main(["check", "star", "--out", str(tmp_path)]) == EXIT_USAGE


def test_unknown_identity(tmp_path):
    assert main(["check", "pentagon", "--ranks", "1,2,0", "--out", str(tmp_path)]) == EXIT_USAGE


def test_no_command_and_bad_flags():
    assert main([]) == EXIT_USAGE
    assert main(["fixpoints", "X0"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


def test_invalid_family_for_ifun(tmp_path):
    assert main(["ifun", "Y7", "--ranks", "1,2,0", "--out", str(tmp_path / "s.json")]) == EXIT_USAGE


def test_mutate_and_back(d3_file, d3, tmp_path):
    once = tmp_path / "once.json"
    log = tmp_path / "log.json"
    assert main(["mutate", str(d3_file), "--node", "3", "--out", str(once), "--log", str(log)]) == EXIT_PASS
    z1 = parse_quiver(once.read_text(encoding="utf-8"))
    assert z1.rank(3) == 1
    steps = json.loads(log.read_text(encoding="utf-8"))["steps"]
    assert steps[0]["kahler_map"]["expressions"] == ["q1 = (1-q3)*q1", "q2 = (1-q3)*q2", "q3 = q3^-1"]

    twice = tmp_path / "twice.json"
    assert main(["mutate", str(d3_file), "--sequence", "3,3", "--rule", "none", "--out", str(twice)]) == EXIT_PASS
    back = parse_quiver(twice.read_text(encoding="utf-8"))
    assert back.multiplicities == d3.multiplicities
    assert back.ranks() == d3.ranks()


def test_mutate_records_uncatalogued_maps(d3_file, tmp_path):
    log = tmp_path / "log.json"
    assert main(["mutate", str(d3_file), "--node", "1", "--log", str(log), "--out", str(tmp_path / "q.json")]) == EXIT_PASS
    step = json.loads(log.read_text(encoding="utf-8"))["steps"][0]
    assert step["kahler_map"] is None
    assert step["kahler_error"]["code"] == "NOT_CATALOGUED"


def test_mutate_missing_file(tmp_path):
    assert main(["mutate", str(tmp_path / "absent.json"), "--node", "3"]) == EXIT_USAGE


def test_mutate_framed_node(d3_file):
    assert main(["mutate", str(d3_file), "--node", "4"]) == EXIT_USAGE


def test_fixpoints(tmp_path):
    out = tmp_path / "points.json"
    assert main(["fixpoints", "X0", "--ranks", "2,2,3,4", "--out", str(out)]) == EXIT_PASS
    listing = json.loads(out.read_text(encoding="utf-8"))
    assert len(listing["points"]) == 36
    assert listing["cardinality"]["ok"]


def test_ifun_writes_the_series(tmp_path):
    out = tmp_path / "series.json"
    assert main(["ifun", "X0", "--ranks", "2,2,3,4", "--point", "0", "--box", "2", "--out", str(out)]) == EXIT_PASS
    payload = json.loads(out.read_text(encoding="utf-8"))
    terms = {tuple(t["e"]): t["c"] for t in payload["series"]["terms"]}
    assert terms[(0, 0, 0)] == "1/1"


def test_ifun_explicit_point(tmp_path, capsys):
    assert main(["ifun", "GrBlock", "--ranks", "1,2,0", "--subsets", "[[1]]", "--box", "1"]) == EXIT_PASS
    payload = json.loads(capsys.readouterr().out)
    assert payload["point"]["subsets"] == [[1]]
    assert len(payload["series"]["terms"]) == 2


def test_ifun_point_out_of_range():
    assert main(["ifun", "GrBlock", "--ranks", "1,2,0", "--point", "5"]) == EXIT_USAGE


def test_ifun_bad_subsets_json():
    assert main(["ifun", "GrBlock", "--ranks", "1,2,0", "--subsets", "[[1"]) == EXIT_USAGE


@pytest.mark.slow
def test_cycle_command(tmp_path):
    assert main(["cycle", "--ranks", "2,2,3,4", "--box", "2", "--trials", "2", "--out", str(tmp_path)]) == EXIT_PASS
