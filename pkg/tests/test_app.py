import json

from app import build_parser, main


def test_export_prints_json(tmp_db, capsys):
    code = main(["export", "--object", "PK(2,2)", "--format", "json", "--stage", "0", "--radius", "3"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["object"] == "PK(2,2)"
    assert len(payload["tree"]["vertices"]) == 6


def test_fingerprint_command(tmp_db, capsys):
    code = main(["fingerprint", ".", "r+", "--stage", "0", "--radius", "4", "--compare", "r-"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "< 0"
    assert out[1] == "walk from r- ends at ."


def test_unknown_suite_exits_with_two(tmp_db):
    assert main(["verify", "--suite", "bogus"]) == 2


def test_radius_below_minimum_exits_with_two(tmp_db):
    assert main(["verify", "--stage", "1", "--radius", "3"]) == 2


def test_unknown_object_exits_with_two(tmp_db):
    assert main(["export", "--object", "nothing", "--stage", "0", "--radius", "3"]) == 2


def test_verify_stores_history(tmp_db, tmp_path, capsys):
    out_dir = str(tmp_path / "reports")
    assert main(["verify", "--suite", "gadget-table", "--out-dir", out_dir]) == 0
    assert "all 1 suites passed" in capsys.readouterr().out
    assert main(["history", "--filter-suite", "gadget-table"]) == 0
    assert "run_id" in capsys.readouterr().out
    assert list((tmp_path / "reports").glob("*.jsonl"))


def test_parser_defaults():
    args = build_parser().parse_args(["verify"])
    assert args.stage == 1 and args.radius == 6 and args.s == 3
