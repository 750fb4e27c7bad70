import csv
import io
import json

import numpy as np
import pytest

from tesh import cli
from tesh.fixtures import available, fixture_path, load_fixture
from tesh.qcore import read_state, write_state


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fixtures_available():
    names = available()
    for name in ("phi4", "c5", "wheel6", "te7", "zero4"):
        assert name in names
    assert load_fixture("phi4").shape == (16,)
    with pytest.raises(FileNotFoundError):
        fixture_path("nope")


def test_verify_exit_codes(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--fixture", "phi4")
    assert code == 0 and json.loads(out)["verdict"] is True
    assert json.loads(out)["flags"]["fixture"] == "phi4"
    code, _, _ = run(capsys, "verify", "--fixture", "zero4")
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "tesh-state-v1", "n": 4, "ampl')
    code, _, err = run(capsys, "verify", str(bad))
    assert code == 65 and "invalid JSON" in err
    code, _, _ = run(capsys, "verify", str(tmp_path / "missing.json"))
    assert code == 65


def test_verify_state_file(capsys, tmp_path):
    path = tmp_path / "s.json"
    write_state(load_fixture("c5"), path)
    code, out, _ = run(capsys, "verify", str(path), "--tol", "0")
    assert code == 0 and json.loads(out)["n"] == 5


def test_usage_errors(capsys):
    assert cli.main(["search", "--n", "4", "--seeds", "0"]) == 64
    assert cli.main(["table", "--n", "3..9"]) == 64
    assert cli.main(["frobnicate"]) == 64
    assert cli.main(["search", "--n", "12", "--seeds", "1"]) == 64
    assert cli.main(["verify"]) == 64
    assert cli.main(["verify", "x.json", "--fixture", "phi4"]) == 64
    assert cli.main(["magic", "--fixture", "phi4", "--alpha", "1"]) == 64
    assert cli.main(["--help"]) == 0
    capsys.readouterr()


def test_search_writes_states(capsys, tmp_path):
    code, out, _ = run(capsys, "search", "--n", "4", "--seeds", "5", "--output-dir",
                       str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert doc["flags"]["seeds"] == 5 and doc["successes"] >= 1
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary == doc
    files = [r["file"] for r in doc["runs"] if "file" in r]
    assert len(files) == doc["successes"]
    assert read_state(files[0]).shape == (16,)


def test_search_deterministic(capsys):
    _, a, _ = run(capsys, "search", "--n", "4", "--seeds", "3", "--master-seed", "7")
    _, b, _ = run(capsys, "search", "--n", "4", "--seeds", "3", "--master-seed", "7")
    assert a == b


def test_search_n8_negative(capsys):
    code, _, _ = run(capsys, "search", "--n", "8", "--seeds", "2", "--max-iters", "30")
    assert code == 2


def test_magic_command(capsys):
    code, out, _ = run(capsys, "magic", "--fixture", "phi4")
    assert code == 0 and abs(json.loads(out)["entropy"] - 1.17) < 0.01
    code, out, _ = run(capsys, "magic", "--fixture", "c5")
    assert abs(json.loads(out)["entropy"]) < 1e-10
    code, out, _ = run(capsys, "magic", "--haar", "3", "20", "--seed", "2")
    doc = json.loads(out)
    assert code == 0 and doc["samples"] == 20 and doc["flags"]["haar"] == [3, 20]
    assert cli.main(["magic", "--haar", "9", "5"]) == 64
    capsys.readouterr()


def test_table_small_range(capsys, tmp_path):
    out_json = tmp_path / "b.json"
    code, out, _ = run(capsys, "table", "--n", "4..5", "--sdp-level", "2", "--format", "csv",
                       "--json", str(out_json))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["n"] for r in rows] == ["4", "5"]
    assert rows[1]["verdict"] == "exists-known" and rows[1]["fixture"] == "c5"
    doc = json.loads(out_json.read_text())
    assert doc["format"] == "tesh-bounds-v1" and doc["flags"]["sdp_level"] == 2
    for row in doc["rows"]:
        fx = row["fixture"]
        assert row["lp_lower_bound"] <= fx["average_purity"] + 1e-7
        assert fx["average_purity"] <= row["sdp_upper_bound"] + 1e-7


def test_table_markdown_and_n7_note(capsys):
    code, out, _ = run(capsys, "table", "--n", "7", "--sdp-level", "1")
    assert code == 0
    assert out.splitlines()[0].startswith("| n |")
    assert "not implemented" in out


def test_table_refused_level_reports_error(capsys):
    code, out, _ = run(capsys, "table", "--n", "8", "--sdp-level", "3")
    assert code == 1 and "error" in out


def test_verdict_rule():
    rows, ok = cli.bounds_table([5], 1)
    assert ok and rows[0]["verdict"] == "exists-known"
    assert rows[0]["gap_width"] == pytest.approx(rows[0]["sdp_upper_bound"] - 0.25, abs=1e-6)
