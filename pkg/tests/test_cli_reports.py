"""Report-format details: JSON/CSV agreement and one-sided comparison rows."""

import json

import pytest

from fmmcomm.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def partial_measurements(tmp_path):
    path = tmp_path / "partial.csv"
    path.write_text(
        "rank,level,phase,seconds\n"
        "0,3,global_m2l,1.5e-4\n"
        "1,3,global_m2l,2.5e-4\n"
        "0,42,local_m2l,9e-4\n"
        "1,42,local_m2l,9e-4\n")
    return path


def test_compare_lists_one_sided_keys(capsys, partial_measurements):
    code, out, _ = run(capsys, "compare", "--machine", "shaheen",
                       "--procs", "128", "--particles-per-proc", "62500",
                       "--measurements", str(partial_measurements))
    assert code == 0
    lines = out.strip().split("\n")
    # matched level 3 gets the full six variant rows
    assert sum(1 for l in lines if l.startswith("3,")) == 6
    # unmatched prediction levels keep a blank row each
    blanks = [l for l in lines if l.endswith(",,,,,,")]
    assert {l.split(",")[0] for l in blanks} == {"0", "1", "2", "4", "5", "6", "7"}
    # the measurement-only level keeps its measured statistics
    (tail,) = [l for l in lines if l.startswith("42,")]
    parts = tail.split(",")
    assert parts[1] == "local_m2l"
    assert parts[2] == parts[3] == ""
    assert float(parts[4]) == pytest.approx(9e-4)


def test_compare_json_mirrors_one_sided_keys(capsys, partial_measurements):
    code, out, _ = run(capsys, "compare", "--machine", "shaheen",
                       "--procs", "128", "--particles-per-proc", "62500",
                       "--measurements", str(partial_measurements),
                       "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert {r["level"] for r in doc["rows"]} == {3}
    assert {d["level"] for d in doc["prediction_only"]} == {0, 1, 2, 4, 5, 6, 7}
    assert doc["measurement_only"] == [{"level": 42, "phase": "local_m2l"}]


def test_loadbalance_json_matches_csv(capsys, tmp_path):
    path = tmp_path / "meas.csv"
    path.write_text(
        "rank,level,phase,seconds\n"
        "0,7,local_m2l,3e-4\n"
        "0,6,local_m2l,1e-4\n"
        "1,7,local_m2l,1e-4\n"
        "1,6,local_m2l,1e-4\n")
    _, csv_out, _ = run(capsys, "loadbalance", "--measurements", str(path))
    _, json_out, _ = run(capsys, "loadbalance", "--measurements", str(path),
                         "--format", "json")
    doc = json.loads(json_out)
    assert doc["ranks"] == [1, 0]
    rows = [line.split(",") for line in csv_out.strip().split("\n")[1:]]
    assert [int(r[0]) for r in rows] == doc["ranks"]
    assert [float(r[1]) for r in rows] == doc["totals_s"]
    assert doc["series"]["local_m2l_level7"] == [1e-4, 3e-4]


def test_pattern_json_matches_csv(capsys):
    base = ("pattern", "--procs", "64", "--particles-per-proc", "1000",
            "--level", "2")
    _, csv_out, _ = run(capsys, *base)
    _, json_out, _ = run(capsys, *base, "--format", "json")
    doc = json.loads(json_out)
    csv_rows = [tuple(int(v) for v in line.split(","))
                for line in csv_out.strip().split("\n")[1:]]
    assert csv_rows == [tuple(e) for e in doc["entries"]]
