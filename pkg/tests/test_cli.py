import csv
import json
import math

import pytest
from click.testing import CliRunner

from poisrec.cli import (
    EXIT_FAIL,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    main,
    provenance,
    render_reports,
    trace_rows,
)
from poisrec.pathsim import PoissonPath, build_trace
from poisrec.statlab import report_interval, report_upper
from poisrec.suites import ExperimentConfig


@pytest.fixture
def runner():
    return CliRunner()


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_pathwise_reruns_are_byte_identical(runner, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        res = runner.invoke(main, ["verify", "pathwise", "--reps", "1000", "--seed", "7", "--out", str(out)])
        assert res.exit_code == EXIT_OK, res.output
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = json.loads(outs[0])
    assert all(set(r) == {"suite", "statistic", "value", "threshold", "pass", "n_samples", "seed"} for r in rows)
    assert all(r["seed"] == 7 for r in rows)


def test_stirling_three(runner, tmp_path):
    out = tmp_path / "s.json"
    res = runner.invoke(main, ["verify", "stirling", "--scale", "3", "--reps", "2000", "--out", str(out)])
    assert res.exit_code == EXIT_OK
    rows = json.loads(out.read_text())
    exact = [r["value"] for r in rows if r["statistic"].startswith("P(A_3 = ")]
    assert exact == pytest.approx([1 / 3, 1 / 2, 1 / 6], abs=1e-15)
    assert "P(A_3 = 1) = 1/3" in [r["statistic"] for r in rows]


def test_unknown_suite(runner, tmp_path):
    out = tmp_path / "x.json"
    res = runner.invoke(main, ["verify", "bogus", "--out", str(out)])
    assert res.exit_code == EXIT_USAGE
    assert not out.exists()


def test_unwritable_output(runner, tmp_path):
    res = runner.invoke(main, ["verify", "stirling", "--reps", "10", "--out", str(tmp_path / "no" / "r.json")])
    assert res.exit_code == EXIT_IO
    res = runner.invoke(main, ["trace", "--out", str(tmp_path / "no" / "t.csv")])
    assert res.exit_code == EXIT_IO


def test_bad_parameter_is_usage_error(runner):
    assert runner.invoke(main, ["verify", "stirling", "--reps", "0"]).exit_code == EXIT_USAGE
    assert runner.invoke(main, ["verify", "pathwise", "--lambda", "-1"]).exit_code == EXIT_USAGE
    assert runner.invoke(main, ["verify", "stirling", "--format", "xml"]).exit_code == EXIT_USAGE


def test_failing_check_exits_one(runner, tmp_path):
    # 20 replicates cannot bring the A_6 total variation under 0.01.
    res = runner.invoke(main, ["verify", "stirling", "--reps", "20", "--out", str(tmp_path / "f.json")])
    assert res.exit_code == EXIT_FAIL
    assert "FAIL stirling" in res.output


def test_trace_horizon_zero(runner, tmp_path):
    out = tmp_path / "t.csv"
    res = runner.invoke(main, ["trace", "--horizon", "0", "--seed", "3", "--out", str(out)])
    assert res.exit_code == EXIT_OK
    assert read_csv(out) == [["s", "N", "I_next", "C", "W"], ["0.0", "0", "1", "0", "0.0"]]


def test_trace_rows_scripted_path():
    path = PoissonPath.from_interarrivals([1.0, 0.5, 2.0], 2.0)
    rows = trace_rows(path, build_trace(path), 5)
    by_s = {r[0]: r for r in rows}
    assert by_s[2.0][1:] == (2, 1, 1, 1.5)
    # arrival epochs appear as rows even off the grid
    assert 1.0 in by_s and 1.5 in by_s and by_s[1.5][1:4] == (2, 1, 1)
    assert [r[0] for r in rows] == sorted({r[0] for r in rows})


def test_trace_same_seed_identical(runner, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    for out, seed in ((a, 5), (b, 5), (c, 6)):
        args = ["trace", "--lambda", "2", "--horizon", "30", "--seed", str(seed), "--out", str(out)]
        assert runner.invoke(main, args).exit_code == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    rows = read_csv(a)[1:]
    assert all(float(r[4]) <= float(r[0]) + 1e-12 for r in rows)


def test_trace_requires_out(runner):
    assert runner.invoke(main, ["trace"]).exit_code == EXIT_USAGE


def test_config_file_and_flag_precedence(runner, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("reps: 500\nseed: 11\nformat: csv\nscale: 3\n")
    out = tmp_path / "r.csv"
    res = runner.invoke(main, ["verify", "stirling", "--config", str(cfg), "--seed", "12", "--out", str(out)])
    rows = read_csv(out)
    assert rows[0] == ["suite", "statistic", "value", "threshold", "pass", "n_samples", "seed"]
    assert {r[6] for r in rows[1:]} == {"12"}
    meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
    assert meta["reps"] == 500 and meta["seed"] == 12 and meta["scales"] == [3.0]
    assert "workers" not in meta and meta["generator"]
    assert res.exit_code in (EXIT_OK, EXIT_FAIL)


def test_json_config_file(runner, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"reps": 100_000, "scales": [3]}))
    out = tmp_path / "r.json"
    res = runner.invoke(main, ["verify", "stirling", "--config", str(cfg), "--out", str(out)])
    assert res.exit_code == EXIT_OK
    assert json.loads(out.read_text())[-1]["n_samples"] == 100_000


def test_missing_config_is_io_error(runner, tmp_path):
    res = runner.invoke(main, ["verify", "stirling", "--config", str(tmp_path / "none.yaml")])
    assert res.exit_code == EXIT_IO


def test_render_csv_interval_threshold():
    text = render_reports([report_interval("s", "v", 0.3, 0.25, 0.45, 5, 2),
                           report_upper("s", "d", 0.1, 0.2, 5, 2)], "csv")
    lines = text.splitlines()
    assert lines[1] == 's,v,0.3,"[0.25, 0.45]",True,5,2'
    assert lines[2] == "s,d,0.1,0.2,True,5,2"


def test_provenance_excludes_workers():
    a = provenance(ExperimentConfig("slln", workers=1, out="a"))
    b = provenance(ExperimentConfig("slln", workers=4, out="b"))
    assert a == b


def test_rescaled_output(runner, tmp_path):
    out = tmp_path / "r.csv"
    args = ["rescaled", "--scales", "2,3", "--reps", "3", "--grid", "5", "--out", str(out)]
    assert runner.invoke(main, args).exit_code == EXIT_OK
    rows = read_csv(out)
    assert rows[0] == ["replicate", "n", "t", "C_tilde", "W_tilde", "Phi"]
    assert len(rows) == 1 + 3 * 2 * 5
    for r in rows[1:]:
        n, t, c, phi = float(r[1]), float(r[2]), float(r[3]), float(r[5])
        assert c == pytest.approx(math.sqrt(n) * (phi - t), abs=1e-12)
    again = tmp_path / "r2.csv"
    runner.invoke(main, args[:-1] + [str(again), "--workers", "2"])
    assert again.read_bytes() == out.read_bytes()
    assert runner.invoke(main, ["rescaled", "--scales", "0.5"]).exit_code == EXIT_USAGE
