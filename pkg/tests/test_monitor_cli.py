import io
import json
import math

import numpy as np
import pytest

from ssrcusum import cli, ingest
from ssrcusum.engine import CusumConfig, SignalReport, run
from ssrcusum.monitor import (Monitor, MonitorConfig, MonitorRecord, dispersion_config,
                              location_config, monitor_stream)


# -- ingestion -----------------------------------------------------------------------

def parse(text):
    return list(ingest.parse_lines(io.StringIO(text)))


def test_single_column_with_header_and_comments():
    obs = parse("# lab differences\nx\n0.5\n\n-1.25\n# trailing note\n3\n")
    assert [o.x for o in obs] == [0.5, -1.25, 3.0]
    assert [o.line for o in obs] == [3, 5, 7]


@pytest.mark.parametrize("sep", [",", "\t", ";", "  "])
def test_pair_rows(sep):
    obs = parse(f"v1{sep}v2\n3.0{sep}2.5\n1{sep}4\n")
    assert obs[0].x == pytest.approx(0.5) and obs[0].pair == (3.0, 2.5)
    assert obs[1].x == -3.0


@pytest.mark.parametrize("text,line", [
    ("1\n2\nabc\n", 3),
    ("1,2\n3\n", 2),
    ("x\n1\n2,3,4\n", 3),
    ("1\nnan\n", 2),
    ("1\n\n#c\ninf\n", 4),
])
def test_malformed_rows_report_line(text, line):
    with pytest.raises(ingest.InputFormatError) as err:
        parse(text)
    assert err.value.line == line and f"line {line}" in str(err.value)


def test_record_round_trip(tmp_path, rng):
    cfg = MonitorConfig(location_config(0.25, 7.25), dispersion_config(0.2, 10.29, 0.35, 6.29))
    x = np.concatenate([rng.standard_normal(50), [0.0], rng.standard_normal(30) + 1.5])
    _, recs = monitor_stream(x, cfg)
    path = tmp_path / "path.csv"
    ingest.write_records(path, recs, MonitorRecord, meta={"seed": 1})
    assert ingest.read_records(path, MonitorRecord) == recs
    assert ingest.read_records(io.StringIO(ingest.records_to_string(recs, MonitorRecord)),
                               MonitorRecord) == recs


# -- monitor -------------------------------------------------------------------------

def test_monitor_location_matches_engine(rng):
    x = np.concatenate([rng.standard_normal(100), rng.standard_normal(100) + 1.0])
    cfg = location_config(0.25, 7.25, two_sided=True)
    rep = run(x, "w", cfg)
    report, recs = monitor_stream(x, MonitorConfig(location=cfg))
    assert isinstance(rep, SignalReport)
    s = report.first_signal
    assert (s.index, s.side, s.changepoint) == (rep.index, rep.side, rep.changepoint)
    assert len(recs) == rep.index and [r.n for r in recs] == list(range(1, rep.index + 1))


def test_monitor_records_are_consistent(rng):
    cfg = MonitorConfig(location_config(0.25, 1e9), dispersion_config(0.2, 1e9, 0.35, 1e9))
    _, recs = monitor_stream(rng.standard_normal(200), cfg)
    for r in recs:
        assert r.loc_up >= 0 and r.loc_down <= 0 and r.disp_up >= 0 and r.disp_down <= 0
        assert abs(r.xi_location) <= math.sqrt(3) and r.signal == ""


def test_dispersion_chart_detects_variance_increase(rng):
    x = np.concatenate([rng.standard_normal(200), 3 * rng.standard_normal(400)])
    report, _ = monitor_stream(x, MonitorConfig(dispersion=dispersion_config(0.2, 10.29)))
    s = report.first_signal
    assert s.chart == "dispersion" and s.side == "upper" and s.index > 150


def test_keep_going_restarts_chart(rng):
    x = np.concatenate([rng.standard_normal(50), rng.standard_normal(400) + 2.0])
    cfg = MonitorConfig(location=location_config(0.5, 2.73), halt_on_signal=False)
    report, recs = monitor_stream(x, cfg)
    assert len(recs) == x.size and len(report.signals) > 1 and not report.halted
    idx = [s.index for s in report.signals]
    assert idx == sorted(idx)
    assert all(s.changepoint < s.index for s in report.signals)


def test_halted_monitor_refuses_input():
    mon = Monitor(MonitorConfig(location=location_config(0.0, 0.5, False)))
    mon.push(1.0)
    assert mon.halted
    with pytest.raises(Exception):
        mon.push(1.0)


def test_zero_differences_warn():
    report, recs = monitor_stream([0.0] * 20, MonitorConfig(location=location_config(0.25, 7.25)))
    assert not report.signals and report.zeros == 20 and report.warnings
    assert all(r.xi_location == 0.0 for r in recs)


def test_config_errors():
    with pytest.raises(ValueError):
        MonitorConfig()
    with pytest.raises(ValueError):
        MonitorConfig(location=CusumConfig(0.25, 0.25))  # no limits
    with pytest.raises(ValueError):
        MonitorConfig(location=location_config(0.25, 7.25), score="w2")
    with pytest.raises(ValueError):
        dispersion_config(0.2, None)
    with pytest.raises(ValueError):
        dispersion_config(None, None)


# -- command line --------------------------------------------------------------------

@pytest.fixture
def fixture_file(tmp_path):
    path = tmp_path / "diffs.csv"
    assert cli.main(["simulate", "--emit", "300", "--tau", "214", "--target-shift", "0.622",
                     "--scale", "0.6", "--seed", "3", "--output", str(path)]) == 0
    return path


def test_simulate_emit_is_reproducible(tmp_path, fixture_file):
    other = tmp_path / "again.csv"
    cli.main(["simulate", "--emit", "300", "--tau", "214", "--target-shift", "0.622",
              "--scale", "0.6", "--seed", "3", "--output", str(other)])
    assert other.read_text() == fixture_file.read_text()


def test_monitor_exit_codes(tmp_path, fixture_file, capsys):
    path = tmp_path / "path.csv"
    code = cli.main(["monitor", "--input", str(fixture_file), "--zeta", "0.15", "--h", "14.06",
                     "--two-sided", "--output", str(path)])
    out = capsys.readouterr().out
    assert code == 2 and "SIGNAL location" in out
    recs = ingest.read_records(path, MonitorRecord)
    assert recs[-1].signal.startswith("location")
    quiet = tmp_path / "quiet.csv"
    quiet.write_text("0.1\n-0.2\n0.15\n")
    assert cli.main(["monitor", "--input", str(quiet), "--zeta", "0.25", "--arl0", "500"]) == 0


def test_monitor_records_format(tmp_path, capsys):
    f = tmp_path / "pairs.csv"
    f.write_text("v1,v2\n3.0,2.5\n")
    assert cli.main(["monitor", "--input", str(f), "--zeta", "0.25", "--h", "7.25",
                     "--format", "records"]) == 0
    recs = ingest.read_records(io.StringIO(capsys.readouterr().out), MonitorRecord)
    assert recs[0].x == pytest.approx(0.5)


def test_monitor_records_to_file_keeps_stdout_clean(tmp_path, capsys):
    f, out = tmp_path / "x.csv", tmp_path / "path.csv"
    f.write_text("0.5\n-0.2\n")
    assert cli.main(["monitor", "--input", str(f), "--zeta", "0.25", "--h", "7.25",
                     "--format", "records", "--output", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert len(ingest.read_records(out, MonitorRecord)) == 2


def test_monitor_errors(tmp_path, capsys):
    f = tmp_path / "bad.csv"
    f.write_text("1\n2\nthree\n")
    assert cli.main(["monitor", "--input", str(f), "--zeta", "0.25", "--h", "7.25"]) == 1
    assert "line 3" in capsys.readouterr().err
    f.write_text("1\n")
    assert cli.main(["monitor", "--input", str(f), "--zeta", "0.25"]) == 1
    assert cli.main(["monitor", "--input", str(f), "--zeta", "0.26", "--arl0", "500"]) == 1
    assert cli.main(["monitor", "--input", str(tmp_path / "nope.csv"), "--zeta", "0.25",
                     "--h", "7"]) == 1
    with pytest.raises(SystemExit) as e:
        cli.main(["monitor", "--score", "median"])
    assert e.value.code == 1


def test_monitor_zero_warning(tmp_path, capsys):
    f = tmp_path / "zeros.csv"
    f.write_text("0\n0\n0\n")
    assert cli.main(["monitor", "--input", str(f), "--zeta", "0.25", "--h", "7.25"]) == 0
    assert "zero difference" in capsys.readouterr().err


def test_monitor_config_file_and_design_flags(tmp_path, fixture_file, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"zeta": 0.15, "h": 14.06, "two_sided": True, "alpha": 0.5,
                               "disp_h_up": 10.29, "disp_h_down": 6.29}))
    code = cli.main(["monitor", "--input", str(fixture_file), "--config", str(cfg),
                     "--format", "records"])
    recs = ingest.read_records(io.StringIO(capsys.readouterr().out), MonitorRecord)
    assert code == 2 and recs[0].disp_up is not None and recs[0].disp_down is not None
    # zeta from theta0 * shift / 2 and a tabulated limit
    assert cli.main(["monitor", "--input", str(fixture_file), "--target-shift", "0.5",
                     "--theta0", "1.0", "--arl0", "500"]) in (0, 2)


def test_theta_command(capsys, tmp_path):
    assert cli.main(["theta", "--score", "w", "--dist", "t3"]) == 0
    assert "1.378" in capsys.readouterr().out
    assert cli.main(["theta", "--score", "w2", "--format", "records"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "dist,theta1,error" and len(lines) == 6
    data = tmp_path / "phase1.csv"
    data.write_text("\n".join(str(v) for v in np.random.default_rng(0).normal(0, .45, 50)))
    assert cli.main(["theta", "--input", str(data), "--target-shift", "0.5", "--alpha", "0.5",
                     "--format", "records"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["n"] == 50 and d["zeta_location"] == pytest.approx(d["theta0_hat"] * 0.25)


def test_simulate_and_arl_commands(tmp_path, capsys):
    assert cli.main(["simulate", "--zeta", "0.5", "--h", "2.73", "--reps", "2000",
                     "--format", "records"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["arl"] == pytest.approx(100, rel=0.1) and d["meta"]["seed"] == 0
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"name": "tiny", "kind": "heuristic", "tau": 0, "deltas": [1.0],
                             "columns": [{"dist": "normal", "zeta": 0.5, "h": 4.13}]}))
    out = tmp_path / "tiny.csv"
    assert cli.main(["arl", "--scenario", str(m), "--reps", "1000", "--output", str(out)]) == 0
    text = out.read_text()
    assert "# seed: 0" in text and "runtime_s" in text
    assert cli.main(["arl"]) == 1


def test_calibrate_command(tmp_path, capsys):
    out = tmp_path / "h.json"
    code = cli.main(["calibrate", "--score", "w", "--zeta", "0.5", "--arl0", "100",
                     "--reps", "3000", "--verify-reps", "10000", "--format", "records",
                     "--output", str(out)])
    assert code == 0
    blob = json.loads(out.read_text())
    assert blob["h"][0][0] == pytest.approx(2.73, rel=0.05)
    assert "published 2.730" in capsys.readouterr().err


def test_range_parsing():
    assert cli._floats("0.1..0.5") == pytest.approx([0.1 + 0.05 * k for k in range(9)])
    assert cli._floats("0.1..0.3:0.1") == pytest.approx([0.1, 0.2, 0.3])
    assert cli._floats("100,500") == [100.0, 500.0]
