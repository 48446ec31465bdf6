"""Command-line entry point, driven in-process through main()."""

import csv
import io
import json

import pytest

from clchain.cli import DEFAULTS, load_config, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def strip_timing(doc):
    doc = dict(doc)
    doc.pop("timing")
    return doc


def test_enumerate_small_window(capsys):
    code, out, _ = run(capsys, "enumerate", "--p", "3", "--window", "2")
    assert code == 0
    doc = json.loads(out)
    assert [r["type"] for r in doc["rows"]] == ["0", "1", "2", "1,1"]
    assert [r["aut"] for r in doc["rows"]] == ["1", "2", "6", "48"]
    assert doc["rows"][3]["weight"] == "1/48"
    assert list(doc) == ["config", "rows", "checks", "passed", "timing"]


def test_csv_is_byte_stable(capsys):
    outs = [run(capsys, "enumerate", "--window", "5", "--format", "csv")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0])))
    assert rows[0] == {"type": "0", "order_exp": "0", "rank": "0", "aut": "1", "weight": "1"}
    assert len(rows) == 1 + 1 + 2 + 3 + 5 + 7


def test_json_is_stable_apart_from_timing(capsys):
    a = json.loads(run(capsys, "check", "reversibility", "--window", "4")[1])
    b = json.loads(run(capsys, "check", "reversibility", "--window", "4")[1])
    assert strip_timing(a) == strip_timing(b)
    assert a["passed"] is True
    assert {c["status"] for c in a["checks"]} == {"pass"}


def test_out_file_and_summary(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(capsys, "check", "duality", "--max-exp", "2", "--out", str(target))
    assert code == 0
    assert "pass" in out and "check" in out.splitlines()[0]
    assert json.loads(target.read_text())["passed"] is True


def test_failing_check_sets_exit_code(capsys):
    code, out, err = run(capsys, "check", "curious", "--f1", "1", "--f2", "1", "--window", "2", "--tol", "1e-9")
    assert code == 1
    assert json.loads(out)["passed"] is False
    assert "FAIL" in err


def test_config_replay_reproduces_report(capsys, tmp_path):
    first = json.loads(
        run(capsys, "simulate", "--construction", "delta0", "--source", "1", "--samples", "500", "--seed", "4")[1]
    )
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(first["config"]))
    replay = json.loads(run(capsys, "simulate", "--config", str(cfg_path))[1])
    assert strip_timing(first) == strip_timing(replay)


def test_key_value_config_and_flag_precedence(capsys, tmp_path):
    cfg_path = tmp_path / "cfg.txt"
    cfg_path.write_text("# small run\np = 3\nwindow = 1\n")
    assert load_config(str(cfg_path)) == {"p": 3, "window": 1}
    doc = json.loads(run(capsys, "enumerate", "--config", str(cfg_path), "--window", "2")[1])
    assert doc["config"]["p"] == 3 and doc["config"]["window"] == 2


def test_spectrum_and_converge(capsys):
    code, out, _ = run(capsys, "spectrum", "--max-exp", "2", "--residual-window", "3")
    assert code == 0
    doc = json.loads(out)
    assert [r["eigenvalue"] for r in doc["rows"]] == ["1", "1/2", "1/4", "1/4"]
    code, out, _ = run(capsys, "converge", "--window", "8", "--steps", "10")
    assert code == 0
    assert len(json.loads(out)["rows"]) == 10


def test_simulate_extclass(capsys):
    code, out, _ = run(capsys, "simulate", "--construction", "extclass", "--matrix", "4,0;0,2", "--samples", "200")
    assert code == 0
    assert json.loads(out)["rows"][0]["group"] == "2,1"


def test_bad_arguments_exit_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["check", "nonsense"])
    assert exc.value.code != 0


def test_defaults_cover_every_flag():
    assert {"p", "window", "tol", "seed", "out", "format", "bound"} <= set(DEFAULTS)
