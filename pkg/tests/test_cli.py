import csv
import json

import pytest

from convexcert.cli import (CONDITIONS_HEADER, ExperimentConfig, main, parse_config, run_suite)
from convexcert.errors import UsageError

QUAD = "quadratic:diag:1,4"
LS_RANK1 = "least_squares:2x2:1,0,0,0:b:1,0"


def test_parse_certify():
    cfg = parse_config(["certify", "--function", QUAD, "--L", "4"])
    assert cfg.command == "certify" and cfg.function_spec == QUAD
    assert cfg.constants == {"L": 4.0} and cfg.step is None


def test_parse_gd_t_to_step():
    cfg = parse_config(["gd", "--function", QUAD, "--t", "4", "--iters", "100"])
    assert cfg.step == 0.25 and cfg.iters == 100


@pytest.mark.parametrize("args", [
    ["certify", "--function", "bogus:1"],
    ["certify", "--function", QUAD, "--nope", "1"],
    ["certify"],
    [],
    ["gd", "--function", QUAD, "--t", "4", "--step", "0.25"],
    ["gd", "--function", QUAD, "--t", "0"],
    ["suite", "--function", QUAD, "--box", "2:1"],
    ["suite", "--function", QUAD, "--box", "abc"],
    ["suite", "--function", QUAD, "--x0", "1,x"],
    ["suite", "--function", QUAD, "--pairs", "0"],
    ["launch", "--function", QUAD],
])
def test_parse_rejects(args):
    with pytest.raises(UsageError):
        parse_config(args)


def test_parse_other_flags():
    cfg = parse_config(["suite", "--function", QUAD, "--mu", "1", "--nu", "1", "--fbar", "0",
                        "--seed", "3", "--pairs", "50", "--box", "-1:3", "--x0", "1,2",
                        "--out", "somewhere"])
    assert cfg.constants == {"mu": 1.0, "nu": 1.0, "f_bar": 0.0}
    assert (cfg.seed, cfg.pairs, cfg.box, cfg.x0, cfg.output_dir) == (3, 50, (-1.0, 3.0),
                                                                      (1.0, 2.0), "somewhere")


def test_config_file_and_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"function": QUAD, "L": 5, "seed": 4, "box": "-1:1"}))
    cfg = parse_config(["certify", "--config", str(path), "--L", "4"])
    assert cfg.constants == {"L": 4.0} and cfg.seed == 4 and cfg.box == (-1.0, 1.0)
    assert parse_config(["certify"], config_file=str(path)).constants == {"L": 5.0}


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"function": QUAD, "colour": "red"}))
    with pytest.raises(UsageError):
        parse_config(["certify", "--config", str(bad)])
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(UsageError):
        parse_config(["certify", "--config", str(broken)])
    with pytest.raises(UsageError):
        parse_config(["certify", "--config", str(tmp_path / "missing.json")])


def test_echo_round_trip():
    cfg = parse_config(["suite", "--function", QUAD, "--seed", "9", "--pairs", "100"])
    assert ExperimentConfig(**cfg.echo()) == cfg


def _suite(tmp_path, spec, name, *extra):
    out = tmp_path / name
    code = main(["suite", "--function", spec, "--pairs", "300", "--seed", "7",
                 "--out", str(out), *extra])
    return code, out


def _rows(out):
    return json.loads((out / "report.json").read_text())["rows"]


def test_suite_quadratic(tmp_path):
    code, out = _suite(tmp_path, QUAD, "quad")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["rates"]["standard"] == 0.75 and rep["rates"]["improved"] == 0.6
    assert all(r["status"] in ("pass", "skipped") for r in rep["rows"])
    with open(out / "conditions.csv") as fh:
        table = list(csv.reader(fh))
    assert tuple(table[0]) == CONDITIONS_HEADER
    assert len(table) == 1 + 3 + 10 + 10 + 2 + 1
    assert (out / "trace.csv").read_text().startswith("iter,value,grad_norm,gap_ratio\n")


def test_suite_negative_phi0(tmp_path):
    code, out = _suite(tmp_path, "negative_phi0:2", "neg")
    assert code == 1
    status = {r["name"]: r["status"] for r in _rows(out)}
    for name in ("CONV1", "CONV2", "CONV3", "PSM1", "PSM2"):
        assert status[name] == "fail"
    assert all(status[n] == "pass" for n in ("SM1", "SM2", "SM3"))


def test_suite_rank1_least_squares(tmp_path):
    code, out = _suite(tmp_path, LS_RANK1, "ls")
    assert code == 0
    rows = {r["name"]: r for r in _rows(out)}
    assert rows["PL"]["status"] == "pass"
    assert rows["RATE_IMPROVED"]["status"] == "pass"
    strong = [r for r in _rows(out) if r.get("family") == "STRONG"]
    assert strong and all(r["informational"] for r in strong)


def test_suite_fails_on_claimed_mu(tmp_path):
    code, out = _suite(tmp_path, LS_RANK1, "ls_claim", "--mu", "0.5")
    assert code == 1


def test_suite_deterministic(tmp_path):
    _, a = _suite(tmp_path, QUAD, "a")
    _, b = _suite(tmp_path, QUAD, "b")
    assert (a / "conditions.csv").read_bytes() == (b / "conditions.csv").read_bytes()
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    ja, jb = (json.loads((d / "report.json").read_text()) for d in (a, b))
    ja.pop("metadata"), jb.pop("metadata")
    ja["config"].pop("output_dir"), jb["config"].pop("output_dir")
    assert ja == jb


def test_echoed_config_reproduces(tmp_path):
    cfg = parse_config(["suite", "--function", QUAD, "--pairs", "200", "--seed", "2"])
    first = run_suite(cfg)
    again = run_suite(ExperimentConfig(**first.config))
    assert first.conditions_csv() == again.conditions_csv()


def test_usage_exit_code(tmp_path, capsys):
    assert main(["certify", "--function", "bogus:1"]) == 2
    assert "usage error" in capsys.readouterr().err


def test_certify_command(tmp_path):
    out = tmp_path / "c"
    assert main(["certify", "--function", QUAD, "--L", "4", "--pairs", "200",
                 "--out", str(out)]) == 0
    assert main(["certify", "--function", QUAD, "--L", "3.8", "--pairs", "200",
                 "--out", str(out)]) == 1
    assert not (out / "trace.csv").exists()


def test_estimate_command(tmp_path):
    out = tmp_path / "e"
    assert main(["estimate", "--function", QUAD, "--pairs", "500", "--out", str(out)]) == 0
    est = json.loads((out / "report.json").read_text())["estimates"]
    assert est["L"]["value"] == pytest.approx(4.0, rel=0.02)
    assert est["mu"]["value"] == pytest.approx(1.0, rel=0.02)
    assert est["f_bar"]["source"] == "metadata"


def test_gd_command(tmp_path):
    out = tmp_path / "g"
    assert main(["gd", "--function", QUAD, "--t", "4", "--iters", "50", "--x0", "1,1",
                 "--out", str(out)]) == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert len(lines) == 52 and lines[1].startswith("0,2.5,")
    assert main(["gd", "--function", QUAD, "--step", "2.5", "--x0", "1,1",
                 "--out", str(out)]) == 1
    assert main(["gd", "--function", QUAD, "--x0", "1,1,1", "--out", str(out)]) == 2


def test_conjugate_command(tmp_path):
    out = tmp_path / "k"
    assert main(["conjugate", "--function", QUAD, "--pairs", "100", "--out", str(out)]) == 0
    names = [r["name"] for r in _rows(out)]
    assert names[:3] == ["FENCHEL", "INVERSE_GRADIENT", "ANALYTIC"]
    assert main(["conjugate", "--function", LS_RANK1, "--out", str(out)]) == 1
