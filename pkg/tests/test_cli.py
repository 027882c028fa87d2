import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from tiltmoments.cli import main
from tiltmoments.config import CONFIG_SCHEMA, ConfigError, load_config, parse_config
from tiltmoments.karamata import VariationClass
from tiltmoments.oracle import MomentSet

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_classify_builtins(capsys):
    code, out, _ = run(["classify", str(CONFIGS / "weibull2.json")], capsys)
    assert code == 0 and json.loads(out)["kind"] == "RegularlyVarying"
    code, out, _ = run(["classify", str(CONFIGS / "expexp.json")], capsys)
    assert code == 0 and json.loads(out)["kind"] == "RapidlyVarying"


def test_classify_json_roundtrip_is_bit_exact(capsys, weibull2):
    from tiltmoments.karamata import classify

    _, out, _ = run(["classify", str(CONFIGS / "weibull2.json")], capsys)
    back = VariationClass.from_dict(json.loads(out))
    direct = classify(weibull2)
    assert back.beta == direct.beta and back.beta_stderr == direct.beta_stderr
    assert back.theta == direct.theta


def test_malformed_expression_exit_1(tmp_path, capsys):
    code, _, err = run(["classify", write(tmp_path, {"model": {"g": "x^2 +* 3"}})], capsys)
    assert code == 1 and "position" in err


@pytest.mark.parametrize("doc", [
    "{not json",
    {"model": {"builtin": "weibull", "params": [0.5]}},
    {"model": {"builtin": "gamma"}},
    {"model": {"g": "x^2"}, "t_grid": {"start": 0.5, "stop": 100, "points": 3}},
    {"model": {"g": "x^2"}, "t_grid": {"values": [10, 5]}},
    {"model": {"g": "x^2"}, "j_max": 1},
    {"model": {"g": "x^2"}, "unknown": 1},
    {"model": {"g": "x^2"}, "karamata": {"x_low": 10, "x_high": 1000}},
])
def test_config_errors_exit_1(tmp_path, capsys, doc):
    code, _, err = run(["report", write(tmp_path, doc), "--out", str(tmp_path / "o")], capsys)
    assert code == 1 and err.startswith("error")


def test_missing_file_and_bad_arguments(tmp_path, capsys):
    assert run(["classify", str(tmp_path / "nope.json")], capsys)[0] == 1
    assert run(["evaluate", str(CONFIGS / "weibull2.json")], capsys)[0] == 1  # --t missing
    assert run(["evaluate", str(CONFIGS / "weibull2.json"), "--t", "-1"], capsys)[0] == 1
    assert run(["evaluate", str(CONFIGS / "weibull2.json"), "--t", "nan"], capsys)[0] == 1
    assert run(["frobnicate", "x"], capsys)[0] == 1


def test_evaluate_examples(capsys):
    code, out, _ = run(["evaluate", str(CONFIGS / "weibull2.json"), "--t", "3.5"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["tilt_point"]["x_hat"] == 2.0
    assert doc["tilt_point"]["K_hat"] == pytest.approx(3 + math.log(2), rel=1e-15)
    # the exact MomentSet round-trips bit-exactly through JSON
    ms = MomentSet.from_dict(doc["exact"])
    assert ms.to_dict() == doc["exact"]
    code, out, _ = run(["evaluate", str(CONFIGS / "expexp.json"), "--t", "10"], capsys)
    assert json.loads(out)["tilt_point"]["x_hat"] == pytest.approx(3.302585, abs=1e-6)


def test_evaluate_at_zero_omits_asymptotics(capsys):
    code, out, _ = run(["evaluate", str(CONFIGS / "weibull2.json"), "--t", "0"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["asymptotic"] is None and doc["notes"]
    assert doc["exact"]["m"] == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)


def test_numerical_failure_exit_3(tmp_path, capsys):
    # the saddlepoint would sit beyond the supported range x <= 1e12
    code, _, err = run(["evaluate", str(CONFIGS / "weibull2.json"), "--t", "1e13"], capsys)
    assert code == 3 and "numerical failure" in err


def test_verify(capsys, tmp_path):
    code, out, _ = run(["verify", str(CONFIGS / "expexp.json"), "--out", str(tmp_path)], capsys)
    assert code == 0 and json.loads(out)["passed"]
    assert (tmp_path / "verify.json").read_text() == out
    code, out, _ = run(["verify", str(CONFIGS / "unsupported_linear.json")], capsys)
    assert code == 2 and not json.loads(out)["passed"]


def test_unsupported_report_still_written(tmp_path, capsys):
    code, out, _ = run(["report", str(CONFIGS / "unsupported_linear.json"), "--out", str(tmp_path)], capsys)
    assert code == 2 and "UNSUPPORTED" in out
    assert json.loads((tmp_path / "report.json").read_text())["verdict"] == "UNSUPPORTED"


def test_report_writes_json_and_csv(tmp_path, capsys):
    code, out, _ = run(["report", str(CONFIGS / "weibull2.json"), "--out", str(tmp_path)], capsys)
    assert code == 0 and "PASS" in out
    csvs = sorted(p.name for p in tmp_path.glob("series_*.csv"))
    assert len(csvs) >= 8
    assert "series_log_phi.csv" in csvs and "series_psi_alpha4.csv" in csvs
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] == "PASS"


def test_shipped_configs_validate():
    for p in sorted(set(CONFIGS.glob("*.json")) - {CONFIGS / "schema.json"}):
        load_config(p)
    assert CONFIG_SCHEMA["additionalProperties"] is False
    with pytest.raises(ConfigError):
        parse_config({"t_grid": {"values": [10]}})


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "tiltmoments", "classify", str(CONFIGS / "expexp.json")],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["kind"] == "RapidlyVarying"


def test_shipped_schema_matches_code():
    shipped = json.loads((CONFIGS / "schema.json").read_text())
    assert shipped == json.loads(json.dumps(CONFIG_SCHEMA))
