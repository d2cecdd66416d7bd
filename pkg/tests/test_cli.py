import json

import pytest

from orwalk.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_RUNTIME, ExperimentConfig, compare, main, run
from orwalk.io import read_csv


def _run(tmp_path, name, *args):
    out = tmp_path / name
    return main([*args, "--out", str(out)]), out


def test_dp_oracle_outputs(tmp_path):
    code, out = _run(tmp_path, "dp", "dp-oracle", "--env", "alternate", "--n", "2")
    assert code == EXIT_OK
    prov, rows = read_csv(out / "dp-oracle.csv")
    assert prov["master_seed"] == 0 and len(prov["config_hash"]) == 16
    origin = [r for r in rows if r["statistic"] == "mass[0,0]"]
    assert origin[0]["value"] == "2/9"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] is True
    cfg = json.loads((out / "effective_config.json").read_text())["config"]
    assert cfg["n"] == 2 and cfg["env"] == {"kind": "alternate"}


def test_unknown_config_key_is_rejected(tmp_path, caplog):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": "returns", "horizonz": [10]}))
    code, _ = _run(tmp_path, "x", "returns", "--config", str(path))
    assert code == EXIT_CONFIG
    assert "horizonz" in caplog.text


def test_bad_values_are_config_errors(tmp_path):
    assert _run(tmp_path, "a", "returns", "--samples", "0")[0] == EXIT_CONFIG
    assert _run(tmp_path, "b", "returns", "--env", "spiral")[0] == EXIT_CONFIG
    assert main(["returns", "--no-such-flag"]) == EXIT_CONFIG


def test_budget_error_exit_code(tmp_path):
    assert _run(tmp_path, "big", "dp-oracle", "--n", "40")[0] == EXIT_RUNTIME


def test_failed_tolerance_exit_code(tmp_path):
    code, out = _run(tmp_path, "h", "series-H", "--N", "256")
    assert code == EXIT_FAIL
    assert json.loads((out / "summary.json").read_text())["passed"] is False


def test_rerun_from_effective_config_is_byte_identical(tmp_path):
    code, out = _run(tmp_path, "r1", "returns", "--env", "half-plane", "--samples", "300",
                     "--horizons", "50,500", "--seed", "3", "--workers", "1")
    assert code == EXIT_OK
    code, out2 = _run(tmp_path, "r2", "returns", "--config", str(out / "effective_config.json"), "--workers", "2")
    assert code == EXIT_OK
    assert (out / "returns.csv").read_bytes() == (out2 / "returns.csv").read_bytes()


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("ORWALK_SEED", "17")
    code, out = _run(tmp_path, "s", "speed", "--samples", "50", "--checkpoints", "10")
    assert code == EXIT_OK
    prov, _ = read_csv(out / "speed.csv")
    assert prov["master_seed"] == 17


def test_flags_override_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": "speed", "n_samples": 40, "checkpoints": [10]}))
    code, out = _run(tmp_path, "o", "speed", "--config", str(path), "--samples", "60")
    assert code == EXIT_OK
    _, rows = read_csv(out / "speed.csv")
    assert rows[0]["n_samples"] == "60"


def test_json_format_and_compare(tmp_path):
    code, a = _run(tmp_path, "a", "dp-oracle", "--env", "half-plane", "--n", "6", "--format", "json")
    assert code == EXIT_OK
    code, b = _run(tmp_path, "b", "dp-oracle", "--env", "half-plane", "--n", "6")
    assert code == EXIT_OK
    report = compare(a, b)
    assert report["n_common"] > 0 and report["max_abs_delta"] == 0
    assert report["only_in_a"] == report["only_in_b"] == 0


def test_compare_simulation_with_oracle(tmp_path):
    _, sim = _run(tmp_path, "sim", "simulate", "--env", "alternate", "--n", "6", "--samples", "50000")
    _, exact = _run(tmp_path, "ex", "dp-oracle", "--env", "alternate", "--n", "6")
    report = compare(sim, exact)
    assert report["n_common"] > 10
    assert report["max_abs_z"] < 5


def test_compare_cli(tmp_path, capsys):
    _, a = _run(tmp_path, "a", "green-check", "--dims", "1", "--masses", "1")
    _, b = _run(tmp_path, "b", "green-check", "--dims", "1", "--masses", "1")
    capsys.readouterr()
    assert main(["compare", str(a), str(b)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["max_abs_delta"] == 0
    assert main(["compare", str(a)]) == EXIT_CONFIG


def test_config_hash_ignores_workers_and_output(tmp_path):
    c1 = ExperimentConfig("dp-oracle", n=3, output_dir=str(tmp_path / "p"), workers=1)
    c2 = ExperimentConfig("dp-oracle", n=3, output_dir=str(tmp_path / "q"), workers=2)
    assert run(c1) == run(c2) == EXIT_OK
    h1 = read_csv(tmp_path / "p" / "dp-oracle.csv")[0]["config_hash"]
    h2 = read_csv(tmp_path / "q" / "dp-oracle.csv")[0]["config_hash"]
    assert h1 == h2


def test_delta_lemmas_message(tmp_path, capsys):
    code, _ = _run(tmp_path, "d", "delta-lemmas", "--max-len", "8", "--pair-total", "6", "--n-random", "100")
    assert code == EXIT_OK
    assert "all excursions pass" in capsys.readouterr().out


@pytest.mark.parametrize("exp", ["skeleton-check", "resolvent-check"])
def test_small_checks_pass(tmp_path, exp):
    args = [exp, "--samples", "50", "--n", "40"] if exp == "skeleton-check" else [exp, "--graphs", "3"]
    assert _run(tmp_path, exp, *args)[0] == EXIT_OK


def test_run_prefix_delta_lemmas_full_budget(tmp_path, capsys):
    code, out = _run(tmp_path, "dl", "run", "delta-lemmas", "--max-len", "16")
    assert code == EXIT_OK
    assert "all excursions pass" in capsys.readouterr().out
    assert json.loads((out / "summary.json").read_text())["message"] == "all excursions pass"


def test_monte_carlo_returns_against_oracle(tmp_path):
    _, mc = _run(tmp_path, "mc", "returns", "--env", "alternate", "--horizons", ",".join(map(str, range(1, 13))),
                 "--samples", "200000")
    _, ex = _run(tmp_path, "ex", "dp-oracle", "--env", "alternate", "--n", "12")
    report = compare(mc, ex)
    assert report["n_common"] == 12
    assert report["max_abs_z"] <= 4


def test_series_verdicts_populated(tmp_path):
    _, sl = _run(tmp_path, "sl", "series-L", "--N", "256")
    _, sh = _run(tmp_path, "sh", "series-H", "--N", "256")
    report = compare(sl, sh)
    assert report["verdict_a"]["kind"] == "divergence" and report["verdict_a"]["increments"]
    assert report["verdict_b"]["kind"] == "cauchy" and "n0" in report["verdict_b"]


def test_compare_schema_mismatch(tmp_path):
    _, a = _run(tmp_path, "a", "series-L", "--N", "64")
    _, b = _run(tmp_path, "b", "green-check", "--dims", "1", "--masses", "1")
    with pytest.raises(ValueError):
        compare(a, b)
    assert main(["compare", str(a), str(b)]) == EXIT_RUNTIME
