import csv
import json
import os

import pytest

from reference_values import prefactor_bracket
from wavespeed import __version__
from wavespeed.cli import (
    EXIT_BRACKET,
    EXIT_CHECK_FAILED,
    EXIT_OK,
    ResultCache,
    cache_key,
    main,
    parse_config,
    parse_list,
)
from wavespeed.errors import DomainError


def _record(out, command):
    return json.loads((out / f"{command}_run.json").read_text())


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# min-speed -----------------------------------------------------------------------


def test_min_speed_rho_one(tmp_path, cache_env, capsys):
    assert main(["min-speed", "--nu", "0", "--rho", "1", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("c_star=2.000")
    assert "bracket=[" in out
    row = _rows(tmp_path / "min_speed.csv")[0]
    assert float(row["c_star"]) == pytest.approx(2.0, abs=5e-3)
    data = json.loads((tmp_path / "min_speed.json").read_text())
    assert data[0]["rho"] == 1.0
    rec = _record(tmp_path, "min-speed")
    assert rec["command"] == "min-speed"
    # the full merged map, defaults included
    assert set(rec["params"]) >= {"nu", "rho", "tol_c", "rel_tol", "abs_tol", "event_tol", "xi_budget", "out_dir"}
    assert all(os.path.exists(p) for p in rec["outputs"])
    assert rec["wall_time"] >= 0


def test_min_speed_large_rho(tmp_path, cache_env, capsys):
    assert main(["min-speed", "--nu", "0", "--rho", "1e6", "--out", str(tmp_path)]) == EXIT_OK
    pref = float(_rows(tmp_path / "min_speed.csv")[0]["prefactor"])
    assert 1.142 <= pref <= 1.148


def test_min_speed_negative_rho(tmp_path, cache_env, capsys):
    assert main(["min-speed", "--nu", "0", "--rho", "-1", "--out", str(tmp_path)]) == EXIT_BRACKET
    assert "rho must be positive" in capsys.readouterr().err
    assert not (tmp_path / "min_speed.csv").exists()


def test_cache_hit_and_bypass(tmp_path, cache_env, capsys):
    args = ["min-speed", "--nu", "0", "--rho", "3", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    first = (tmp_path / "min_speed.csv").read_bytes()
    store = cache_env / "results.jsonl"
    assert len(store.read_text().splitlines()) == 1
    assert main(args) == EXIT_OK
    assert len(store.read_text().splitlines()) == 1
    assert (tmp_path / "min_speed.csv").read_bytes() == first
    assert main(args + ["--no-cache"]) == EXIT_OK
    assert len(store.read_text().splitlines()) == 1
    assert (tmp_path / "min_speed.csv").read_bytes() == first


def test_result_cache_skips_bad_lines(tmp_path):
    cache = ResultCache(True, tmp_path)
    cache.put("k", {"a": 1})
    with open(tmp_path / "results.jsonl", "a") as fh:
        fh.write("not json\n")
    assert ResultCache(True, tmp_path).get("k") == {"a": 1}
    assert ResultCache(False, tmp_path).get("k") is None
    assert cache_key("x", {"a": 1}) == cache_key("x", {"a": 1})
    assert cache_key("x", {"a": 1}) != cache_key("x", {"a": 2})


def test_rerun_from_record_is_bitwise(tmp_path, cache_env, capsys):
    assert main(["min-speed", "--rho", "2", "--out", str(tmp_path / "a"), "--no-cache"]) == EXIT_OK
    params = _record(tmp_path / "a", "min-speed")["params"]
    cfg = tmp_path / "rerun.cfg"
    cfg.write_text("".join(f"{k} = {v}\n" for k, v in params.items() if k != "out_dir"))
    assert main(["min-speed", "--config", str(cfg), "--out", str(tmp_path / "b"), "--no-cache"]) == EXIT_OK
    assert (tmp_path / "a" / "min_speed.csv").read_bytes() == (tmp_path / "b" / "min_speed.csv").read_bytes()


# configuration ----------------------------------------------------------------------


def test_config_then_flags(tmp_path, cache_env, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nrho = 0.5\ntol-c = 1e-3  # dashes are fine\n\n")
    assert parse_config(cfg) == {"rho": "0.5", "tol_c": "1e-3"}
    out = tmp_path / "o"
    assert main(["min-speed", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rec = _record(out, "min-speed")
    assert rec["params"]["rho"] == 0.5 and rec["params"]["tol_c"] == 1e-3
    assert main(["min-speed", "--config", str(cfg), "--rho", "0.25", "--out", str(out)]) == EXIT_OK
    rec = _record(out, "min-speed")
    assert rec["params"]["rho"] == 0.25 and rec["params"]["tol_c"] == 1e-3


def test_config_errors(tmp_path, cache_env, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("rho 2\n")
    with pytest.raises(DomainError):
        parse_config(bad)
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour = red\n")
    assert main(["min-speed", "--config", str(unknown), "--out", str(tmp_path)]) == EXIT_BRACKET
    assert "colour" in capsys.readouterr().err


def test_parse_list():
    assert parse_list("1..10:4") == [1.0, 4.0, 7.0, 10.0]
    assert parse_list("0, 0.1,1") == [0.0, 0.1, 1.0]
    assert len(parse_list("0.5..8")) == 16
    assert parse_list("3..9:1") == [3.0]
    with pytest.raises(DomainError):
        parse_list(" , ")


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


# pde ------------------------------------------------------------------------------------


def test_pde_short_run(tmp_path, capsys):
    args = ["pde", "--nu", "1", "--rho", "1", "--t-end", "10", "--x-max", "40", "--dx", "0.1", "--out-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("speed=") and "plateau=" in out
    assert (tmp_path / "snapshot_t0.csv").exists() and (tmp_path / "snapshot_t10.csv").exists()
    assert _rows(tmp_path / "track.csv")[0].keys() == {"t", "x_front", "plateau"}
    rec = _record(tmp_path, "pde")
    assert rec["params"]["ic"] == "both" and rec["params"]["dx"] == 0.1
    assert len(rec["outputs"]) == 3


def test_pde_bad_parameters(tmp_path, capsys):
    assert main(["pde", "--t-end", "5", "--cfl", "2", "--out-dir", str(tmp_path)]) == EXIT_BRACKET
    assert "pde: parameters" in capsys.readouterr().err


def test_pde_blowup_exit(tmp_path, capsys):
    args = ["pde", "--nu", "0", "--rho", "1e5", "--t-end", "5", "--x-min", "-5", "--x-max", "20", "--dx", "0.1"]
    assert main(args + ["--out-dir", str(tmp_path)]) == 4
    assert "blow-up at t=" in capsys.readouterr().err


# tables ----------------------------------------------------------------------------------


def test_table1(tmp_path, cache_env, capsys):
    args = ["tables", "--which", "table1", "--nu-list", "0", "--rho-list", "1e4,1e2,1e3", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    rows = _rows(tmp_path / "table1.csv")
    assert [float(r["rho"]) for r in rows] == [1e2, 1e3, 1e4]
    for r in rows:
        lo, hi = prefactor_bracket(0.0, float(r["rho"]))
        assert lo - 0.002 <= float(r["prefactor"]) <= hi + 0.002
    assert _record(tmp_path, "tables")["params"]["which"] == "table1"


def test_table1_jobs_do_not_change_output(tmp_path, cache_env, capsys):
    base = ["tables", "--nu-list", "0,1", "--rho-list", "10,30", "--no-cache"]
    assert main(base + ["--jobs", "1", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(base + ["--jobs", "2", "--out", str(tmp_path / "b")]) == EXIT_OK
    assert (tmp_path / "a" / "table1.csv").read_bytes() == (tmp_path / "b" / "table1.csv").read_bytes()


def test_figure1(tmp_path, cache_env, capsys):
    args = ["tables", "--which", "figure1", "--nu-list", "0,1", "--rho-list", "0.5..8:3", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert "monotone_in_nu=True" in capsys.readouterr().out
    rows = _rows(tmp_path / "figure1.csv")
    assert len(rows) == 6
    for r in rows:
        assert float(r["c_star"]) >= float(r["lower_bound"]) - 1e-3 * float(r["c_star"])


def test_tables_validation(tmp_path, cache_env, capsys):
    assert main(["tables", "--rho-list", "1,-2", "--out", str(tmp_path)]) == EXIT_BRACKET
    assert main(["tables", "--nu-list", "-1", "--out", str(tmp_path)]) == EXIT_BRACKET


@pytest.mark.slow
def test_threshold_table(tmp_path, cache_env, capsys):
    assert main(["tables", "--which", "threshold", "--nu-list", "0", "--out", str(tmp_path)]) == EXIT_OK
    r = _rows(tmp_path / "threshold.csv")[0]
    assert 1.0 <= float(r["rho_hat"]) <= 16 / 3


# verify ----------------------------------------------------------------------------------


def test_verify_traps(tmp_path, capsys):
    assert main(["verify", "--suite", "traps", "--out", str(tmp_path)]) == EXIT_OK
    lines = [ln for ln in capsys.readouterr().out.splitlines() if not ln.startswith(" ")]
    assert len(lines) == 7 and all(ln.startswith("PASS") for ln in lines)
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert all(r["holds"] for r in report)


def test_verify_integrals(tmp_path, capsys):
    assert main(["verify", "--suite", "integrals", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 3 and "FAIL" not in out


def test_verify_integrals_without_wave(tmp_path, capsys):
    assert main(["verify", "--suite", "integrals", "--c", "1.9", "--out", str(tmp_path)]) == EXIT_CHECK_FAILED
    assert "no wave" in capsys.readouterr().err


def test_verify_aux_constant_fails(tmp_path, data_dir, capsys):
    path = os.path.join(data_dir, "h_const_neg1.txt")
    assert main(["verify", "--suite", "aux", "--config", path, "--out", str(tmp_path)]) == EXIT_CHECK_FAILED
    out = capsys.readouterr().out
    assert out.startswith("FAIL")
    # the failing boundary condition is named
    assert "violated" in out
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert not report[0]["holds"]
    assert any(v < 0 for v in report[0]["components"].values())


def test_verify_aux_certificate_passes(tmp_path, data_dir, capsys):
    path = os.path.join(data_dir, "h_inv_upper_deg2.txt")
    args = ["verify", "--suite", "aux", "--aux", path, "--c", "2.05", "--points", "101", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS")


def test_verify_aux_needs_file(tmp_path, capsys):
    assert main(["verify", "--suite", "aux", "--out", str(tmp_path)]) == EXIT_CHECK_FAILED
    assert "auxiliary-function file" in capsys.readouterr().err
