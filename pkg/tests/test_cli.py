import json

import numpy as np
import pytest

from sncusum import cli
from sncusum.simulation import mean_value


def write_series(path, values, header=None):
    lines = ([header] if header else []) + [repr(float(v)) for v in values]
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture(scope="module")
def cache_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("nullcache")
    code = cli.main(
        ["nulldist", "--steps", "200", "--reps", "2000", "--seed", "5", "--out", str(out)]
    )
    assert code == 0
    return out


@pytest.fixture()
def gauss_csv(tmp_path):
    path = tmp_path / "series.csv"
    write_series(path, np.random.default_rng(0).standard_normal(400), header="value")
    return path


def run_cli(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- test subcommand -----------------------------------------------------------

def test_cmd_test_json_contract(capsys, cache_dir, gauss_csv):
    code, out, _ = run_cli(
        capsys,
        ["test", "--input", str(gauss_csv), "--method", "full-v2",
         "--alpha", "0.05", "--null-cache", str(cache_dir)],
    )
    assert code == 0
    result = json.loads(out)
    assert list(result) == ["method", "n", "b_n", "statistic", "threshold", "p_value", "reject"]
    assert result["method"] == "sn_full_v2"
    assert result["n"] == 400
    assert result["b_n"] == 9
    assert isinstance(result["reject"], bool)
    assert 0.0 < result["p_value"] <= 1.0


def test_cmd_test_variants_share_geometry(capsys, cache_dir, gauss_csv):
    outputs = {}
    for method in ("full-v1", "full-v2"):
        code, out, _ = run_cli(
            capsys,
            ["test", "--input", str(gauss_csv), "--method", method,
             "--null-cache", str(cache_dir)],
        )
        assert code == 0
        outputs[method] = json.loads(out)
    v1, v2 = outputs["full-v1"], outputs["full-v2"]
    assert (v1["n"], v1["b_n"]) == (v2["n"], v2["b_n"])
    assert v1["statistic"] != v2["statistic"]
    assert v1["threshold"] != v2["threshold"]


def test_cmd_test_detects_step_change(capsys, cache_dir, tmp_path):
    n = 1000
    grid = np.arange(1, n + 1) / n
    x = mean_value(3, grid) + 0.25 * np.random.default_rng(1).standard_normal(n)
    path = tmp_path / "step.csv"
    write_series(path, x)
    for method in ("simple", "full-v2"):
        code, out, _ = run_cli(
            capsys,
            ["test", "--input", str(path), "--method", method,
             "--null-cache", str(cache_dir)],
        )
        assert code == 0
        assert json.loads(out)["reject"] is True


def test_cmd_test_lrv_needs_no_cache(capsys, gauss_csv):
    code, out, _ = run_cli(capsys, ["test", "--input", str(gauss_csv), "--method", "lrv"])
    assert code == 0
    assert json.loads(out)["method"] == "r_lrv"


def test_cmd_test_null_pvalues_approximately_uniform(capsys, cache_dir, tmp_path):
    # under a constant mean, p-values concentrate above the level for the
    # (conservative) full rule; p > 0.05 in well over 90% of runs
    path = tmp_path / "u.csv"
    above = 0
    runs = 200
    for seed in range(runs):
        write_series(path, np.random.default_rng([1000, seed]).standard_normal(400))
        code, out, _ = run_cli(
            capsys,
            ["test", "--input", str(path), "--method", "full-v2",
             "--null-cache", str(cache_dir)],
        )
        assert code == 0
        above += json.loads(out)["p_value"] > 0.05
    assert above >= 0.9 * runs


def test_cmd_test_degenerate_exit_code(capsys, cache_dir, tmp_path):
    path = tmp_path / "const.csv"
    write_series(path, np.zeros(300))
    code, _, err = run_cli(
        capsys,
        ["test", "--input", str(path), "--method", "simple", "--null-cache", str(cache_dir)],
    )
    assert code == 2
    assert "degenerate" in err


def test_cmd_test_missing_cache_instructs_precompute(capsys, gauss_csv, tmp_path):
    code, _, err = run_cli(
        capsys,
        ["test", "--input", str(gauss_csv), "--method", "simple",
         "--null-cache", str(tmp_path / "empty")],
    )
    assert code == 1
    assert "nulldist" in err


def test_cmd_test_parse_error_reports_line(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("value\n1.0\n2.0\noops\n4.0\n")
    code, _, err = run_cli(capsys, ["test", "--input", str(path), "--method", "lrv"])
    assert code == 3
    assert ":4:" in err and "oops" in err


def test_cmd_test_missing_file(capsys, tmp_path):
    code, _, err = run_cli(
        capsys, ["test", "--input", str(tmp_path / "nope.csv"), "--method", "lrv"]
    )
    assert code == 3


def test_cmd_test_short_series(capsys, cache_dir, tmp_path):
    path = tmp_path / "short.csv"
    write_series(path, np.random.default_rng(2).standard_normal(200))
    code, _, err = run_cli(
        capsys,
        ["test", "--input", str(path), "--method", "full-v2",
         "--block-size", "3", "--null-cache", str(cache_dir)],
    )
    assert code == 1
    assert "too short" in err


def test_cmd_test_env_cache_dir(capsys, cache_dir, gauss_csv, monkeypatch):
    monkeypatch.setenv(cli.CACHE_ENV, str(cache_dir))
    code, out, _ = run_cli(capsys, ["test", "--input", str(gauss_csv), "--method", "simple"])
    assert code == 0
    assert json.loads(out)["method"] == "sn_simple"


def test_usage_errors_exit_one(capsys):
    assert cli.main(["test", "--method", "simple"]) == 1  # missing --input
    assert cli.main(["frobnicate"]) == 1
    capsys.readouterr()


# --- nulldist subcommand -----------------------------------------------------------

def test_nulldist_writes_both_caches(cache_dir):
    assert (cache_dir / "simple-ratio.snq").exists()
    assert (cache_dir / "full-ratio.snq").exists()
    header = (cache_dir / "simple-ratio.snq").read_text().splitlines()[0]
    assert header == "snq v1 simple-ratio m=200 N=2000 seed=5"
    header = (cache_dir / "full-ratio.snq").read_text().splitlines()[0]
    assert header == "snq v1 full-ratio m=200 N=2000 seed=6"


def test_nulldist_reruns_byte_identical(capsys, cache_dir, tmp_path):
    out = tmp_path / "again"
    code, stdout, _ = run_cli(
        capsys,
        ["nulldist", "--steps", "200", "--reps", "2000", "--seed", "5", "--out", str(out)],
    )
    assert code == 0
    for name in ("simple-ratio.snq", "full-ratio.snq"):
        assert (out / name).read_bytes() == (cache_dir / name).read_bytes()
    summary = json.loads(stdout)
    assert summary["simple-ratio"]["quantiles"]["0.95"] > 1.0


def test_nulldist_seed_sensitivity(capsys, tmp_path):
    qs = {}
    for seed in ("21", "22"):
        code, stdout, _ = run_cli(
            capsys,
            ["nulldist", "--steps", "200", "--reps", "2000", "--seed", seed,
             "--out", str(tmp_path / seed)],
        )
        assert code == 0
        qs[seed] = json.loads(stdout)["full-ratio"]["quantiles"]["0.95"]
    assert qs["21"] != qs["22"]
    assert abs(qs["21"] - qs["22"]) / qs["21"] < 0.15


# --- simulate subcommand --------------------------------------------------------------

def test_simulate_smoke_cell(capsys, cache_dir, tmp_path):
    out = tmp_path / "sim"
    code, stdout, _ = run_cli(
        capsys,
        ["simulate", "--grid", "mu=0;sigma=0;c=1;eps=iid;n=120", "--reps", "100",
         "--seed", "3", "--out", str(out), "--null-cache", str(cache_dir)],
    )
    assert code == 0
    written = json.loads(stdout)["written"]
    assert str(out / "cells.csv") in written
    lines = (out / "cells.csv").read_text().splitlines()
    assert lines[0].startswith("# sn-cusum simulate seed=3 replications=100")
    assert lines[1] == (
        "mean,sigma,c_sigma,errors,n,replications,r_lrv,sn_simple,sn_full_v1,"
        "sn_full_v2,degenerate"
    )
    assert len(lines) == 3


def test_simulate_rerun_byte_identical(capsys, cache_dir, tmp_path):
    args = ["simulate", "--grid", "mu=0;eps=iid,ma;n=100", "--reps", "50", "--seed", "9",
            "--tests", "r_lrv,sn_full_v2", "--null-cache", str(cache_dir)]
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        code, _, _ = run_cli(capsys, args + ["--out", str(out)])
        assert code == 0
        outs.append(out)
    assert (outs[0] / "cells.csv").read_bytes() == (outs[1] / "cells.csv").read_bytes()
    # eps has two values, so an aggregate by (n, errors) is emitted
    assert (outs[0] / "aggregate_errors.csv").exists()
    agg = (outs[0] / "aggregate_errors.csv").read_text().splitlines()
    assert agg[1] == "n,errors,replications,r_lrv,sn_full_v2,degenerate"


def test_simulate_bad_grid_spec(capsys, cache_dir, tmp_path):
    code, _, err = run_cli(
        capsys,
        ["simulate", "--grid", "nope=1", "--reps", "50",
         "--out", str(tmp_path / "x"), "--null-cache", str(cache_dir)],
    )
    assert code == 1
    assert "grid" in err


# --- validate subcommand ---------------------------------------------------------------

def test_validate_default_passes(capsys):
    code, out, _ = run_cli(capsys, ["validate"])
    assert code == 0
    reports = json.loads(out)
    assert all(r["passed"] for r in reports)
    assert {"name", "deviation", "tolerance", "params", "passed"} <= set(reports[0])


def test_validate_strict_fails(capsys):
    code, out, _ = run_cli(capsys, ["validate", "--strict"])
    assert code == 1
    assert any(not r["passed"] for r in json.loads(out))


# --- aggregate subcommand ----------------------------------------------------------------

def test_aggregate_single_year(capsys, tmp_path):
    src = tmp_path / "daily.csv"
    src.write_text("date,value\n2001-07-01,1\n2001-07-02,2\n2001-07-03,3\n")
    dst = tmp_path / "annual.csv"
    code, _, _ = run_cli(capsys, ["aggregate", "--input", str(src), "--out", str(dst)])
    assert code == 0
    assert dst.read_text() == "year,value\n2001,2.000000\n"


def test_aggregate_interleaved_years_sorted(capsys, tmp_path):
    src = tmp_path / "daily.csv"
    src.write_text("2002-07-01,4\n2001-07-01,1\n2002-07-02,6\n2001-07-02,3\n")
    dst = tmp_path / "annual.csv"
    code, _, _ = run_cli(capsys, ["aggregate", "--input", str(src), "--out", str(dst)])
    assert code == 0
    assert dst.read_text() == "year,value\n2001,2.000000\n2002,5.000000\n"


def test_aggregate_missing_values_counted(capsys, tmp_path):
    src = tmp_path / "daily.csv"
    src.write_text(
        "date,value\n2001-07-01,1\n2001-07-02,\n2001-07-03,3\n"
        "2003-07-01,NA\n2003-07-02,nan\n2004-07-01,7\n"
    )
    dst = tmp_path / "annual.csv"
    code, _, err = run_cli(capsys, ["aggregate", "--input", str(src), "--out", str(dst)])
    assert code == 0
    assert "skipped 3 row(s)" in err
    assert "year 2003" in err and "omitted" in err
    assert dst.read_text() == "year,value\n2001,2.000000\n2004,7.000000\n"


def test_aggregate_bad_rows(capsys, tmp_path):
    src = tmp_path / "bad.csv"
    src.write_text("date,value\n2001-07-01,1\nnot-a-date,2\n")
    dst = tmp_path / "annual.csv"
    code, _, err = run_cli(capsys, ["aggregate", "--input", str(src), "--out", str(dst)])
    assert code == 3
    assert ":3:" in err

    src.write_text("date,value\n2001-07-01,1,9\n")
    code, _, err = run_cli(capsys, ["aggregate", "--input", str(src), "--out", str(dst)])
    assert code == 3
    assert "two columns" in err
