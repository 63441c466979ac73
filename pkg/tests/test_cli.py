import warnings

import pandas as pd
import pytest

from upcoding_rmtl.cli import EXPORT_COLUMNS, main
from upcoding_rmtl.harness import RESULT_COLUMNS, SUMMARY_COLUMNS

SMALL = ["--n", "400", "--replicates", "2", "--ma-degrees", "0.2,0.3", "--undercoding-levels", "0,0.1"]


@pytest.fixture(autouse=True)
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def test_simulate_then_estimate(tmp_path):
    assert main(["simulate", "--n", "300", "--degree", "0.25", "--out-dir", str(tmp_path)]) == 0
    cohorts = pd.read_csv(tmp_path / "cohorts.csv")
    assert set(cohorts["group"]) == {0, 1}
    assert main(["estimate", str(tmp_path / "cohorts.csv"), "--epsilon", "0.05", "--out-dir", str(tmp_path)]) == 0
    est = pd.read_csv(tmp_path / "estimates.csv")
    assert list(est.columns) == EXPORT_COLUMNS
    assert {"F_hat", "mu", "psi", "psi_star", "psi_M", "psi_M_star", "deci"} <= set(est["estimator"])


def test_scenario_aggregate_plotdata(tmp_path):
    out = tmp_path / "run"
    assert main(["scenario", *SMALL, "--seed", "7", "--out-dir", str(out)]) == 0
    results = pd.read_csv(out / "results.csv")
    assert list(results.columns) == RESULT_COLUMNS
    assert list(pd.read_csv(out / "summary.csv").columns) == SUMMARY_COLUMNS
    assert main(["aggregate", str(out / "results.csv"), "--out-dir", str(tmp_path / "agg")]) == 0
    assert (tmp_path / "agg" / "summary.csv").read_text() == (out / "summary.csv").read_text()
    assert main(["plotdata", str(out / "results.csv"), "--out-dir", str(out)]) == 0
    for kind in ("cif", "psi", "deci"):
        assert (out / f"plot_{kind}.csv").exists()


def test_config_file_and_byte_identical_reruns(tmp_path):
    cfg = tmp_path / "study.ini"
    cfg.write_text("[scenario]\nscenario = 2\nn = 400\nreplicates = 2\nma_degrees = 0.2\nundercoding_levels = 0\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["scenario", "--config", str(cfg), "--out-dir", str(a)]) == 0
    assert main(["scenario", "--config", str(cfg), "--threads", "2", "--out-dir", str(b)]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert "omega" in set(pd.read_csv(a / "results.csv")["estimator"])
    assert "scenario = 2" in (a / "config.ini").read_text()


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nscenario = 5\n")
    assert main(["scenario", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "scenario must be 1 or 2" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["plotdata", str(tmp_path / "missing.csv"), "--kind", "bars"])
