import warnings

import numpy as np
import pandas as pd
import pytest

from upcoding_rmtl.harness import (
    RESULT_COLUMNS,
    ConfigError,
    ScenarioConfig,
    ScenarioError,
    aggregate,
    default_reference_events,
    emit_plot_data,
    load_config,
    run_cell,
    run_scenario,
)


def small(**kw):
    base = dict(n=800, replicates=2, ma_degrees=(0.2, 0.3), undercoding_levels=(0.0, 0.1))
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.fixture(scope="module")
def results():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return run_scenario(small())


class TestConfig:
    def test_scenario_defaults(self):
        one, two = ScenarioConfig(scenario=1), ScenarioConfig(scenario=2)
        assert (one.target_hcc, one.upcoding_mode) == (238, "any_available")
        assert (two.target_hcc, two.upcoding_mode) == (125, "severity_based")
        assert 238 not in one.reference_events

    def test_default_reference_events_are_hierarchy_free(self, catalog):
        refs = default_reference_events(238, catalog)
        assert refs and all(not catalog.excluded_by(h) for h in refs)

    @pytest.mark.parametrize(
        "kw",
        [
            dict(scenario=3),
            dict(replicates=0),
            dict(tm_degree=1.5),
            dict(ma_degrees=(0.2, -0.1)),
            dict(scenario=2, target_hcc=238),
            dict(risk_set="rolling"),
            dict(reference_events=()),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ScenarioConfig(**kw)

    def test_ini_round_trip(self, tmp_path):
        cfg = small(scenario=2, ltfu_per_timepoint=0.01, tau=4.5, clamp_shift=True)
        path = tmp_path / "c.ini"
        path.write_text(cfg.to_ini())
        assert load_config(path) == cfg
        assert load_config(path, n=123).n == 123

    def test_ini_errors(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[scenario]\nbogus = 1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(path)
        path.write_text("[other]\n")
        with pytest.raises(ConfigError, match="missing"):
            load_config(path)

    def test_overrides_follow_new_scenario(self):
        assert small().with_overrides(scenario=2).target_hcc == 125


class TestRunScenario:
    def test_schema_and_size(self, results):
        assert list(results.columns) == RESULT_COLUMNS
        cells = results.groupby(["undercoding_level", "upcoding_degree", "replicate"]).ngroups
        assert cells == 2 * 2 * 2
        names = set(results["estimator"])
        assert names == {"F_hat", "mu", "psi", "psi_star", "psi_M", "psi_M_star", "epsilon", "deci"}

    def test_scenario_two_adds_omega(self):
        df = run_scenario(small(scenario=2, replicates=1, undercoding_levels=(0.0,)))
        assert "omega" in set(df["estimator"])
        assert set(df.loc[df.estimator == "mu", "hcc"]) == {125, 126, 127}

    def test_null_scenario(self):
        cfg = small(replicates=1, ma_degrees=(0.0,), tm_degree=0.0, undercoding_levels=(0.0,))
        df = run_scenario(cfg)
        psi = df[df.estimator == "psi"]["value"]
        assert len(psi) == 2 and (psi == 0).all()
        assert (df[df.estimator == "epsilon"]["value"] == 0).all()

    def test_deterministic_and_thread_independent(self, results):
        again = run_scenario(small(), threads=2)
        assert results.to_csv(index=False) == again.to_csv(index=False)

    def test_replicate_order_is_irrelevant(self, results):
        shuffled = run_scenario(small(), replicates=[1, 0])
        assert aggregate(shuffled).to_csv(index=False) == aggregate(results).to_csv(index=False)

    def test_cells_are_individually_rerunnable(self, results):
        rows = pd.DataFrame(run_cell(small(), 1, 0.1, 0.3), columns=RESULT_COLUMNS)
        full = results[(results.replicate == 1) & (results.undercoding_level == 0.1) & (results.upcoding_degree == 0.3)]
        np.testing.assert_array_equal(rows["value"].to_numpy(), full["value"].to_numpy())

    def test_seed_changes_output(self, results):
        other = run_scenario(small(base_seed=1))
        assert not np.array_equal(other["value"].to_numpy(), results["value"].to_numpy())

    def test_failure_carries_context(self):
        cfg = small(n=3, replicates=1, ma_degrees=(0.2,), undercoding_levels=(0.0,), reference_events=(1,))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(ScenarioError, match="replicate 0"):
                run_scenario(cfg)

    def test_equal_degrees_are_null_calibrated(self):
        cfg = small(n=3000, replicates=20, ma_degrees=(0.1,), tm_degree=0.1, undercoding_levels=(0.0,))
        s = aggregate(run_scenario(cfg))
        for _, row in s[s.estimator == "psi"].iterrows():
            assert abs(row["mean"]) <= 3 * row["sd"] / np.sqrt(row["replicates"])


class TestAggregate:
    def frame(self, values):
        rows = [(1, r, 1, 0.0, 0.2, pd.NA, 238, "psi", np.nan, v, 0.01) for r, v in enumerate(values)]
        return pd.DataFrame(rows, columns=RESULT_COLUMNS)

    def test_two_replicates(self):
        s = aggregate(self.frame([0.2, 0.4]))
        assert s["mean"].iloc[0] == pytest.approx(0.3)
        assert s["sd"].iloc[0] == pytest.approx(0.1414, abs=1e-4)
        assert s["mean_variance"].iloc[0] == pytest.approx(0.01)

    def test_single_replicate(self):
        s = aggregate(self.frame([0.25]))
        assert s["mean"].iloc[0] == 0.25 and s["sd"].iloc[0] == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate(self.frame([]))


class TestPlotData:
    def test_schemas(self, results, tmp_path):
        cif = emit_plot_data(results, "cif", tmp_path / "cif.csv")
        assert list(cif.columns) == ["time", "group", "period", "undercoding", "F_hat"]
        assert list(pd.read_csv(tmp_path / "cif.csv").columns) == list(cif.columns)
        psi = emit_plot_data(results, "psi")
        assert list(psi.columns) == ["degree", "period", "undercoding", "psi_hat"]
        deci = emit_plot_data(results, "deci")
        assert list(deci.columns) == ["undercoding", "degree", "period", "deci"]
        assert len(deci) == 2 * 2 * 2

    def test_missing_rows(self, results):
        with pytest.raises(ValueError, match="deci"):
            emit_plot_data(results[results.estimator != "deci"], "deci")
        with pytest.raises(ValueError, match="F_hat"):
            emit_plot_data(results[results.estimator != "F_hat"], "cif")
        with pytest.raises(ValueError, match="kind"):
            emit_plot_data(results, "histogram")

    def test_null_psi_series_is_flat(self):
        cfg = small(replicates=1, ma_degrees=(0.0,), tm_degree=0.0, undercoding_levels=(0.0,))
        psi = emit_plot_data(run_scenario(cfg), "psi")
        assert (psi["psi_hat"] == 0).all()
