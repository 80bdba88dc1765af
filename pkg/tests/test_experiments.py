import pytest

from tsproj.experiments import (BenchResult, ExperimentConfig, SCENARIOS,
                                STABILITY_DGPS, paper_scale, rep_seed,
                                run_scenario, worker_count, write_results)
from tsproj.series import check_stationarity


class TestConfig:
    def test_paper_scale(self):
        config = paper_scale(ExperimentConfig("stability"))
        assert config.replications == 100
        assert config.length == 500

    def test_rep_seed_deterministic_and_distinct(self):
        seeds = [rep_seed(0, rep) for rep in range(50)]
        assert seeds == [rep_seed(0, rep) for rep in range(50)]
        assert len(set(seeds)) == 50
        assert rep_seed(1, 0) != rep_seed(0, 0)

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            run_scenario(ExperimentConfig("nope"))

    def test_scenarios_registered(self):
        assert set(SCENARIOS) == {"stability", "sarma-stability", "noise",
                                  "distant-lags", "arma-to-ar",
                                  "bad-projection"}

    def test_worker_count_env(self, monkeypatch):
        monkeypatch.setenv("TSPROJ_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("TSPROJ_THREADS", "0")
        assert worker_count() == 1

    def test_stability_dgps_stationary(self):
        for params, _ in STABILITY_DGPS.values():
            assert check_stationarity(params.phi)
            assert check_stationarity(-params.theta)


class TestSelectionCounts:
    def test_frequencies_sum_to_one(self):
        rows = [
            {"scenario": "s", "procedure": "a", "level": "", "p": 1, "q": 0,
             "P": "", "Q": ""},
            {"scenario": "s", "procedure": "a", "level": "", "p": 1, "q": 2,
             "P": "", "Q": ""},
            {"scenario": "s", "procedure": "a", "level": "", "p": 2, "q": 0,
             "P": "", "Q": ""},
        ]
        result = BenchResult("s", rows)
        counts = result.selection_counts()
        p_rows = [r for r in counts if r["component"] == "p"]
        assert sum(r["frequency"] for r in p_rows) == pytest.approx(1.0)
        assert {(r["order"], r["count"]) for r in p_rows} == {(1, 2), (2, 1)}

    def test_failed_rows_skipped(self):
        rows = [{"scenario": "s", "procedure": "a", "level": "", "p": "",
                 "q": "", "P": "", "Q": ""}]
        assert BenchResult("s", rows).selection_counts() == []


class TestEndToEnd:
    def test_distant_lags_smoke(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TSPROJ_THREADS", "1")
        config = ExperimentConfig("distant-lags", replications=1, length=200,
                                  chains=2, warmup=200, samples=400, seed=3)
        result = run_scenario(config)
        assert len(result.rows) == 2
        procedures = {row["procedure"] for row in result.rows}
        assert procedures == {"projpred", "baseline"}
        rows_path, counts_path = write_results(result, tmp_path)
        assert rows_path.exists() and counts_path.exists()

    @pytest.mark.parametrize("scenario,expected_rows", [
        ("stability", 8), ("sarma-stability", 2), ("noise", 10),
        ("arma-to-ar", 2), ("bad-projection", 2)])
    def test_single_replication_smoke(self, scenario, expected_rows,
                                      tmp_path, monkeypatch):
        monkeypatch.setenv("TSPROJ_THREADS", "1")
        config = ExperimentConfig(scenario, replications=1, length=220,
                                  chains=2, warmup=200, samples=400, seed=5)
        result = run_scenario(config)
        assert len(result.rows) == expected_rows
        for row in result.rows:
            assert row["procedure"] in ("projpred", "baseline",
                                        "joint-projection")
        write_results(result, tmp_path)
        if scenario == "sarma-stability":
            base = [r for r in result.rows if r["procedure"] == "baseline"]
            assert all("seasonal orders not representable" in r["warnings"]
                       for r in base)
            proj = [r for r in result.rows if r["procedure"] == "projpred"]
            assert all(r["P"] != "" for r in proj if r["p"] != "")
