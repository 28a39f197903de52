"""End-to-end tests for the ``fuelshock`` command line."""

import json
import shutil

import pandas as pd
import pytest

from src.errors import EXIT_CONVERGENCE, EXIT_INPUT, EXIT_OK, EXIT_RANK, EXIT_REPRODUCTION
from src.main import main
from src.models.aids import fit_share_system
from src.models.emissions import load_emission_elasticities
from src.models.panel import load_panel
from tests.conftest import REFERENCE_DIR, SAMPLE_PANEL


@pytest.fixture
def fit_file(tmp_path, small_system):
    _, log_prices, shares, log_x, classes = small_system
    path = tmp_path / "fit.json"
    path.write_text(fit_share_system(log_prices, shares, log_x, classes).to_document().model_dump_json())
    return path


def reproduce(out, *extra, params=REFERENCE_DIR):
    return main(["scenario", "reproduce", "--params", str(params), "--out", str(out), *extra])


class TestParser:
    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert "fuelshock" in capsys.readouterr().out

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_INPUT


class TestScenarioReproduce:
    def test_reference_tables(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert reproduce(out, "--plot-data") == EXIT_OK
        assert "116/116 cells within tolerance" in capsys.readouterr().out
        assert sorted(p.name for p in out.iterdir()) == ["comparison.csv", "plot_data.csv", "report.csv"]
        comparison = pd.read_csv(out / "comparison.csv")
        assert comparison["passed"].all()
        report = pd.read_csv(out / "report.csv")
        assert list(report["scenario"].unique()) == ["S1", "S2", "S3", "S4"]

    def test_json_documents(self, tmp_path):
        out = tmp_path / "out"
        assert reproduce(out, "--format", "json") == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["kind"] == "impact-reports"
        assert [r["scenario"] for r in report["reports"]] == ["S1", "S2", "S3", "S4"]
        comparison = json.loads((out / "comparison.json").read_text())
        assert comparison["passed"] is True
        assert comparison["cells_total"] == 116

    def test_only_one_scenario(self, tmp_path):
        out = tmp_path / "out"
        assert reproduce(out, "--only", "S2") == EXIT_OK
        comparison = pd.read_csv(out / "comparison.csv")
        assert set(comparison["scenario"]) == {"S2"}

    def test_mismatch_exit_code(self, tmp_path, capsys):
        params = tmp_path / "reference"
        shutil.copytree(REFERENCE_DIR, params)
        published = pd.read_csv(params / "published_scenarios.csv")
        row = (published["scenario"] == "S1") & (published["pollutant"] == "CO") & (published["metric"] == "quantity")
        published.loc[row, "value"] = -50.0
        published.to_csv(params / "published_scenarios.csv", index=False)

        out = tmp_path / "out"
        assert reproduce(out, params=params) == EXIT_REPRODUCTION
        assert "FAIL S1 CO quantity" in capsys.readouterr().out
        comparison = pd.read_csv(out / "comparison.csv")
        assert (~comparison["passed"]).sum() == 1

    def test_deterministic_output(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert reproduce(first) == EXIT_OK
        assert reproduce(second) == EXIT_OK
        for name in ("report.csv", "comparison.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()


class TestScenarioRun:
    def test_selected_scenario(self, tmp_path):
        out = tmp_path / "out"
        code = main(["scenario", "run", "--params", str(REFERENCE_DIR), "--only", "S4", "--out", str(out)])
        assert code == EXIT_OK
        report = pd.read_csv(out / "report.csv")
        assert list(report["pollutant"]) == ["CO", "NOx", "PM2.5", "Total"]
        total = report[report["pollutant"] == "Total"].iloc[0]
        assert total["deaths_linear"] == pytest.approx(1624.927, abs=1e-3)

    def test_sum_rule(self, tmp_path):
        out = tmp_path / "out"
        assert main(["scenario", "run", "--rule", "sum", "--only", "S3", "--out", str(out)]) == EXIT_OK
        report = pd.read_csv(out / "report.csv")
        co = report[report["pollutant"] == "CO"].iloc[0]
        assert co["quantity_pct"] == pytest.approx(-2.155, abs=1e-3)

    def test_custom_scenario_file(self, tmp_path):
        scenarios = tmp_path / "scenarios.json"
        scenarios.write_text(
            json.dumps({"version": "1", "scenarios": [{"id": "Z", "label": "no change", "shocks": {"gasoline": 0.0, "diesel": 0.0}}]})
        )
        out = tmp_path / "out"
        assert main(["scenario", "run", "--scenarios", str(scenarios), "--out", str(out)]) == EXIT_OK
        report = pd.read_csv(out / "report.csv")
        assert list(report["scenario"].unique()) == ["Z"]
        assert (report[["quantity", "deaths_linear", "deaths_nonlinear", "losses_linear"]].abs() < 1e-9).all().all()

    def test_shock_below_minus_one_is_rejected(self, tmp_path):
        scenarios = tmp_path / "scenarios.json"
        scenarios.write_text(
            json.dumps({"version": "1", "scenarios": [{"id": "X", "label": "free fuel", "shocks": {"gasoline": -1.0, "diesel": 0.0}}]})
        )
        out = tmp_path / "out"
        assert main(["scenario", "run", "--scenarios", str(scenarios), "--out", str(out)]) == EXIT_INPUT
        assert not out.exists()

    def test_unknown_scenario(self, tmp_path):
        out = tmp_path / "out"
        assert main(["scenario", "run", "--only", "S9", "--out", str(out)]) == EXIT_INPUT
        assert not out.exists()

    def test_missing_scenario_file(self, tmp_path):
        code = main(["scenario", "run", "--scenarios", str(tmp_path / "absent.json"), "--out", str(tmp_path / "out")])
        assert code == EXIT_INPUT


class TestEstimate:
    def test_aids_then_elasticities(self, tmp_path):
        fit_dir, table_dir = tmp_path / "fit", tmp_path / "tables"
        assert main(["estimate", "--panel", str(SAMPLE_PANEL), "--out", str(fit_dir)]) == EXIT_OK
        fit = json.loads((fit_dir / "fit.json").read_text())
        assert fit["dropped_equation"] == "Taxi-G"
        assert max(fit["restriction_residuals"].values()) < 1e-8
        assert (fit_dir / "convergence.log").read_text().startswith("dropped equation: Taxi-G")

        code = main(
            [
                "elasticities",
                "--fit", str(fit_dir / "fit.json"),
                "--emissions",
                "--panel", str(SAMPLE_PANEL),
                "--out", str(table_dir),
            ]
        )
        assert code == EXIT_OK
        table = pd.read_csv(table_dir / "elasticities.csv")
        assert len(table) == 10
        emissions = load_emission_elasticities(table_dir / "emission_elasticities.csv")
        assert len(emissions.classes) == 10
        assert emissions.fuels["LPV-D"].value == "diesel"

    def test_double_log(self, tmp_path):
        out = tmp_path / "out"
        assert main(["estimate", "--panel", str(SAMPLE_PANEL), "--model", "double-log", "--out", str(out)]) == EXIT_OK
        rows = pd.read_csv(out / "double_log.csv")
        assert len(rows) == 10
        assert set(rows["observations"]) == {310}

    def test_invalid_panel(self, tmp_path):
        panel = tmp_path / "panel.csv"
        panel.write_text("province,year,class,price,vehicle_population,vmt\nP01,2002,LPV-D,-6.0,10,20000\n")
        out = tmp_path / "out"
        assert main(["estimate", "--panel", str(panel), "--out", str(out)]) == EXIT_INPUT
        assert not out.exists()

    def test_identical_price_series(self, tmp_path):
        frame = pd.read_csv(SAMPLE_PANEL)
        frame.loc[frame["class"] == "MPV-G", "price"] = frame.loc[frame["class"] == "LPV-D", "price"].to_numpy()
        panel = tmp_path / "panel.csv"
        frame.to_csv(panel, index=False)
        out = tmp_path / "out"
        assert main(["estimate", "--panel", str(panel), "--out", str(out)]) == EXIT_RANK
        assert not list(out.iterdir())

    def test_convergence_failure_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        code = main(["estimate", "--panel", str(SAMPLE_PANEL), "--max-iter", "1", "--out", str(out)])
        assert code == EXIT_CONVERGENCE
        assert not list(out.iterdir())


class TestElasticities:
    def test_json_at_means(self, tmp_path, fit_file):
        out = tmp_path / "out"
        assert main(["elasticities", "--fit", str(fit_file), "--format", "json", "--out", str(out)]) == EXIT_OK
        document = json.loads((out / "elasticities.json").read_text())
        assert document["classes"] == ["A", "B", "C", "D"]
        assert len(document["price_se"]) == 4

    def test_supplied_evaluation_point(self, tmp_path, fit_file):
        point = tmp_path / "point.json"
        point.write_text(
            json.dumps({"shares": {c: 0.25 for c in "ABCD"}, "log_prices": {"A": 0.2, "B": -0.1, "C": 0.0, "D": 0.3}})
        )
        means, supplied = tmp_path / "means", tmp_path / "supplied"
        assert main(["elasticities", "--fit", str(fit_file), "--format", "json", "--out", str(means)]) == EXIT_OK
        code = main(["elasticities", "--fit", str(fit_file), "--at", str(point), "--format", "json", "--out", str(supplied)])
        assert code == EXIT_OK
        at_means = json.loads((means / "elasticities.json").read_text())
        at_point = json.loads((supplied / "elasticities.json").read_text())
        assert at_point["evaluation_shares"] == [0.25] * 4
        assert at_point["price"] != at_means["price"]

    def test_missing_fit(self, tmp_path):
        assert main(["elasticities", "--fit", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == EXIT_INPUT

    def test_emissions_need_fleet_parameters(self, tmp_path, fit_file):
        code = main(
            [
                "elasticities",
                "--fit", str(fit_file),
                "--emissions",
                "--params", str(tmp_path / "absent.json"),
                "--out", str(tmp_path / "out"),
            ]
        )
        assert code == EXIT_INPUT


class TestValidateAndSimulate:
    def test_validate_reference_files(self, capsys):
        assert main(["validate", "--params", str(REFERENCE_DIR), "--panel", str(SAMPLE_PANEL)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "ok  scenarios: S1, S2, S3, S4" in out
        assert "ok  panel: 3100 rows, 310 groups, 10 classes" in out

    def test_validate_rejects_broken_parameters(self, tmp_path):
        broken = tmp_path / "params.json"
        broken.write_text('{"version": "x",')
        assert main(["validate", "--params", str(broken)]) == EXIT_INPUT

    def test_simulate_round_trips_through_loader(self, tmp_path):
        target = tmp_path / "sim" / "panel.csv"
        code = main(["simulate", "--provinces", "2", "--years", "3", "--seed", "4", "--out", str(target)])
        assert code == EXIT_OK
        panel = load_panel(target)
        assert len(panel) == 2 * 3 * 10
        assert panel.n_groups == 6
