#!/usr/bin/env python3
"""
Tests for experiment files, the runner and the report writers.
"""

import csv
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import run_experiment
from src.core.experiment_config import ConfigValidationError, load_experiment_config, parse_experiment_config
from src.core.runner import build_model, run_experiment as run_config
from src.utils.file_utils import emit_results, format_cell, write_csv


SAMPLE_YAML = """\
experiment: sample
model:
  kind: quadratic
  d: 1
  b: 0.25
proposal:
  kind: semi_implicit
  h: 0.1
run:
  seed: 3
  n_steps: 2000
  burn_in: 100
"""

PLAN_YAML = """\
experiment: plan
planner:
  epsilon: [0.1, 0.01]
  K: 1.0
run:
  seed: 0
"""

BOUNDS_YAML = """\
experiment: bounds
model:
  kind: quadratic
  d: 1
  b: 0.25
proposal:
  kind: semi_implicit
  h: 0.1
run:
  seed: 0
  R: 2.0
  n_steps: 100
"""


def write_config(tmp_path: Path, text: str, name: str = "experiment.yaml") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


class TestExperimentConfig:
    def test_valid_sample(self):
        config = parse_experiment_config(SAMPLE_YAML)
        assert config.experiment == "sample"
        assert config.seed == 3
        assert config.formats == ["csv", "json"]

    def test_missing_model_kind(self):
        text = "experiment: sample\nmodel:\n  d: 1\nproposal:\n  kind: ou\n  h: 0.1\nrun:\n  seed: 1\n"
        with pytest.raises(ConfigValidationError) as info:
            parse_experiment_config(text)
        assert "model.kind" in str(info.value)
        assert info.value.line == 3

    def test_yaml_syntax_error(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_experiment_config("experiment: sample\nmodel: [unclosed\n")
        assert "YAML syntax error" in str(info.value)
        assert info.value.line is not None

    def test_unknown_experiment(self):
        with pytest.raises(ConfigValidationError):
            parse_experiment_config("experiment: annealing\nrun:\n  seed: 1\n")

    def test_step_outside_range(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_experiment_config(SAMPLE_YAML.replace("h: 0.1", "h: 2.5"))
        assert "(0, 2)" in str(info.value)

    def test_short_scaling_grid(self):
        text = ("experiment: scaling\nmodel:\n  kind: zero\n  d: 1\nproposal:\n  kind: ou\n"
                "  h_grid: [0.1, 0.2, 0.3]\nrun:\n  seed: 1\n")
        with pytest.raises(ConfigValidationError):
            parse_experiment_config(text)

    def test_subcommand_must_match_file(self):
        with pytest.raises(ConfigValidationError):
            parse_experiment_config(SAMPLE_YAML, experiment="couple")

    def test_overrides(self, tmp_path):
        config = load_experiment_config(write_config(tmp_path, SAMPLE_YAML), seed_override=11,
                                        out_override=str(tmp_path / "out"))
        assert config.seed == 11
        assert config.output_dir == tmp_path / "out"

    def test_negative_seed(self):
        with pytest.raises(ConfigValidationError):
            parse_experiment_config(SAMPLE_YAML.replace("seed: 3", "seed: -1"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigValidationError):
            load_experiment_config(tmp_path / "absent.yaml")

    def test_non_numeric_grid_entry(self):
        text = ("experiment: scaling\nmodel:\n  kind: zero\n  d: 1\nproposal:\n  kind: ou\n"
                "  h_grid: [fast, 0.04, 0.08, 0.16]\nrun:\n  seed: 1\n")
        with pytest.raises(ConfigValidationError) as info:
            parse_experiment_config(text)
        assert "h_grid" in str(info.value)
        assert info.value.line == 7

    def test_boolean_step_rejected(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_experiment_config(SAMPLE_YAML.replace("h: 0.1", "h: true"))
        assert info.value.line == 8

    def test_tps_demo_grid_checked(self):
        text = ("experiment: tps-demo\nproposal:\n  kind: semi_implicit\n"
                "  h_grid: [0.1, 0.2, 0.2, 0.4]\nrun:\n  seed: 1\n")
        with pytest.raises(ConfigValidationError) as info:
            parse_experiment_config(text)
        assert info.value.line == 4

    def test_tps_demo_grid_optional(self):
        config = parse_experiment_config("experiment: tps-demo\nproposal:\n  kind: semi_implicit\nrun:\n  seed: 1\n")
        assert "h_grid" not in config.proposal

    def test_gradient_supremum_constant(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_experiment_config(BOUNDS_YAML + "constants:\n  grad_u_sup: -1.0\n")
        assert "grad_u_sup" in str(info.value)


class TestBuildModel:
    def test_quadratic(self):
        model, fragment = build_model({"kind": "quadratic", "d": 2, "b": 0.25})
        assert model.d == 2
        assert fragment["K"] == 1.0

    def test_tps_dimension(self):
        model, fragment = build_model({"kind": "tps", "m": 4})
        assert model.d == 15
        assert fragment == {}

    def test_unknown(self):
        with pytest.raises(ValueError):
            build_model({"kind": "banana"})


class TestRunner:
    def test_plan_reports(self, tmp_path):
        config = load_experiment_config(write_config(tmp_path, PLAN_YAML), out_override=str(tmp_path / "out"))
        assert run_config(config) == 0
        out = tmp_path / "out"
        assert (out / "plan.csv").exists()
        meta = read_json(out / "plan.meta.json")
        assert meta["complete"] is True
        assert meta["seed"] == 0
        assert meta["violations"] == []
        records = read_json(out / "plan.json")["records"]
        assert [r["epsilon"] for r in records] == [0.1, 0.01]
        for record in records:
            if record["feasible"]:
                assert record["replay"] < record["epsilon"]

    def test_bounds_echo_inputs(self, tmp_path):
        config = load_experiment_config(write_config(tmp_path, BOUNDS_YAML), out_override=str(tmp_path))
        assert run_config(config) == 0
        document = read_json(tmp_path / "bounds.json")
        assert document["parameters"]["summary"]["inputs"]["K"] == 1.0
        assert document["parameters"]["summary"]["K_raw"] == pytest.approx(1.25)
        quantities = {r["quantity"] for r in document["records"]}
        assert {"proposal_contraction_convex", "rejection", "lyapunov_exit"} <= quantities

    def test_sample_run(self, tmp_path):
        config = load_experiment_config(write_config(tmp_path, SAMPLE_YAML), out_override=str(tmp_path))
        assert run_config(config) == 0
        with open(tmp_path / "sample.csv", newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 1
        assert float(rows[0]["exact_variance"]) == pytest.approx(0.8)
        meta = read_json(tmp_path / "sample.meta.json")
        assert 0.0 < meta["summary"]["acceptance_rate"] <= 1.0
        assert meta["summary"]["wasserstein_to_exact"] >= 0.0

    def test_sample_run_is_stationary(self, tmp_path):
        text = (SAMPLE_YAML.replace("seed: 3", "seed: 20240101").replace("n_steps: 2000", "n_steps: 100000")
                .replace("burn_in: 100", "burn_in: 1000"))
        config = load_experiment_config(write_config(tmp_path, text), out_override=str(tmp_path))
        assert run_config(config) == 0
        meta = read_json(tmp_path / "sample.meta.json")
        assert meta["summary"]["wasserstein_to_exact"] <= 0.02

    def test_bounds_contraction_depends_on_radius(self, tmp_path):
        factors = []
        for R in (1.0, 10.0):
            out = tmp_path / f"R{R:g}"
            config = load_experiment_config(write_config(tmp_path, BOUNDS_YAML.replace("R: 2.0", f"R: {R}")),
                                            out_override=str(out))
            assert run_config(config) == 0
            records = read_json(out / "bounds.json")["records"]
            factors.append(next(r["value"] for r in records if r["quantity"] == "mh_contraction"))
        assert factors[1] > factors[0]

    def test_failed_run_is_incomplete(self, tmp_path):
        text = BOUNDS_YAML.replace("kind: quadratic\n  d: 1\n  b: 0.25", "kind: tps\n  m: 3")
        config = load_experiment_config(write_config(tmp_path, text), out_override=str(tmp_path))
        assert run_config(config) == 1
        meta = read_json(tmp_path / "bounds.meta.json")
        assert meta["complete"] is False
        assert "growth constants" in meta["error"]


class TestReportFormat:
    def test_float_round_trip(self, tmp_path):
        path = write_csv(tmp_path / "values.csv", [{"x": 0.1, "flag": True, "missing": None}])
        with open(path, newline="", encoding="utf-8") as handle:
            row = next(csv.DictReader(handle))
        assert float(row["x"]) == 0.1
        assert row["flag"] == "true"
        assert row["missing"] == ""

    def test_nested_cells_are_json(self):
        assert format_cell({"b": 1, "a": 2}) == '{"a": 2, "b": 1}'

    def test_large_report_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        values = rng.standard_normal(10_000) * 10.0 ** rng.integers(-12, 12, 10_000)
        records = [{"index": i, "value": v, "accepted": bool(i % 3), "note": None if i % 2 else "even"}
                   for i, v in enumerate(values)]
        written = emit_results(tmp_path, "large", records, header={"seed": 5})
        with open(written["csv"], newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        document = read_json(written["json"])
        assert len(rows) == len(document["records"]) == 10_000
        assert document["parameters"] == {"seed": 5}
        for record, row, stored in zip(records, rows, document["records"]):
            assert int(row["index"]) == record["index"]
            assert float(row["value"]) == record["value"]
            assert row["accepted"] == ("true" if record["accepted"] else "false")
            assert row["note"] == (record["note"] or "")
            assert stored["value"] == record["value"]
            assert stored["note"] == record["note"]


class TestCommandLine:
    def test_bad_config_exit_code(self, tmp_path):
        path = write_config(tmp_path, "experiment: sample\nmodel:\n  d: 1\n")
        assert run_experiment.main(["sample", "--config", str(path)]) == 2

    def test_negative_seed_exit_code(self, tmp_path):
        path = write_config(tmp_path, SAMPLE_YAML)
        assert run_experiment.main(["sample", "--config", str(path), "--seed", "-4"]) == 2

    def test_non_numeric_grid_exit_code(self, tmp_path):
        path = write_config(tmp_path, "experiment: scaling\nmodel:\n  kind: zero\n  d: 1\nproposal:\n  kind: ou\n"
                                      "  h_grid: [fast, 0.04, 0.08, 0.16]\nrun:\n  seed: 1\n")
        assert run_experiment.main(["scaling", "--config", str(path)]) == 2

    def test_successful_run(self, tmp_path):
        path = write_config(tmp_path, PLAN_YAML)
        assert run_experiment.main(["plan", "--config", str(path), "--out", str(tmp_path / "cli")]) == 0
        assert (tmp_path / "cli" / "plan.json").exists()


def main():
    """Run the tests in this file."""
    print("🧪 Runner tests")
    print("=" * 50)
    return pytest.main([__file__, "-q"])


if __name__ == "__main__":
    sys.exit(main())
