"""End-to-end command-line pipeline: files in, files out, exit codes."""

from dataclasses import replace

import pytest

from noisefp.cli import main
from noisefp.features import FEATURE_DUMP_HEADER
from noisefp.simulate import SensorProfile, generate
from noisefp.svm import MODEL_HEADER
from noisefp.timeseries import READINGS_HEADER, write_readings

SCENARIO_DOC = """
config_version = 1

[scenario]
duration = 2400
master_seed = 77

[[sensor]]
id = "alpha"
noise_std = 0.1
offset = 0.05
tones = [[0.21, 0.45, 0.3]]

[[sensor]]
id = "beta"
noise_std = 0.22
offset = -0.1
tones = [[0.34, 0.9, 0.0]]

[[sensor]]
id = "gamma"
noise_std = 0.4
offset = 0.0
tones = [[0.12, 1.6, 1.1]]
"""

ATTACK_DOC = SCENARIO_DOC + """
[[attack]]
sensor = "beta"
scenario = "S3_saturation"
start = 1200
end = 2400
held_value = 20.0
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Scenario files plus the artifacts of one clean pipeline run."""
    root = tmp_path_factory.mktemp("cli")
    scenario = root / "plant.toml"
    scenario.write_text(SCENARIO_DOC, encoding="utf-8")
    attack_scenario = root / "attacked.toml"
    attack_scenario.write_text(ATTACK_DOC, encoding="utf-8")
    readings = root / "clean.csv"
    model = root / "fleet.model"
    assert main(["simulate", str(scenario), "--out", str(readings)]) == 0
    assert main(["train", str(readings), "--model", str(model)]) == 0
    return {
        "root": root,
        "scenario": scenario,
        "attack_scenario": attack_scenario,
        "readings": readings,
        "model": model,
    }


class TestPipeline:
    def test_simulate_writes_readings(self, workspace):
        lines = workspace["readings"].read_text().splitlines()
        assert lines[0] == READINGS_HEADER
        assert len(lines) == 1 + 3 * 2400

    def test_features_dump(self, workspace, tmp_path):
        out = tmp_path / "features.csv"
        rc = main(["features", str(workspace["readings"]),
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == FEATURE_DUMP_HEADER
        assert len(lines) == 1 + 3 * 20

    def test_model_file_format(self, workspace):
        assert workspace["model"].read_text().splitlines()[0] == MODEL_HEADER

    def test_identify_clean_readings(self, workspace, tmp_path):
        out = tmp_path / "verdicts.csv"
        rc = main(["identify", str(workspace["readings"]),
                   "--model", str(workspace["model"]), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("sensor_id,")
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 60
        authentic = sum(1 for row in rows if row[4] == "authentic")
        assert authentic / len(rows) >= 0.95

    def test_identify_with_forced_claim(self, workspace, tmp_path):
        out = tmp_path / "verdicts.csv"
        rc = main(["identify", str(workspace["readings"]),
                   "--model", str(workspace["model"]), "--out", str(out),
                   "--claimed", "beta", "--fail-on-attack"])
        assert rc == 3
        rows = [line.split(",") for line in
                out.read_text().splitlines()[1:]]
        mismatches = sum(1 for row in rows if row[4] == "mismatch")
        assert mismatches >= 38   # alpha and gamma chunks claimed as beta

    def test_references_table_accepted(self, workspace, tmp_path):
        refs = tmp_path / "refs.csv"
        refs.write_text("sensor_id,reference\nalpha,20.05\nbeta,19.9\n"
                        "gamma,20.0\n", encoding="ascii")
        out = tmp_path / "features.csv"
        rc = main(["features", str(workspace["readings"]),
                   "--references", str(refs), "--out", str(out)])
        assert rc == 0

    def test_bad_references_header(self, workspace, tmp_path, capsys):
        refs = tmp_path / "refs.csv"
        refs.write_text("sensor,reference\nalpha,20.0\n", encoding="ascii")
        rc = main(["features", str(workspace["readings"]),
                   "--references", str(refs)])
        assert rc == 2
        assert "refs.csv:1" in capsys.readouterr().err


class TestEvaluate:
    def test_single_cell_report_and_records(self, workspace, tmp_path,
                                            capsys):
        records = tmp_path / "records.csv"
        rc = main(["evaluate", str(workspace["readings"]),
                   "--chunk-sizes", "120", "--schemes", "1/2",
                   "--records", str(records)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "acc_plain" in out
        lines = records.read_text().splitlines()
        assert lines[0] == "metric,scope,value"
        assert any(line.startswith("tpr,alpha,") for line in lines)

    def test_sweep_table(self, workspace, capsys):
        rc = main(["evaluate", str(workspace["readings"]),
                   "--chunk-sizes", "120,240", "--schemes", "1/2"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "chunk" in out and "240" in out


class TestAttackCommand:
    def test_saturation_flagged(self, workspace, tmp_path, capsys):
        out = tmp_path / "verdicts.csv"
        rc = main(["attack", str(workspace["attack_scenario"]),
                   "--model", str(workspace["model"]), "--out", str(out),
                   "--fail-on-attack"])
        assert rc == 3
        assert "S3_saturation" in capsys.readouterr().out
        rows = [line.split(",") for line in
                out.read_text().splitlines()[1:]]
        window = [row for row in rows
                  if row[0] == "beta" and int(row[1]) >= 10]
        assert window and all(row[4] == "saturated" for row in window)

    def test_without_flag_reports_but_succeeds(self, workspace, tmp_path):
        out = tmp_path / "verdicts.csv"
        rc = main(["attack", str(workspace["attack_scenario"]),
                   "--model", str(workspace["model"]), "--out", str(out)])
        assert rc == 0

    def test_attacked_readings_fail_identify(self, workspace, tmp_path):
        attacked = tmp_path / "attacked.csv"
        assert main(["simulate", str(workspace["attack_scenario"]),
                     "--out", str(attacked), "--attacked"]) == 0
        rc = main(["identify", str(attacked),
                   "--model", str(workspace["model"]),
                   "--out", str(tmp_path / "v.csv"), "--fail-on-attack"])
        assert rc == 3
        rc = main(["identify", str(attacked),
                   "--model", str(workspace["model"]),
                   "--out", str(tmp_path / "v2.csv")])
        assert rc == 0


class TestChallengeCommand:
    def test_honest_run_passes(self, workspace, capsys):
        rc = main(["challenge", str(workspace["scenario"]),
                   "--sensor", "alpha", "--fail-on-attack"])
        assert rc == 0
        assert "verdict: PASS" in capsys.readouterr().out

    def test_replay_fails(self, workspace, capsys):
        rc = main(["challenge", str(workspace["scenario"]),
                   "--sensor", "alpha", "--adversary", "replay",
                   "--fail-on-attack"])
        assert rc == 3
        assert "verdict: FAIL" in capsys.readouterr().out


class TestExitCodes:
    def test_missing_file_is_input_error(self, tmp_path, capsys):
        rc = main(["train", str(tmp_path / "missing.csv"),
                   "--model", str(tmp_path / "m")])
        assert rc == 2
        assert "missing.csv" in capsys.readouterr().err

    def test_malformed_readings(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,sensor,value\n", encoding="ascii")
        rc = main(["features", str(bad)])
        assert rc == 2
        assert "bad.csv" in capsys.readouterr().err

    def test_bad_run_config(self, workspace, tmp_path, capsys):
        config = tmp_path / "run.toml"
        config.write_text("config_version = 1\n[run]\nchunk_sise = 60\n",
                          encoding="utf-8")
        rc = main(["features", str(workspace["readings"]),
                   "--config", str(config)])
        assert rc == 2
        assert "chunk_sise" in capsys.readouterr().err

    def test_exhausted_training_budget(self, tmp_path, capsys):
        base = SensorProfile(sensor_id="twin_a", baseline=20.0, offset=0.0,
                             noise_std=0.3, tones=((0.2, 1.0, 0.0),), seed=5)
        twins = [generate(base, 7200),
                 generate(replace(base, sensor_id="twin_b", seed=6), 7200)]
        readings = tmp_path / "twins.csv"
        write_readings(str(readings), twins)
        rc = main(["train", str(readings), "--model", str(tmp_path / "m"),
                   "--tol", "1e-15", "--max-passes", "1"])
        assert rc == 4
        err = capsys.readouterr().err
        assert "KKT violation" in err

    def test_missing_scenario_file(self, tmp_path, capsys):
        rc = main(["simulate", str(tmp_path / "ghost.toml"),
                   "--out", str(tmp_path / "r.csv")])
        assert rc == 2
        assert "ghost.toml" in capsys.readouterr().err


class TestDeterminism:
    def test_repeat_runs_byte_identical(self, workspace, tmp_path):
        readings2 = tmp_path / "clean2.csv"
        model2 = tmp_path / "fleet2.model"
        assert main(["simulate", str(workspace["scenario"]),
                     "--out", str(readings2)]) == 0
        assert readings2.read_bytes() == workspace["readings"].read_bytes()
        assert main(["train", str(readings2), "--model", str(model2)]) == 0
        assert model2.read_bytes() == workspace["model"].read_bytes()
        v1, v2 = tmp_path / "v1.csv", tmp_path / "v2.csv"
        for out in (v1, v2):
            assert main(["identify", str(readings2),
                         "--model", str(model2), "--out", str(out)]) == 0
        assert v1.read_bytes() == v2.read_bytes()
