import csv
import json
from pathlib import Path

import pytest

from nhfp import cli
from nhfp.nhfp_base import ConfigError, ExitCode, InvalidArgumentError

CONFIG_YAML = Path(__file__).resolve().parents[1] / "config" / "nhfp_config.yaml"


def read_rows(path):
    with open(path, newline="") as handle:
        header = handle.readline()
        rows = list(csv.DictReader(handle))
    assert header.startswith("#")
    return json.loads(header[1:]), rows


def summary(path):
    return {row["quantity"]: row["value"] for row in read_rows(path)[1]}


def test_defaults_then_preset_then_file_then_overrides():
    config = cli.resolve_config(
        {"model": {"omega": 1.3}, "bands": {"k_points": 32}},
        preset="strong",
        overrides={"model.omega": 1.45},
    )
    params = config.params
    assert params.u0 == 1.1
    assert params.gamma0 == 0.8
    assert params.omega == 1.45
    assert config.count("bands", "k_points") == 32
    assert config.count("bands", "n_harmonics") == 40


@pytest.mark.parametrize(
    "file_data, field",
    [
        ({"modle": {}}, "modle"),
        ({"model": {"gamma": 0.1}}, "model.gamma"),
        ({"model": {"gamma0": -1.0}}, "model"),
        ({"model": {"omega": "fast"}}, "model.omega"),
    ],
)
def test_invalid_config_names_the_field(file_data, field):
    with pytest.raises(ConfigError) as info:
        cli.resolve_config(file_data)
    assert info.value.field == field


def test_unknown_preset():
    with pytest.raises(ConfigError):
        cli.resolve_config(preset="extreme")


def test_json_syntax_error_reports_the_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "model": {\n    "omega": 1.1,\n  }\n}\n')
    with pytest.raises(ConfigError) as info:
        cli.load_config_file(path)
    assert info.value.line == 4


def test_yaml_syntax_error_reports_the_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("model:\n  omega: 1.1\n   gamma0: [0.4\n")
    with pytest.raises(ConfigError) as info:
        cli.load_config_file(path)
    assert info.value.line is not None


def test_shipped_yaml_config_resolves():
    data = cli.load_config_file(CONFIG_YAML)
    config = cli.resolve_config(data)
    assert config.params.omega == pytest.approx(1.1)
    assert len(config.inputs("evolve")) == 2


def test_grid_forms():
    assert list(cli._grid([0.1, 0.2], "g")) == [0.1, 0.2]
    assert len(cli._grid({"start": 0.0, "stop": 0.6, "num": 61}, "g")) == 61
    for bad in ([], {"start": 0.0, "stop": 1.0}, {"start": 0.0, "stop": 1.0, "num": 0}, 3.0):
        with pytest.raises(ConfigError):
            cli._grid(bad, "g")


def test_argument_errors_exit_with_validation_code(tmp_path):
    assert cli.main(["nonsense"]) == ExitCode.VALIDATION
    assert cli.main(["bands", "--k-points", "0", "--out", str(tmp_path)]) == ExitCode.VALIDATION
    assert cli.main(["bands", "--omega", "-1", "--out", str(tmp_path)]) == ExitCode.VALIDATION
    assert cli.main(["cycle", "--config", str(tmp_path / "missing.json")]) == ExitCode.VALIDATION


def test_parser_rejects_by_raising():
    with pytest.raises(InvalidArgumentError):
        cli.build_parser().parse_args(["bands", "--input", "C"])


def test_cycle_output_replays_byte_identically(tmp_path):
    assert cli.main(["cycle", "--preset", "weak", "--out", str(tmp_path)]) == ExitCode.OK
    first = (tmp_path / "cycle.csv").read_bytes()
    config, rows = read_rows(tmp_path / "cycle.csv")
    assert config["model"]["u0"] == 0.3
    assert len(rows) == 256
    assert cli.main(["cycle", "--config", str(tmp_path / "cycle.csv")]) == ExitCode.OK
    assert (tmp_path / "cycle.csv").read_bytes() == first


def test_unmodulated_cycle_writes_no_negative_zeros(tmp_path):
    assert cli.main(["cycle", "--u0", "0", "--out", str(tmp_path)]) == ExitCode.OK
    _, rows = read_rows(tmp_path / "cycle.csv")
    for row in rows:
        assert row["ga"] == row["gb"] == "0"
        assert "-0" not in (row["ua"], row["ub"], row["dg"])


def test_si_units_scale_energies_and_times(tmp_path):
    plain = tmp_path / "plain"
    si = tmp_path / "si"
    assert cli.main(["cycle", "--out", str(plain)]) == ExitCode.OK
    assert cli.main(["cycle", "--si", "--out", str(si)]) == ExitCode.OK
    _, rows_plain = read_rows(plain / "cycle.csv")
    _, rows_si = read_rows(si / "cycle.csv")
    assert float(rows_si[5]["j1"]) == pytest.approx(0.144 * float(rows_plain[5]["j1"]))
    assert float(rows_si[5]["t"]) == pytest.approx(float(rows_plain[5]["t"]) / 0.144)


def test_bands_report_closed_gap_and_windings(tmp_path):
    args = ["bands", "--k-points", "64", "--n-harmonics", "30", "--out", str(tmp_path)]
    assert cli.main(args) == ExitCode.OK
    values = summary(tmp_path / "bands_summary.csv")
    assert values["gap_status"] == "closed"
    assert values["winding_1"] == "1"
    assert values["winding_2"] == "-1"
    _, rows = read_rows(tmp_path / "bands.csv")
    assert len(rows) == 128
    assert set(rows[0]) == {"k", "band", "re_eps", "im_eps", "unfolded_re_eps", "decay_rate"}


def test_bands_are_independent_of_the_thread_count(tmp_path, monkeypatch):
    args = ["bands", "--k-points", "16", "--n-harmonics", "20"]
    monkeypatch.setenv("NHFP_THREADS", "1")
    assert cli.main(args + ["--out", str(tmp_path / "one")]) == ExitCode.OK
    monkeypatch.setenv("NHFP_THREADS", "4")
    assert cli.main(args + ["--out", str(tmp_path / "four")]) == ExitCode.OK
    one = (tmp_path / "one" / "bands.csv").read_text().splitlines()[1:]
    four = (tmp_path / "four" / "bands.csv").read_text().splitlines()[1:]
    assert one == four


def test_gapscan_single_cells(tmp_path):
    config = {
        "gapscan": {"omega": [1.1], "gamma0": [0.0, 0.4], "k_points": 64, "n_harmonics": 30},
        "output": {"dir": str(tmp_path)},
    }
    path = tmp_path / "scan.json"
    path.write_text(json.dumps(config))
    assert cli.main(["gapscan", "--config", str(path)]) == ExitCode.OK
    _, rows = read_rows(tmp_path / "gapscan.csv")
    assert float(rows[0]["gap"]) > 0.01
    assert float(rows[1]["gap"]) <= 1e-3
    _, threshold = read_rows(tmp_path / "gapscan_threshold.csv")
    assert float(threshold[0]["gamma0_threshold"]) == pytest.approx(0.4)


def test_evolve_writes_center_of_mass(tmp_path):
    args = ["evolve", "--input", "AB", "--n-cells", "81", "--cycles", "2", "--out", str(tmp_path)]
    assert cli.main(args) == ExitCode.OK
    for name in ("A", "B"):
        assert (tmp_path / f"trajectory_{name}.csv").exists()
        _, rows = read_rows(tmp_path / f"com_{name}.csv")
        kinds = [row["kind"] for row in rows]
        assert kinds.count("cycle") == 3
        assert "displacement_per_cycle" in kinds
        assert "decay_rate" in kinds


def test_evolve_on_a_short_chain_is_a_runtime_failure(tmp_path):
    args = ["evolve", "--n-cells", "11", "--out", str(tmp_path)]
    assert cli.main(args) == ExitCode.RUNTIME


def test_spectrum_analytic_map(tmp_path):
    args = ["spectrum", "--k-points", "8", "--n-harmonics", "30", "--out", str(tmp_path)]
    assert cli.main(args) == ExitCode.OK
    _, rows = read_rows(tmp_path / "spectrum_A.csv")
    assert len(rows) == 8 * 64
    assert all(float(row["analytic"]) >= 0.0 for row in rows)


def test_too_few_harmonics_fail_the_check(tmp_path):
    args = ["check", "--n-harmonics", "2", "--k-points", "8", "--out", str(tmp_path)]
    assert cli.main(args) == ExitCode.CHECK_FAILED
    _, rows = read_rows(tmp_path / "check.csv")
    assert any(row["passed"] == "false" for row in rows)


@pytest.mark.slow
def test_default_check_passes(tmp_path):
    args = ["check", "--k-points", "16", "--out", str(tmp_path)]
    assert cli.main(args) == ExitCode.OK
    _, rows = read_rows(tmp_path / "check.csv")
    assert all(row["passed"] == "true" for row in rows)
