"""Config parsing and command-line behavior, including exit codes."""

import os

import numpy as np
import pytest

from scanopt.cli import main
from scanopt.config import REQUIRED, ExperimentConfig, load_config, parse_config_file
from scanopt.errors import ConfigurationError
from scanopt.imaging import make_capture_set, read_capture_set, read_pgm, synth_scene

CONFIGS_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

ILC_CFG = """\
seed = 0
plant.tau = 0.005
plant.omega_n = 400
plant.zeta = 0.5
plant.dt = 0.01
plant.world.tau_scale = 1.1
plant.world.omega_scale = 0.93
plant.world.zeta_scale = 1.05
ilc.law = inverse
ilc.tol = 1e-3
scan.amplitude = 0.5
scan.period = 32
"""

OPTIMIZE_CFG = """\
seed = 0
plant.tau = 0.005
plant.omega_n = 400
plant.zeta = 0.5
plant.dt = 0.01
plant.world.tau_scale = 1.1
plant.world.omega_scale = 0.93
plant.world.zeta_scale = 1.05
ilc.law = inverse
ilc.tol = 1e-3
limits.max_velocity = 40
limits.max_acceleration = 4000
limits.time_budget = 10
geometry.shift_gain = 2
imaging.q = 2
imaging.size = 128
optimize.amplitudes = 0,0.1,0.25
optimize.periods = 8,16
"""

SIMDEMO_CFG = """\
seed = 0
simdemo.length = 256
simdemo.f0 = 0.125
simdemo.fc = 0.125
simdemo.m = 1
"""

RECONSTRUCT_CFG = """\
seed = 0
imaging.scene = bars
imaging.size = 128
imaging.q = 2
imaging.lambda = 1e-3
reconstruct.shifts = 0:0;1:0;0:1;1:1
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run_cli(argv, capsys):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def printed_values(out):
    """Parse 'key = value' stdout lines into a dict."""
    values = {}
    for line in out.splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            values[key.strip()] = value.strip()
    return values


def manifest_paths(out):
    last = out.strip().splitlines()[-1]
    assert last.startswith("manifest: ")
    return last[len("manifest: "):].split()


class TestParseConfigFile:
    def test_comments_and_blanks_skipped(self, tmp_path):
        path = write_cfg(tmp_path, "# header\n\nseed = 3  # trailing note\n")
        assert parse_config_file(path) == {"seed": "3"}

    def test_unknown_key_named_with_line(self, tmp_path):
        path = write_cfg(tmp_path, "seed = 0\nbogus.key = 1\n")
        with pytest.raises(ConfigurationError, match="line 2.*bogus.key"):
            parse_config_file(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "seed = 0\nseed = 1\n")
        with pytest.raises(ConfigurationError, match="line 2.*duplicate.*seed"):
            parse_config_file(path)

    def test_empty_value_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "ilc.law =\n")
        with pytest.raises(ConfigurationError, match="empty value.*ilc.law"):
            parse_config_file(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "seed 0\n")
        with pytest.raises(ConfigurationError, match="line 1"):
            parse_config_file(path)

    def test_missing_file_is_config_error(self, tmp_path):
        with pytest.raises(ConfigurationError, match="cannot read"):
            parse_config_file(str(tmp_path / "absent.cfg"))

    def test_seed_override_wins(self, tmp_path):
        path = write_cfg(tmp_path, "seed = 0\n")
        cfg = load_config(path, seed_override=99)
        assert cfg.get_int("seed") == 99


class TestGetters:
    def test_float_scientific_notation(self):
        cfg = ExperimentConfig({"ilc.tol": "2.5e-4"})
        assert cfg.get_float("ilc.tol") == pytest.approx(2.5e-4)

    def test_float_rejects_text(self):
        cfg = ExperimentConfig({"ilc.tol": "fast"})
        with pytest.raises(ConfigurationError, match="ilc.tol"):
            cfg.get_float("ilc.tol")

    def test_float_rejects_non_finite(self):
        cfg = ExperimentConfig({"ilc.tol": "inf"})
        with pytest.raises(ConfigurationError, match="finite"):
            cfg.get_float("ilc.tol")

    def test_int_rejects_fraction(self):
        cfg = ExperimentConfig({"scan.period": "8.5"})
        with pytest.raises(ConfigurationError, match="scan.period"):
            cfg.get_int("scan.period")

    def test_choice_lists_options(self):
        cfg = ExperimentConfig({"imaging.scene": "noise"})
        with pytest.raises(ConfigurationError, match="bars, terrain"):
            cfg.get_choice("imaging.scene", ("bars", "terrain"))

    def test_float_list(self):
        cfg = ExperimentConfig({"optimize.amplitudes": "0,0.1,0.25"})
        assert cfg.get_float_list("optimize.amplitudes") == (0.0, 0.1, 0.25)

    def test_float_list_rejects_text(self):
        cfg = ExperimentConfig({"optimize.amplitudes": "0,low"})
        with pytest.raises(ConfigurationError, match="optimize.amplitudes"):
            cfg.get_float_list("optimize.amplitudes")

    def test_shift_pairs(self):
        cfg = ExperimentConfig({"reconstruct.shifts": "0:0;1.5:0.25"})
        assert cfg.get_shift_pairs("reconstruct.shifts") == ((0.0, 0.0), (1.5, 0.25))

    @pytest.mark.parametrize("raw", ["1", "a:b", "1:2:3"])
    def test_shift_pairs_rejects_malformed(self, raw):
        cfg = ExperimentConfig({"reconstruct.shifts": raw})
        with pytest.raises(ConfigurationError, match="reconstruct.shifts"):
            cfg.get_shift_pairs("reconstruct.shifts")

    def test_missing_required_names_key(self):
        cfg = ExperimentConfig({})
        with pytest.raises(ConfigurationError, match="plant.tau"):
            cfg.get_float("plant.tau", REQUIRED)


class TestCliIlc:
    def test_happy_path_writes_history_and_trajectory(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, ILC_CFG)
        out = str(tmp_path / "out")
        rc, stdout, _ = run_cli(["ilc", "--config", cfg, "--out", out], capsys)
        assert rc == 0
        values = printed_values(stdout)
        assert values["converged"] == "true"
        assert float(values["final_rms"]) < 1e-3
        paths = manifest_paths(stdout)
        assert sorted(os.path.basename(p) for p in paths) == [
            "ilc_history.csv",
            "ilc_trajectory.csv",
        ]
        for p in paths:
            assert os.path.exists(p)

    def test_period_one_rejected(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, ILC_CFG.replace("scan.period = 32", "scan.period = 1"))
        rc, _, stderr = run_cli(["ilc", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 2
        assert "scan.period" in stderr

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, ILC_CFG + "typo.key = 1\n")
        rc, _, stderr = run_cli(["ilc", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 2
        assert "typo.key" in stderr

    def test_missing_config_file(self, tmp_path, capsys):
        rc, _, stderr = run_cli(
            ["ilc", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path)], capsys
        )
        assert rc == 2
        assert "cannot read" in stderr

    def test_unstable_gain_exits_runtime(self, tmp_path, capsys):
        """A transpose gain far above the stability bound must diverge."""
        text = ILC_CFG.replace("ilc.law = inverse", "ilc.law = transpose\nilc.gain = 100")
        cfg = write_cfg(tmp_path, text)
        rc, _, stderr = run_cli(["ilc", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 3
        assert "runtime failure" in stderr

    def test_nested_out_dir_created(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, ILC_CFG)
        out = str(tmp_path / "a" / "b")
        rc, _, _ = run_cli(["ilc", "--config", cfg, "--out", out], capsys)
        assert rc == 0
        assert os.path.isdir(out)


class TestCliOptimize:
    def test_happy_path_outputs(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, OPTIMIZE_CFG)
        out = str(tmp_path / "out")
        rc, stdout, _ = run_cli(["optimize", "--config", cfg, "--out", out], capsys)
        assert rc == 0
        values = printed_values(stdout)
        assert float(values["best_amplitude"]) == pytest.approx(0.1)
        assert int(values["best_period"]) == 8
        assert float(values["best_factor"]) == pytest.approx(2.0)
        for name in ("optimize_table.csv", "optimize_best.pgm", "optimize_summary.txt"):
            assert os.path.exists(os.path.join(out, name))

    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, OPTIMIZE_CFG)
        blobs = []
        for run in ("first", "second"):
            out = str(tmp_path / run)
            rc, _, _ = run_cli(["optimize", "--config", cfg, "--out", out], capsys)
            assert rc == 0
            with open(os.path.join(out, "optimize_table.csv"), "rb") as f:
                table = f.read()
            with open(os.path.join(out, "optimize_best.pgm"), "rb") as f:
                image = f.read()
            blobs.append((table, image))
        assert blobs[0] == blobs[1]

    def test_all_infeasible_exits_empty(self, tmp_path, capsys):
        text = OPTIMIZE_CFG.replace("limits.max_velocity = 40", "limits.max_velocity = 1e-9")
        text = text.replace("optimize.amplitudes = 0,0.1,0.25", "optimize.amplitudes = 0.5")
        cfg = write_cfg(tmp_path, text)
        rc, _, stderr = run_cli(["optimize", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 4
        assert "violates the limits" in stderr


class TestCliSimdemo:
    def test_default_run_doubles_support(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SIMDEMO_CFG)
        out = str(tmp_path / "out")
        rc, stdout, _ = run_cli(["simdemo", "--config", cfg, "--out", out], capsys)
        assert rc == 0
        values = printed_values(stdout)
        assert float(values["max_abs_error"]) <= 1e-9
        assert float(values["extension_factor"]) == pytest.approx(2.0, abs=1e-6)
        with open(os.path.join(out, "simdemo_signals.csv")) as f:
            assert len(f.read().splitlines()) == 257
        with open(os.path.join(out, "simdemo_spectra.csv")) as f:
            assert len(f.read().splitlines()) == 130

    def test_zero_modulation_depth_exits_runtime(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SIMDEMO_CFG.replace("simdemo.m = 1", "simdemo.m = 0"))
        rc, _, stderr = run_cli(["simdemo", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 3
        assert "runtime failure" in stderr

    def test_repeated_phases_exit_runtime(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SIMDEMO_CFG + "simdemo.phases = 0,0,2.0944\n")
        rc, _, stderr = run_cli(["simdemo", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 3
        assert "runtime failure" in stderr

    def test_two_phases_rejected_as_config(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SIMDEMO_CFG + "simdemo.phases = 0,3.14\n")
        rc, _, stderr = run_cli(["simdemo", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 2
        assert "three values" in stderr


class TestCliReconstruct:
    def test_exact_interleave_roundtrip(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, RECONSTRUCT_CFG)
        out = str(tmp_path / "out")
        rc, stdout, _ = run_cli(["reconstruct", "--config", cfg, "--out", out], capsys)
        assert rc == 0
        values = printed_values(stdout)
        assert float(values["rmse"]) < 0.01
        assert float(values["improvement_factor"]) == pytest.approx(2.0)

        scene = synth_scene("bars", 128, 0)
        recon = read_pgm(os.path.join(out, "recon.pgm"))
        rmse = float(np.sqrt(np.mean((recon.data - scene.data) ** 2)))
        assert rmse < 0.01

        loaded = read_capture_set(os.path.join(out, "captures"), 2)
        reference = make_capture_set(scene, ((0, 0), (1, 0), (0, 1), (1, 1)), 2)
        assert loaded.shifts == reference.shifts
        for got, want in zip(loaded.frames, reference.frames):
            np.testing.assert_allclose(
                got.data, np.clip(want.data, 0.0, 1.0), atol=0.5 / 65535
            )

    def test_manifest_lists_every_file(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, RECONSTRUCT_CFG)
        out = str(tmp_path / "out")
        _, stdout, _ = run_cli(["reconstruct", "--config", cfg, "--out", out], capsys)
        paths = manifest_paths(stdout)
        assert len(paths) == 7
        for p in paths:
            assert os.path.exists(p)


class TestShippedConfigs:
    @pytest.mark.parametrize("name", ["ilc", "optimize", "simdemo", "reconstruct"])
    def test_parses_clean(self, name):
        parse_config_file(os.path.join(CONFIGS_DIR, f"{name}.cfg"))

    @pytest.mark.parametrize("name", ["ilc", "simdemo", "reconstruct"])
    def test_runs_clean(self, name, tmp_path, capsys):
        """The slower shipped optimize sweep runs in the acceptance suite."""
        cfg = os.path.join(CONFIGS_DIR, f"{name}.cfg")
        rc, stdout, _ = run_cli([name, "--config", cfg, "--out", str(tmp_path)], capsys)
        assert rc == 0
        assert stdout.strip().splitlines()[-1].startswith("manifest: ")
