import numpy as np
import pytest

import tssf
from tssf import dataio
from tssf.cli import main

CONFIG = """\
channels: 4
samples: 200
trials_per_class: 12
seed: 11
n_discriminative: 2
var_pos: 4, 1
var_neg: 1, 4
noise_sigma: 0.4
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "synth.cfg"
    path.write_text(CONFIG)
    return path


@pytest.fixture
def data_path(tmp_path, config_path):
    out = tmp_path / "trials.eegt"
    assert main(["synth", "--config", str(config_path), "--out", str(out)]) == 0
    return out


class TestSynth:
    def test_writes_file(self, tmp_path, config_path, capsys):
        out = tmp_path / "data.eegt"
        assert main(["synth", "--config", str(config_path), "--out", str(out)]) == 0
        assert out.exists()
        assert "C=4" in capsys.readouterr().out

    def test_bad_config_exits_2(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("channels: 4\nnoise_sigma: -1\n")
        assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "none.cfg"), "--out", "x"]) == 2

    def test_same_seed_byte_identical(self, tmp_path, config_path):
        a, b = tmp_path / "a.eegt", tmp_path / "b.eegt"
        assert main(["synth", "--config", str(config_path), "--out", str(a)]) == 0
        assert main(["synth", "--config", str(config_path), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override_changes_output(self, tmp_path, config_path):
        a, b = tmp_path / "a.eegt", tmp_path / "b.eegt"
        assert main(["synth", "--config", str(config_path), "--out", str(a)]) == 0
        assert (
            main(["synth", "--config", str(config_path), "--out", str(b), "--seed", "99"])
            == 0
        )
        assert a.read_bytes() != b.read_bytes()


class TestFit:
    def test_tssf_fit_writes_model(self, tmp_path, data_path, capsys):
        out = tmp_path / "model.tssf"
        code = main(
            ["fit", "--data", str(data_path), "--pipeline", "TSSF_Var_1_step",
             "--k", "2", "--reg", "1.0", "--out", str(out)]
        )
        assert code == 0
        model = tssf.load_tssf_model(out)
        assert model.k == 2
        assert "sorted coefficients" in capsys.readouterr().out

    def test_csp_fit_writes_model(self, tmp_path, data_path):
        out = tmp_path / "model.csp"
        code = main(
            ["fit", "--data", str(data_path), "--pipeline", "CSP",
             "--k", "2", "--reg", "1.0", "--out", str(out)]
        )
        assert code == 0
        assert tssf.load_csp_model(out).k == 2

    def test_k_too_large_exits_2(self, tmp_path, data_path):
        code = main(
            ["fit", "--data", str(data_path), "--pipeline", "TSSF_Var_1_step",
             "--k", "9", "--reg", "1.0", "--out", str(tmp_path / "m")]
        )
        assert code == 2

    def test_unknown_pipeline_exits_2(self, tmp_path, data_path):
        code = main(
            ["fit", "--data", str(data_path), "--pipeline", "TSSF_Nope",
             "--out", str(tmp_path / "m")]
        )
        assert code == 2

    def test_single_class_exits_3(self, tmp_path, data_path):
        ts = dataio.read_trials(data_path)
        keep = ts.labels == 1
        single = ts.subset(np.flatnonzero(keep))
        single_path = tmp_path / "single.eegt"
        dataio.write_trials(single, single_path)
        code = main(
            ["fit", "--data", str(single_path), "--pipeline", "TSSF_Var_1_step",
             "--k", "2", "--reg", "1.0", "--out", str(tmp_path / "m")]
        )
        assert code == 3


class TestEval:
    def test_two_pipelines_one_comparison(self, tmp_path, data_path, capsys):
        out = tmp_path / "report.csv"
        code = main(
            ["eval", "--data", str(data_path),
             "--pipeline", "TSSF_Var_1_step", "--pipeline", "CSP",
             "--k", "2", "--reg", "1.0", "--folds", "3", "--out", str(out)]
        )
        assert code == 0
        report = out.read_text().strip().split("\n")
        assert report[0] == "pipeline,k,feature_kind,session,fold,auc"
        assert len(report) == 7  # 2 pipelines x 3 folds + header
        cmp_path = tmp_path / "report.comparisons.csv"
        cmp_lines = cmp_path.read_text().strip().split("\n")
        assert cmp_lines[0] == "pipeline_a,pipeline_b,n,smd,p_value"
        assert len(cmp_lines) == 2  # one comparison row

    def test_folds_1_exits_2(self, tmp_path, data_path):
        code = main(
            ["eval", "--data", str(data_path), "--pipeline", "CSP",
             "--k", "2", "--reg", "1.0", "--folds", "1", "--out", str(tmp_path / "r.csv")]
        )
        assert code == 2

    def test_fixed_seed_identical_csv(self, tmp_path, data_path):
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        argv = ["eval", "--data", str(data_path), "--pipeline", "TSSF_Cov_2_step",
                "--k", "2", "--reg", "1.0", "--folds", "3", "--seed", "5"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_manifest_input(self, tmp_path, data_path):
        manifest = tmp_path / "manifest.txt"
        manifest.write_text(f"0 {data_path}\n1 {data_path}\n")
        out = tmp_path / "r.csv"
        code = main(
            ["eval", "--manifest", str(manifest), "--pipeline", "CSP",
             "--k", "2", "--reg", "1.0", "--folds", "3", "--out", str(out)]
        )
        assert code == 0
        body = out.read_text().strip().split("\n")[1:]
        sessions = {line.split(",")[3] for line in body}
        assert sessions == {"0", "1"}

    def test_band_flag(self, tmp_path, config_path):
        cfg = tmp_path / "long.cfg"
        cfg.write_text(CONFIG.replace("samples: 200", "samples: 600"))
        data = tmp_path / "long.eegt"
        assert main(["synth", "--config", str(cfg), "--out", str(data)]) == 0
        out = tmp_path / "r.csv"
        code = main(
            ["eval", "--data", str(data), "--band", "8:32:250", "--pipeline", "CSP",
             "--k", "2", "--reg", "1.0", "--folds", "3", "--out", str(out)]
        )
        assert code == 0

    def test_bad_band_exits_2(self, tmp_path, data_path):
        code = main(
            ["eval", "--data", str(data_path), "--band", "8:32", "--pipeline", "CSP",
             "--k", "2", "--reg", "1.0", "--out", str(tmp_path / "r.csv")]
        )
        assert code == 2


class TestPatterns:
    def fit_model(self, tmp_path, data_path, pipeline="TSSF_Var_1_step"):
        model_path = tmp_path / "model.txt"
        assert (
            main(["fit", "--data", str(data_path), "--pipeline", pipeline,
                  "--k", "2", "--reg", "1.0", "--out", str(model_path)])
            == 0
        )
        return model_path

    def test_export(self, tmp_path, data_path):
        model_path = self.fit_model(tmp_path, data_path)
        out = tmp_path / "patterns.csv"
        code = main(
            ["patterns", "--model", str(model_path), "--data", str(data_path),
             "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "channel,comp0,comp1"
        assert len(lines) == 5  # 4 channels

    def test_square_filters_logged_check(self, tmp_path, data_path, capsys):
        model_path = tmp_path / "model.txt"
        assert (
            main(["fit", "--data", str(data_path), "--pipeline", "TSSF_Var_1_step",
                  "--k", "4", "--reg", "1.0", "--out", str(model_path)])
            == 0
        )
        out = tmp_path / "patterns.csv"
        assert (
            main(["patterns", "--model", str(model_path), "--data", str(data_path),
                  "--out", str(out)])
            == 0
        )
        assert "max |F^T A - I|" in capsys.readouterr().out

    def test_channel_mismatch_exits_2(self, tmp_path, data_path, config_path):
        model_path = self.fit_model(tmp_path, data_path)
        other_cfg = tmp_path / "other.cfg"
        other_cfg.write_text(CONFIG.replace("channels: 4", "channels: 5"))
        other_data = tmp_path / "other.eegt"
        assert main(["synth", "--config", str(other_cfg), "--out", str(other_data)]) == 0
        code = main(
            ["patterns", "--model", str(model_path), "--data", str(other_data),
             "--out", str(tmp_path / "p.csv")]
        )
        assert code == 2


class TestBench:
    def test_default_three_rows(self, tmp_path, data_path, capsys):
        out = tmp_path / "bench.csv"
        code = main(
            ["bench", "--data", str(data_path), "--k", "2", "--reg", "1.0",
             "--reps", "10", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("pipeline,")
        assert len(lines) == 4  # CSP, TSSF_Var_1_step, TS_AIRM

    def test_zero_reps_exits_2(self, tmp_path, data_path):
        code = main(
            ["bench", "--data", str(data_path), "--k", "2", "--reg", "1.0",
             "--reps", "0"]
        )
        assert code == 2


class TestUsage:
    def test_no_command_exits_2(self):
        assert main([]) == 2

    def test_data_and_manifest_exclusive(self, tmp_path, data_path):
        code = main(
            ["eval", "--data", str(data_path), "--manifest", str(data_path),
             "--pipeline", "CSP", "--out", str(tmp_path / "r.csv")]
        )
        assert code == 2

    def test_help_exits_0(self):
        assert main(["--help"]) == 0
