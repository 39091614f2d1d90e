"""End-to-end command-line workflows on a temp directory."""

import json

import numpy as np
import pytest

from epivsr.cli import main
from epivsr.evrn import EvrnConfig, EvrnWeights
from epivsr.lightfield import load_lightfield, load_manifest


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def scene(tmp_path):
    out = tmp_path / "scene"
    assert run("gen-synthetic", "--out", out, "--width", 16, "--height", 16,
               "--views", 5, "--disparity", 1, "--seed", 3) == 0
    return out


class TestGenSynthetic:
    def test_writes_loadable_directory(self, scene):
        lf = load_lightfield(scene)
        assert lf.data.shape == (16, 16, 5, 5, 1)

    def test_config_echoed_into_manifest(self, scene):
        manifest = load_manifest(scene)
        assert manifest["generator"]["disparity"] == 1.0
        assert manifest["generator"]["seed"] == 3

    def test_same_seed_reproduces(self, tmp_path):
        for name in ("a", "b"):
            run("gen-synthetic", "--out", tmp_path / name, "--width", 12,
                "--height", 12, "--views", 3, "--seed", 9)
        a = load_lightfield(tmp_path / "a")
        b = load_lightfield(tmp_path / "b")
        np.testing.assert_array_equal(a.data, b.data)

    def test_excessive_disparity_fails(self, tmp_path):
        assert run("gen-synthetic", "--out", tmp_path / "x", "--width", 8,
                   "--height", 8, "--views", 9, "--disparity", 3) == 1


class TestDegrade:
    def test_spatial_halving(self, scene, tmp_path):
        out = tmp_path / "low"
        assert run("degrade", "--in", scene, "--out", out, "--factor", 2) == 0
        lf = load_lightfield(out)
        assert (lf.height, lf.width) == (8, 8)
        assert load_manifest(out)["degradation"]["spatial_factor"] == 2

    def test_angular_decimation(self, tmp_path):
        gt = tmp_path / "gt9"
        run("gen-synthetic", "--out", gt, "--width", 16, "--height", 16,
            "--views", 9, "--disparity", 0, "--seed", 1)
        out = tmp_path / "dec"
        assert run("degrade", "--in", gt, "--out", out, "--factor", 1, "--angular") == 0
        lf = load_lightfield(out)
        assert (lf.views_rho, lf.views_tau) == (5, 5)

    def test_re_degrading_warns(self, scene, tmp_path, capsys):
        low = tmp_path / "low"
        run("degrade", "--in", scene, "--out", low, "--factor", 2)
        with pytest.warns(UserWarning, match="already"):
            assert run("degrade", "--in", low, "--out", tmp_path / "lower",
                       "--factor", 2) == 0


class TestSr:
    def test_stage_one_ssr(self, scene, tmp_path):
        low = tmp_path / "low"
        run("degrade", "--in", scene, "--out", low, "--factor", 2)
        out = tmp_path / "up"
        report = tmp_path / "report.json"
        assert run("sr", "--in", low, "--out", out, "--config",
                   "configs/ssr_x2_desk.json", "--report", report) == 0
        lf = load_lightfield(out)
        assert (lf.height, lf.width) == (16, 16)
        rep = json.loads(report.read_text())
        assert rep["output_shape"][:2] == [16, 16]
        assert rep["config"]["mode"] == "ssr"

    def test_asr_with_weights_and_no_evrn_flag(self, tmp_path):
        gt = tmp_path / "gt9"
        run("gen-synthetic", "--out", gt, "--width", 20, "--height", 20,
            "--views", 9, "--disparity", 1, "--seed", 2)
        low = tmp_path / "low"
        run("degrade", "--in", gt, "--out", low, "--factor", 1, "--angular")

        wpath = tmp_path / "evrn.lfw"
        EvrnWeights.initialize(
            EvrnConfig(residual_blocks=1, channels=4, reduction=2, angular_extent=9),
            seed=0,
        ).save(wpath)

        refined = tmp_path / "refined"
        assert run("sr", "--in", low, "--out", refined, "--config",
                   "configs/asr_desk.json", "--evrn-weights", wpath) == 0
        assert load_lightfield(refined).views_rho == 9

        stage1 = tmp_path / "stage1"
        assert run("sr", "--in", low, "--out", stage1, "--config",
                   "configs/asr_desk.json", "--evrn-weights", wpath, "--no-evrn") == 0
        a = load_lightfield(refined)
        b = load_lightfield(stage1)
        assert not np.array_equal(a.data, b.data)

    def test_corrupted_weight_sidecar_refused(self, scene, tmp_path):
        low = tmp_path / "low"
        run("degrade", "--in", scene, "--out", low, "--factor", 2)
        wpath = tmp_path / "evrn.lfw"
        EvrnWeights.initialize(
            EvrnConfig(residual_blocks=1, channels=4, reduction=2, angular_extent=5),
            seed=0,
        ).save(wpath)
        sidecar = tmp_path / "evrn.lfw.json"
        state = json.loads(sidecar.read_text())
        state["config"]["channels"] = 8
        sidecar.write_text(json.dumps(state))
        assert run("sr", "--in", low, "--out", tmp_path / "up", "--config",
                   "configs/ssr_x2_desk.json", "--evrn-weights", wpath) == 1


class TestTrainEval:
    def write_train_config(self, tmp_path, scenes, epochs=2):
        config = {
            "model": "evrn",
            "task": "ssr",
            "spatial_factor": 2,
            "scenes": [str(s) for s in scenes],
            "patch": {"size": 8, "stride": 8, "plain_reject_threshold": 0.001},
            "evrn": {"residual_blocks": 1, "channels": 4, "reduction": 2,
                     "angular_extent": 5},
            "schedule": {"epochs": epochs, "batch_size": 4, "initial_lr": 1e-3,
                         "halve_every": 10, "weight_decay": 1e-4, "seed": 0},
        }
        path = tmp_path / "train.json"
        path.write_text(json.dumps(config))
        return path

    def test_train_then_sr_with_weights(self, scene, tmp_path):
        cfg = self.write_train_config(tmp_path, [scene])
        ck = tmp_path / "run"
        assert run("train", "--config", cfg, "--out", ck) == 0
        assert (tmp_path / "run.lfw").exists() and (tmp_path / "run.json").exists()

        low = tmp_path / "low"
        run("degrade", "--in", scene, "--out", low, "--factor", 2)
        out = tmp_path / "up"
        assert run("sr", "--in", low, "--out", out, "--config",
                   "configs/ssr_x2_desk.json", "--evrn-weights",
                   tmp_path / "run.weights.lfw") == 0

    def test_resume_matches_straight_run(self, scene, tmp_path):
        cfg4 = self.write_train_config(tmp_path, [scene], epochs=4)
        straight = tmp_path / "straight"
        assert run("train", "--config", cfg4, "--out", straight) == 0

        cfg2 = self.write_train_config(tmp_path, [scene], epochs=2)
        half = tmp_path / "half"
        assert run("train", "--config", cfg2, "--out", half) == 0
        resumed = tmp_path / "resumed"
        assert run("train", "--config", cfg2, "--out", resumed,
                   "--resume", half, "--epochs", 4) == 0

        from epivsr.engine.serialize import load_tensors

        a = load_tensors(tmp_path / "straight.lfw")
        b = load_tensors(tmp_path / "resumed.lfw")
        for k in a:
            np.testing.assert_array_equal(a[k], b[k])

    def test_eval_identical_fields(self, tmp_path):
        gt = tmp_path / "gt"
        run("gen-synthetic", "--out", gt, "--width", 16, "--height", 16,
            "--views", 9, "--disparity", 0, "--seed", 5)
        out = tmp_path / "rep.json"
        assert run("eval", "--pred", gt, "--gt", gt, "--protocol", "ssr",
                   "--out", out, "--csv", tmp_path / "rep.csv") == 0
        rep = json.loads(out.read_text())
        assert rep["protocol"] == "ssr"
        assert rep["mean_ssim"] == pytest.approx(1.0)
        assert (tmp_path / "rep.csv").exists()

    def test_eval_shape_mismatch_exits_nonzero(self, scene, tmp_path):
        low = tmp_path / "low"
        run("degrade", "--in", scene, "--out", low, "--factor", 2)
        assert run("eval", "--pred", low, "--gt", scene, "--protocol", "ssr",
                   "--out", tmp_path / "rep.json") == 1


class TestInspect:
    def test_lightfield_directory(self, scene, capsys):
        assert run("inspect", scene) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["type"] == "lightfield"
        assert info["manifest"]["views_rho"] == 5

    def test_weight_container(self, tmp_path, capsys):
        wpath = tmp_path / "w.lfw"
        EvrnWeights.initialize(
            EvrnConfig(residual_blocks=1, channels=4, reduction=2, angular_extent=3),
            seed=0,
        ).save(wpath)
        assert run("inspect", wpath) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["type"] == "tensor-container"
        assert info["sidecar"]["config"]["channels"] == 4

    def test_unknown_path_fails(self, tmp_path):
        assert run("inspect", tmp_path / "nothing") == 1
