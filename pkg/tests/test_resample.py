"""Bicubic resizing, light-field degradation, and patch extraction."""

import numpy as np
import pytest

import oracles
from epivsr.lightfield import EPIVolume, LightField4D, extract_sai, slice_volumes
from epivsr.resample import (
    DegradeSpec,
    PatchSpec,
    angular_decimate,
    bicubic_resize,
    degrade_lightfield,
    extract_training_patches,
    keys_cubic,
    kept_views,
    lf_spatial_downsample,
    load_patches,
    pssr_volume,
    save_patches,
)
from epivsr.metrics import psnr
from epivsr.synthetic import generate_lightfield


class TestBicubicResize:
    def test_identity_resize(self):
        rng = np.random.default_rng(0)
        img = rng.random((7, 9)).astype(np.float32)
        np.testing.assert_array_equal(bicubic_resize(img, 7, 9), img)

    def test_constant_any_scale(self):
        img = np.full((8, 8), 0.37, dtype=np.float32)
        for shape in [(16, 16), (4, 4), (5, 11)]:
            out = bicubic_resize(img, *shape)
            np.testing.assert_allclose(out, 0.37, atol=1e-6)

    def test_ramp_upsample_matches_kernel_evaluation(self):
        ramp = np.linspace(0.1, 0.9, 12).astype(np.float64)
        img = np.tile(ramp, (4, 1)).astype(np.float32)
        out = bicubic_resize(img, 4, 24, antialias=True)  # upsample: kernel unscaled
        ref = oracles.resize_1d_ref(ramp, 24)
        np.testing.assert_allclose(out[2], np.clip(ref, 0, 1), atol=1e-6)

    def test_kernel_values(self):
        assert keys_cubic(np.array([0.0]))[0] == 1.0
        assert keys_cubic(np.array([1.0]))[0] == 0.0
        assert keys_cubic(np.array([2.0]))[0] == 0.0
        # a=-0.5 at half-sample offsets
        assert keys_cubic(np.array([0.5]))[0] == pytest.approx(0.5625)
        assert keys_cubic(np.array([1.5]))[0] == pytest.approx(-0.0625)

    def test_output_clipped(self):
        img = np.zeros((8, 8), dtype=np.float32)
        img[3:5, 3:5] = 1.0  # sharp step overshoots before clipping
        out = bicubic_resize(img, 16, 16)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_zero_extent_rejected(self):
        with pytest.raises(ValueError):
            bicubic_resize(np.zeros((4, 4), np.float32), 0, 4)

    def test_smooth_round_trip_psnr(self):
        """Band-limited content survives up-then-down within 40 dB."""
        for seed in range(3):
            lf = generate_lightfield(24, 24, 1, disparity=0, seed=seed, max_cycles=4)
            img = lf.data[:, :, 0, 0, 0]
            up = bicubic_resize(img, 48, 48)
            down = bicubic_resize(up, 24, 24, antialias=True)
            assert psnr(down, img) > 40.0


class TestLfSpatialDownsample:
    def test_constant_field(self):
        lf = LightField4D(np.full((8, 8, 3, 3, 1), 0.5, dtype=np.float32), "Y")
        out = lf_spatial_downsample(lf, 2)
        np.testing.assert_allclose(out.data, 0.5, atol=1e-6)

    def test_patch_shape_halves(self):
        rng = np.random.default_rng(1)
        lf = LightField4D(rng.random((48, 48, 2, 2, 1)).astype(np.float32), "Y")
        out = lf_spatial_downsample(lf, 2)
        assert (out.height, out.width) == (24, 24)
        assert (out.views_rho, out.views_tau) == (2, 2)

    def test_each_view_matches_direct_resize(self):
        rng = np.random.default_rng(2)
        lf = LightField4D(rng.random((12, 16, 2, 3, 1)).astype(np.float32), "Y")
        out = lf_spatial_downsample(lf, 4)
        for r in range(2):
            for t in range(3):
                np.testing.assert_array_equal(
                    out.data[:, :, r, t, :],
                    bicubic_resize(lf.data[:, :, r, t, :], 3, 4),
                )

    def test_non_divisible_rejected(self):
        lf = LightField4D(np.zeros((9, 8, 1, 1, 1), dtype=np.float32), "Y")
        with pytest.raises(ValueError):
            lf_spatial_downsample(lf, 2)


class TestAngularDecimate:
    def test_9x9_to_5x5(self):
        rng = np.random.default_rng(3)
        lf = LightField4D(rng.random((4, 4, 9, 9, 1)).astype(np.float32), "Y")
        out = angular_decimate(lf)
        assert (out.views_rho, out.views_tau) == (5, 5)
        assert out.views_rho * out.views_tau == 25

    def test_center_view_kept(self):
        rng = np.random.default_rng(4)
        lf = LightField4D(rng.random((4, 4, 9, 9, 1)).astype(np.float32), "Y")
        out = angular_decimate(lf)
        np.testing.assert_array_equal(extract_sai(out, (2, 2)), extract_sai(lf, (4, 4)))

    def test_kept_set_matches_comprehension(self):
        expected = {(r, t) for r in range(9) for t in range(9)
                    if r % 2 == 0 and t % 2 == 0}
        assert set(kept_views(9)) == expected
        rng = np.random.default_rng(5)
        lf = LightField4D(rng.random((3, 3, 9, 9, 1)).astype(np.float32), "Y")
        out = angular_decimate(lf)
        for i, r in enumerate(range(0, 9, 2)):
            for j, t in enumerate(range(0, 9, 2)):
                np.testing.assert_array_equal(
                    out.data[:, :, i, j, :], lf.data[:, :, r, t, :]
                )

    def test_even_extent_rejected(self):
        lf = LightField4D(np.zeros((2, 2, 8, 8, 1), dtype=np.float32), "Y")
        with pytest.raises(ValueError):
            angular_decimate(lf)

    def test_commutes_with_volume_decimation(self):
        lf = generate_lightfield(12, 12, 5, disparity=1, seed=6)
        direct = angular_decimate(lf)
        vols = slice_volumes(lf, "tau")
        kept = [EPIVolume(v.data[:, ::2, :], v.orientation, i)
                for i, v in enumerate(vols[::2])]
        from epivsr.lightfield import merge_volumes
        via_volumes = merge_volumes(kept, "tau")
        np.testing.assert_array_equal(direct.data, via_volumes.data)


class TestPssrVolume:
    def test_constant_volume(self):
        vol = EPIVolume(np.full((6, 3, 6), 0.4, dtype=np.float32), "horizontal", 0)
        out = pssr_volume(vol, 2)
        assert out.shape == (12, 3, 12)
        np.testing.assert_allclose(out.data, 0.4, atol=1e-6)

    def test_slices_match_direct_resize(self):
        rng = np.random.default_rng(7)
        vol = EPIVolume(rng.random((6, 4, 8)).astype(np.float32), "horizontal", 1)
        out = pssr_volume(vol, 2)
        for i in range(4):
            np.testing.assert_array_equal(
                out.data[:, i, :], bicubic_resize(vol.data[:, i, :], 12, 16, antialias=False)
            )

    def test_unit_scale_is_identity(self):
        vol = EPIVolume(np.random.default_rng(8).random((5, 3, 5)).astype(np.float32),
                        "vertical", 2)
        out = pssr_volume(vol, 1)
        np.testing.assert_array_equal(out.data, vol.data)
        assert out.orientation == "vertical" and out.fixed_index == 2

    def test_external_volume_accepted(self):
        vol = EPIVolume(np.zeros((4, 3, 4), dtype=np.float32), "horizontal", 0)
        ext = EPIVolume(np.full((8, 3, 8), 0.5, dtype=np.float32), "horizontal", 0)
        out = pssr_volume(vol, 2, method="external", external=ext)
        np.testing.assert_array_equal(out.data, ext.data)

    def test_external_shape_mismatch_rejected(self):
        vol = EPIVolume(np.zeros((4, 3, 4), dtype=np.float32), "horizontal", 0)
        bad = EPIVolume(np.zeros((8, 3, 7), dtype=np.float32), "horizontal", 0)
        with pytest.raises(ValueError):
            pssr_volume(vol, 2, method="external", external=bad)

    def test_external_requires_volume(self):
        vol = EPIVolume(np.zeros((4, 3, 4), dtype=np.float32), "horizontal", 0)
        with pytest.raises(ValueError):
            pssr_volume(vol, 2, method="external")


class TestDegrade:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            DegradeSpec(spatial_factor=0)

    def test_combined_degradation(self):
        lf = generate_lightfield(16, 16, 9, disparity=0, seed=9)
        out = degrade_lightfield(lf, DegradeSpec(spatial_factor=2, angular_decimate=True))
        assert (out.height, out.width) == (8, 8)
        assert (out.views_rho, out.views_tau) == (5, 5)

    def test_values_stay_in_range(self):
        lf = generate_lightfield(16, 16, 5, disparity=1, seed=10)
        out = degrade_lightfield(lf, DegradeSpec(spatial_factor=2))
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0


class TestTrainingPatches:
    def make_lf(self, h, w, seed=0):
        rng = np.random.default_rng(seed)
        return LightField4D(rng.random((h, w, 3, 3, 1)).astype(np.float32), "Y")

    def test_64_gives_four_positions(self):
        lf = self.make_lf(64, 64)
        patches = extract_training_patches(lf, PatchSpec(size=48, stride=16))
        assert len(patches) == 4
        assert sorted((p.y0, p.x0) for p in patches) == [(0, 0), (0, 16), (16, 0), (16, 16)]

    def test_exact_size_gives_one(self):
        lf = self.make_lf(48, 48)
        assert len(extract_training_patches(lf, PatchSpec())) == 1

    def test_smaller_than_patch_gives_none(self):
        lf = self.make_lf(32, 32)
        assert extract_training_patches(lf, PatchSpec(size=48)) == []

    def test_constant_field_rejected_as_plain(self):
        lf = LightField4D(np.full((48, 48, 3, 3, 1), 0.5, dtype=np.float32), "Y")
        assert extract_training_patches(lf, PatchSpec()) == []

    def test_spec_invariant(self):
        with pytest.raises(ValueError):
            PatchSpec(size=8, stride=16)

    def test_save_load_round_trip(self, tmp_path):
        lf = self.make_lf(64, 64, seed=1)
        patches = extract_training_patches(lf, PatchSpec(48, 16), scene_id="s0")
        save_patches(tmp_path / "px", patches)
        back = load_patches(tmp_path / "px")
        assert len(back) == len(patches)
        for a, b in zip(patches, back):
            np.testing.assert_array_equal(a.lf.data, b.lf.data)
            assert (a.y0, a.x0, a.scene_id) == (b.y0, b.x0, b.scene_id)
