"""Degradation and preliminary spatial up-sampling.

Bicubic resizing uses the Keys cubic kernel (a = -0.5) with half-pixel
center alignment, clamp-to-edge boundaries, and an antialias mode that
widens the kernel by the inverse scale when down-sampling (imresize
semantics). Weights are computed and applied in float64, then the result is
clipped to [0, 1] and stored as float32.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine.serialize import load_tensors, save_tensors
from .lightfield import EPIVolume, LightField4D

_KEYS_A = -0.5


def keys_cubic(x: np.ndarray) -> np.ndarray:
    """Keys interpolation kernel with a = -0.5 (support [-2, 2])."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2, x3 = x * x, x * x * x
    a = _KEYS_A
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _resize_weights(n_in: int, n_out: int, antialias: bool):
    """Per-output-sample source indices (clamped) and normalized weights."""
    scale = n_out / n_in
    if antialias and scale < 1.0:
        width = 2.0 / scale

        def kern(t):
            return scale * keys_cubic(scale * t)

    else:
        width = 2.0
        kern = keys_cubic
    u = (np.arange(n_out, dtype=np.float64) + 0.5) / scale - 0.5
    p = int(np.ceil(2.0 * width)) + 2
    left = np.floor(u - width).astype(np.int64) + 1
    idx = left[:, None] + np.arange(p)[None, :]
    w = kern(u[:, None] - idx)
    w /= w.sum(axis=1, keepdims=True)
    return np.clip(idx, 0, n_in - 1), w


def _resize_axis(arr: np.ndarray, axis: int, n_out: int, antialias: bool) -> np.ndarray:
    idx, w = _resize_weights(arr.shape[axis], n_out, antialias)
    moved = np.moveaxis(arr, axis, 0)
    gathered = moved[idx]  # (n_out, p, ...)
    out = np.einsum("op,op...->o...", w, gathered.astype(np.float64))
    return np.moveaxis(out, 0, axis)


def bicubic_resize(img, out_h: int, out_w: int, antialias: bool = True) -> np.ndarray:
    """Resize an image (H, W) or (H, W, C) to (out_h, out_w); clips to [0, 1]."""
    img = np.asarray(img)
    if img.ndim not in (2, 3):
        raise ValueError(f"expected a 2D image, got {img.ndim} axes")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output extents must be positive, got {out_h}x{out_w}")
    out = _resize_axis(img.astype(np.float64), 0, out_h, antialias)
    out = _resize_axis(out, 1, out_w, antialias)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


@dataclass
class DegradeSpec:
    """How to turn a ground-truth light field into a degraded input."""

    spatial_factor: int = 2
    angular_decimate: bool = False
    antialias: bool = True

    def __post_init__(self):
        if self.spatial_factor < 1:
            raise ValueError(f"spatial_factor must be >= 1, got {self.spatial_factor}")

    def to_dict(self) -> dict:
        return {
            "spatial_factor": self.spatial_factor,
            "angular_decimate": self.angular_decimate,
            "antialias": self.antialias,
        }


def lf_spatial_downsample(lf: LightField4D, s_x: int, antialias: bool = True) -> LightField4D:
    """Bicubic down-sampling of every view independently; angular axes untouched."""
    if s_x < 1:
        raise ValueError(f"scale factor must be >= 1, got {s_x}")
    if lf.height % s_x or lf.width % s_x:
        raise ValueError(
            f"spatial extents {lf.height}x{lf.width} not divisible by factor {s_x}"
        )
    if s_x == 1:
        return lf
    h, w = lf.height // s_x, lf.width // s_x
    data = np.empty((h, w, lf.views_rho, lf.views_tau, lf.channels), dtype=np.float32)
    for rho in range(lf.views_rho):
        for tau in range(lf.views_tau):
            data[:, :, rho, tau, :] = bicubic_resize(
                lf.data[:, :, rho, tau, :], h, w, antialias=antialias
            )
    return LightField4D(data, lf.color_space, check=False)


def angular_decimate(lf: LightField4D) -> LightField4D:
    """Drop every view with an odd rho or tau index (9x9 -> 5x5)."""
    if lf.views_rho % 2 == 0 or lf.views_tau % 2 == 0:
        raise ValueError(
            f"angular decimation needs odd view counts, got {lf.views_rho}x{lf.views_tau}"
        )
    return LightField4D(lf.data[:, :, ::2, ::2, :], lf.color_space, check=False)


def kept_views(a_extent: int) -> list[tuple[int, int]]:
    """The (rho, tau) pairs that survive angular decimation."""
    even = range(0, a_extent, 2)
    return [(r, t) for r in even for t in even]


def degrade_lightfield(lf: LightField4D, spec: DegradeSpec) -> LightField4D:
    out = lf_spatial_downsample(lf, spec.spatial_factor, antialias=spec.antialias)
    if spec.angular_decimate:
        out = angular_decimate(out)
    return out


def pssr_volume(
    vol: EPIVolume,
    s_x: int,
    method: str = "bicubic",
    external: EPIVolume | None = None,
) -> EPIVolume:
    """Spatially up-sample an EPI volume by `s_x` (a-axis untouched).

    method="bicubic" resizes each angular slice; method="external" accepts a
    caller-provided pre-up-sampled volume (the plug-in point for stronger
    single-image super-resolvers) and only validates its shape.
    """
    if s_x < 1:
        raise ValueError(f"scale factor must be >= 1, got {s_x}")
    s1, a, s2 = vol.shape
    target = (s_x * s1, a, s_x * s2)
    if method == "external":
        if external is None:
            raise ValueError("method 'external' requires a pre-up-sampled volume")
        if external.shape != target:
            raise ValueError(
                f"external volume shape {external.shape} does not match target {target}"
            )
        if external.orientation != vol.orientation:
            raise ValueError("external volume orientation mismatch")
        return external
    if method != "bicubic":
        raise ValueError(f"unknown PSSR method {method!r}")
    if s_x == 1:
        return vol
    out = np.empty(target, dtype=np.float32)
    for i in range(a):
        out[:, i, :] = bicubic_resize(vol.data[:, i, :], target[0], target[2], antialias=False)
    return EPIVolume(out, vol.orientation, vol.fixed_index, check=False)


# ---------------------------------------------------------------------------
# Training patches
# ---------------------------------------------------------------------------


@dataclass
class PatchSpec:
    size: int = 48
    stride: int = 16
    plain_reject_threshold: float = 0.02

    def __post_init__(self):
        if not (self.size >= self.stride > 0):
            raise ValueError(f"need size >= stride > 0, got {self.size}/{self.stride}")


@dataclass
class Patch:
    """A spatial crop of a single-channel light field plus its provenance."""

    lf: LightField4D
    y0: int
    x0: int
    scene_id: str = ""


def extract_training_patches(lf: LightField4D, spec: PatchSpec, scene_id: str = "") -> list[Patch]:
    """Sliding-window crops of the full angular grid, skipping flat patches.

    A patch is rejected when the standard deviation of its center view falls
    below `plain_reject_threshold`.
    """
    if lf.channels != 1:
        raise ValueError("training patches are extracted from single-channel light fields")
    if lf.height < spec.size or lf.width < spec.size:
        return []
    center = (lf.views_rho // 2, lf.views_tau // 2)
    out = []
    for y0 in range(0, lf.height - spec.size + 1, spec.stride):
        for x0 in range(0, lf.width - spec.size + 1, spec.stride):
            block = lf.data[y0 : y0 + spec.size, x0 : x0 + spec.size, :, :, :]
            center_view = block[:, :, center[0], center[1], 0]
            if float(np.std(center_view)) < spec.plain_reject_threshold:
                continue
            out.append(Patch(LightField4D(block, "Y", check=False), y0, x0, scene_id))
    return out


PATCH_INDEX_NAME = "index.json"


def save_patches(directory, patches: list[Patch]) -> None:
    """Persist patches as one tensor container each plus an index file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for i, p in enumerate(patches):
        fname = f"patch_{i:05d}.lfw"
        save_tensors(directory / fname, {"patch": p.lf.data[:, :, :, :, 0]})
        index.append({"file": fname, "scene": p.scene_id, "y0": p.y0, "x0": p.x0})
    (directory / PATCH_INDEX_NAME).write_text(json.dumps(index, indent=2))


def load_patches(directory) -> list[Patch]:
    directory = Path(directory)
    index = json.loads((directory / PATCH_INDEX_NAME).read_text())
    out = []
    for rec in index:
        arr = load_tensors(directory / rec["file"])["patch"]
        lf = LightField4D(arr[..., np.newaxis], "Y", check=False)
        out.append(Patch(lf, int(rec["y0"]), int(rec["x0"]), rec["scene"]))
    return out
