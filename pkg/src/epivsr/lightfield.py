"""4D light-field data model: views, EPI volumes, color, and disk I/O.

A light field is stored as a 5-axis float32 array ``L[y, x, rho, tau, c]``
with values in [0, 1]. ``(rho, tau)`` index the angular grid of perspective
views; a sub-aperture image (SAI) fixes them, an angular patch image (API)
fixes the spatial location instead.

An EPI volume is the 3D slice obtained by fixing one angular index and
reordering to ``(s1, a, s2)``:

  - horizontal, fixed tau: ``V[x, rho, y] = L[y, x, rho, tau_i]`` (W x A x H)
  - vertical, fixed rho:   ``V[y, tau, x] = L[y, x, rho_i, tau]`` (H x A x W)

These volumes are the unit all super-resolution work operates on; slicing
and merging are exact inverses.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

COLOR_SPACES = ("RGB", "YCbCr", "Y")
ORIENTATIONS = ("horizontal", "vertical")
ANGULAR_AXES = ("rho", "tau")


class LightField4D:
    """Immutable 4D light field, ``data[y, x, rho, tau, c]`` in [0, 1]."""

    __slots__ = ("data", "color_space")

    def __init__(self, data, color_space: str = "Y", check: bool = True):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 5:
            raise ValueError(f"light field needs 5 axes (y,x,rho,tau,c), got {arr.ndim}")
        if min(arr.shape) < 1:
            raise ValueError(f"light field extents must be positive, got {arr.shape}")
        if color_space not in COLOR_SPACES:
            raise ValueError(f"color_space must be one of {COLOR_SPACES}, got {color_space!r}")
        c = arr.shape[4]
        if c not in (1, 3):
            raise ValueError(f"channel count must be 1 or 3, got {c}")
        if (c == 1) != (color_space == "Y"):
            raise ValueError(f"color_space {color_space!r} inconsistent with {c} channels")
        if check:
            if not np.all(np.isfinite(arr)):
                raise ValueError("light field contains non-finite values")
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError("light field values must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.data = arr
        self.color_space = color_space

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def views_rho(self) -> int:
        return self.data.shape[2]

    @property
    def views_tau(self) -> int:
        return self.data.shape[3]

    @property
    def channels(self) -> int:
        return self.data.shape[4]

    def __repr__(self) -> str:
        h, w, ar, at, c = self.data.shape
        return f"LightField4D({w}x{h}, views {ar}x{at}, {self.color_space})"


class EPIVolume:
    """Immutable single-channel EPI volume with axes ``(s1, a, s2)``."""

    __slots__ = ("data", "orientation", "fixed_index")

    def __init__(self, data, orientation: str, fixed_index: int, check: bool = True):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"EPI volume needs 3 axes (s1,a,s2), got {arr.ndim}")
        if orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
        if check and not np.all(np.isfinite(arr)):
            raise ValueError("EPI volume contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.data = arr
        self.orientation = orientation
        self.fixed_index = int(fixed_index)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"EPIVolume({self.shape}, {self.orientation}, fixed={self.fixed_index})"


class ViewIndex:
    """Zero-based angular position (rho, tau)."""

    __slots__ = ("rho", "tau")

    def __init__(self, rho: int, tau: int):
        self.rho = int(rho)
        self.tau = int(tau)


def _view_tuple(v) -> tuple[int, int]:
    if isinstance(v, ViewIndex):
        return v.rho, v.tau
    rho, tau = v
    return int(rho), int(tau)


def extract_sai(lf: LightField4D, v) -> np.ndarray:
    """Sub-aperture image at angular index (rho, tau): shape (H, W, C)."""
    rho, tau = _view_tuple(v)
    if not (0 <= rho < lf.views_rho and 0 <= tau < lf.views_tau):
        raise IndexError(
            f"view ({rho},{tau}) out of range for {lf.views_rho}x{lf.views_tau} grid"
        )
    return np.array(lf.data[:, :, rho, tau, :])


def extract_api(lf: LightField4D, xy) -> np.ndarray:
    """Angular patch image at spatial location (y, x): shape (Arho, Atau, C)."""
    y, x = (int(xy[0]), int(xy[1]))
    if not (0 <= y < lf.height and 0 <= x < lf.width):
        raise IndexError(f"spatial location ({y},{x}) out of range for {lf.height}x{lf.width}")
    return np.array(lf.data[y, x, :, :, :])


def slice_volumes(lf: LightField4D, axis: str) -> list[EPIVolume]:
    """Decompose a single-channel light field into its EPI volumes.

    axis="tau" yields the horizontal volumes (one per tau, a-axis is rho);
    axis="rho" yields the vertical volumes (one per rho, a-axis is tau).
    """
    if lf.channels != 1:
        raise ValueError("slice_volumes needs a single-channel light field; split channels first")
    if axis not in ANGULAR_AXES:
        raise ValueError(f"axis must be 'rho' or 'tau', got {axis!r}")
    plane = lf.data[:, :, :, :, 0]
    out = []
    if axis == "tau":
        for i in range(lf.views_tau):
            # (y, x, rho) -> (x, rho, y)
            out.append(EPIVolume(plane[:, :, :, i].transpose(1, 2, 0), "horizontal", i, check=False))
    else:
        for i in range(lf.views_rho):
            # (y, x, tau) -> (y, tau, x)
            out.append(EPIVolume(plane[:, :, i, :].transpose(0, 2, 1), "vertical", i, check=False))
    return out


def merge_volumes(volumes, axis: str, check: bool = True) -> LightField4D:
    """Reassemble EPI volumes into a light field; inverse of `slice_volumes`.

    The list order defines the angular position along the merge axis.
    """
    if axis not in ANGULAR_AXES:
        raise ValueError(f"axis must be 'rho' or 'tau', got {axis!r}")
    if not volumes:
        raise ValueError("merge_volumes needs at least one volume")
    want = "horizontal" if axis == "tau" else "vertical"
    shape0 = volumes[0].shape
    for vol in volumes:
        if vol.orientation != want:
            raise ValueError(f"axis {axis!r} expects {want} volumes, got {vol.orientation}")
        if vol.shape != shape0:
            raise ValueError(f"inconsistent volume shapes: {vol.shape} vs {shape0}")
    stack = np.stack([v.data for v in volumes])
    if axis == "tau":
        # (tau, x, rho, y) -> (y, x, rho, tau)
        data = stack.transpose(3, 1, 2, 0)
    else:
        # (rho, y, tau, x) -> (y, x, rho, tau)
        data = stack.transpose(1, 3, 0, 2)
    return LightField4D(data[..., np.newaxis], "Y", check=check)


def split_channels(lf: LightField4D) -> list[LightField4D]:
    """One single-channel light field per color channel, in channel order."""
    return [
        LightField4D(lf.data[..., c : c + 1], "Y", check=False) for c in range(lf.channels)
    ]


def join_channels(channels, color_space: str, check: bool = True) -> LightField4D:
    data = np.concatenate([lf.data for lf in channels], axis=4)
    return LightField4D(data, color_space, check=check)


# BT.601 full-range luma/chroma transform, computed in float64.
_KR, _KG, _KB = 0.299, 0.587, 0.114


def rgb_to_ycbcr(lf: LightField4D) -> LightField4D:
    """Full-range BT.601 RGB -> YCbCr on [0, 1] data."""
    if lf.color_space != "RGB":
        raise ValueError(f"expected RGB light field, got {lf.color_space}")
    rgb = lf.data.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = _KR * r + _KG * g + _KB * b
    cb = 0.5 + (b - y) / (2.0 * (1.0 - _KB))
    cr = 0.5 + (r - y) / (2.0 * (1.0 - _KR))
    out = np.clip(np.stack([y, cb, cr], axis=-1), 0.0, 1.0)
    return LightField4D(out.astype(np.float32), "YCbCr", check=False)


def ycbcr_to_rgb(lf: LightField4D) -> LightField4D:
    """Inverse of `rgb_to_ycbcr`; output clipped to [0, 1]."""
    if lf.color_space != "YCbCr":
        raise ValueError(f"expected YCbCr light field, got {lf.color_space}")
    ycc = lf.data.astype(np.float64)
    y, cb, cr = ycc[..., 0], ycc[..., 1], ycc[..., 2]
    r = y + 2.0 * (1.0 - _KR) * (cr - 0.5)
    b = y + 2.0 * (1.0 - _KB) * (cb - 0.5)
    g = (y - _KR * r - _KB * b) / _KG
    out = np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0)
    return LightField4D(out.astype(np.float32), "RGB", check=False)


def crop_central_views(lf: LightField4D, target: int = 9) -> LightField4D:
    """Keep the central `target` x `target` block of views."""
    if target < 1 or target > min(lf.views_rho, lf.views_tau):
        raise ValueError(
            f"target {target} exceeds angular extents {lf.views_rho}x{lf.views_tau}"
        )
    if (lf.views_rho - target) % 2 or (lf.views_tau - target) % 2:
        raise ValueError(
            f"cannot center a {target}x{target} window in a "
            f"{lf.views_rho}x{lf.views_tau} grid"
        )
    r0 = (lf.views_rho - target) // 2
    t0 = (lf.views_tau - target) // 2
    data = lf.data[:, :, r0 : r0 + target, t0 : t0 + target, :]
    return LightField4D(data, lf.color_space, check=False)


# ---------------------------------------------------------------------------
# Disk format: directory of PNG views named view_RR_TT.png + manifest.json
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.json"


def view_filename(rho: int, tau: int) -> str:
    return f"view_{rho:02d}_{tau:02d}.png"


def _quantize(values: np.ndarray, bit_depth: int) -> np.ndarray:
    peak = (1 << bit_depth) - 1
    q = np.floor(values.astype(np.float64) * peak + 0.5)  # round half up
    return np.clip(q, 0, peak)


def save_lightfield(lf: LightField4D, directory, bit_depth: int = 8, extra: dict | None = None) -> None:
    """Write a light field as a PNG view grid plus manifest.json."""
    if bit_depth not in (8, 16):
        raise ValueError(f"bit depth must be 8 or 16, got {bit_depth}")
    if bit_depth == 16 and lf.channels != 1:
        raise ValueError("16-bit output is only supported for single-channel light fields")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for rho in range(lf.views_rho):
        for tau in range(lf.views_tau):
            img = _quantize(lf.data[:, :, rho, tau, :], bit_depth)
            if lf.channels == 1:
                if bit_depth == 8:
                    pil = Image.fromarray(img[:, :, 0].astype(np.uint8), mode="L")
                else:
                    pil = Image.fromarray(img[:, :, 0].astype(np.uint16))
            else:
                pil = Image.fromarray(img.astype(np.uint8), mode="RGB")
            pil.save(directory / view_filename(rho, tau))
    manifest = {
        "width": lf.width,
        "height": lf.height,
        "views_rho": lf.views_rho,
        "views_tau": lf.views_tau,
        "bit_depth": bit_depth,
        "color_space": lf.color_space,
    }
    if extra:
        manifest.update(extra)
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))


def load_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    return json.loads(path.read_text())


def load_lightfield(directory) -> LightField4D:
    """Read a light field directory, validating the view grid is complete."""
    directory = Path(directory)
    manifest = load_manifest(directory)
    h, w = int(manifest["height"]), int(manifest["width"])
    a_rho, a_tau = int(manifest["views_rho"]), int(manifest["views_tau"])
    bit_depth = int(manifest["bit_depth"])
    color_space = manifest["color_space"]
    channels = 1 if color_space == "Y" else 3
    peak = (1 << bit_depth) - 1
    data = np.empty((h, w, a_rho, a_tau, channels), dtype=np.float32)
    for rho in range(a_rho):
        for tau in range(a_tau):
            path = directory / view_filename(rho, tau)
            if not path.exists():
                raise FileNotFoundError(f"incomplete view grid: missing {path.name}")
            arr = np.asarray(Image.open(path))
            if arr.shape[:2] != (h, w):
                raise ValueError(f"{path.name}: size {arr.shape[:2]} != manifest ({h},{w})")
            if channels == 1:
                if arr.ndim != 2:
                    raise ValueError(f"{path.name}: expected grayscale view")
                arr = arr[:, :, np.newaxis]
            elif arr.ndim != 3 or arr.shape[2] != 3:
                raise ValueError(f"{path.name}: expected RGB view")
            data[:, :, rho, tau, :] = arr.astype(np.float32) / peak
    return LightField4D(data, color_space)
