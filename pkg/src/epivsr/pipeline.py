"""Whole-light-field super-resolution built from volume transformations.

`vsr` decomposes a single-channel light field into the EPI volumes of one
angular axis, applies a volume-to-volume function to each, and merges the
results back into a light field. `super_resolve` composes the preliminary
up-samplers and the refinement network into the three tasks:

  - spatial (ssr):  per-axis up-sample + refine, the two axis passes
    averaged with equal weight;
  - angular (asr):  view synthesis + refine on the tau-axis volumes, then
    on the rho-axis volumes of the intermediate result;
  - both (assr):    a spatial-only pass over the tau-axis volumes first,
    then the angular sequence.

Color inputs are converted to YCbCr and each channel is processed
independently with the same weights; outputs are clipped to [0, 1] only
after the final merge.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evrn import EvrnWeights, evrn_forward
from .lightfield import (
    EPIVolume,
    LightField4D,
    join_channels,
    merge_volumes,
    rgb_to_ycbcr,
    slice_volumes,
    split_channels,
    ycbcr_to_rgb,
)
from .nvs import NvsWeights, pasr_volume
from .resample import pssr_volume

logger = logging.getLogger("epivsr.pipeline")

SR_MODES = ("ssr", "asr", "assr")


@dataclass
class SrTask:
    """What to super-resolve and with which stage-1/stage-2 components."""

    mode: str
    spatial_factor: int = 1
    angular: bool = False
    pssr_method: str = "bicubic"
    pasr_method: str = "mean"
    evrn_weights: EvrnWeights | None = None
    nvs_weights: NvsWeights | None = None

    def __post_init__(self):
        if self.mode not in SR_MODES:
            raise ValueError(f"mode must be one of {SR_MODES}, got {self.mode!r}")
        if self.mode == "ssr" and self.spatial_factor <= 1:
            raise ValueError("spatial super-resolution needs spatial_factor > 1")
        if self.mode == "asr" and not self.angular:
            raise ValueError("angular super-resolution needs angular=True")
        if self.mode == "assr" and not (self.spatial_factor > 1 and self.angular):
            raise ValueError("joint super-resolution needs spatial_factor > 1 and angular=True")
        if self.pasr_method == "cnn" and self.angular and self.nvs_weights is None:
            raise ValueError("pasr_method 'cnn' requires synthesis weights")

    def describe(self) -> dict:
        return {
            "mode": self.mode,
            "spatial_factor": self.spatial_factor,
            "angular": self.angular,
            "pssr_method": self.pssr_method,
            "pasr_method": self.pasr_method,
            "evrn": self.evrn_weights is not None,
            "nvs": self.nvs_weights is not None,
        }


def vsr(lf: LightField4D, axis: str, fn, threads: int = 1) -> LightField4D:
    """Slice along `axis`, map `fn` over the volumes, merge the results."""
    if lf.channels != 1:
        raise ValueError("vsr operates on single-channel light fields")
    volumes = slice_volumes(lf, axis)

    def run(vol: EPIVolume) -> EPIVolume:
        t0 = time.perf_counter()
        out = fn(vol)
        logger.info(json.dumps({
            "event": "volume_done", "axis": axis, "index": vol.fixed_index,
            "shape_in": list(vol.shape), "shape_out": list(out.shape),
            "seconds": round(time.perf_counter() - t0, 6),
        }))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, volumes))
    else:
        results = [run(v) for v in volumes]
    shapes = {r.shape for r in results}
    if len(shapes) != 1:
        raise ValueError(f"volume function produced inconsistent shapes: {sorted(shapes)}")
    return merge_volumes(results, axis, check=False)


def _refine(vol: EPIVolume, weights: EvrnWeights | None) -> EPIVolume:
    return vol if weights is None else evrn_forward(vol, weights)


def _spatial_fn(task: SrTask, external_lf: LightField4D | None, axis: str, refine: bool):
    ext_vols = None
    if task.pssr_method == "external":
        if external_lf is None:
            raise ValueError("pssr_method 'external' requires a pre-up-sampled light field")
        ext_vols = {v.fixed_index: v for v in slice_volumes(external_lf, axis)}

    def fn(vol: EPIVolume) -> EPIVolume:
        ext = ext_vols[vol.fixed_index] if ext_vols is not None else None
        up = pssr_volume(vol, task.spatial_factor, method=task.pssr_method, external=ext)
        return _refine(up, task.evrn_weights) if refine else up

    return fn


def _angular_fn(task: SrTask):
    def fn(vol: EPIVolume) -> EPIVolume:
        up = pasr_volume(vol, method=task.pasr_method, weights=task.nvs_weights)
        return _refine(up, task.evrn_weights)

    return fn


def _super_resolve_channel(lf: LightField4D, task: SrTask,
                           external: LightField4D | None, threads: int) -> LightField4D:
    if task.mode == "ssr":
        lf_tau = vsr(lf, "tau", _spatial_fn(task, external, "tau", refine=True), threads)
        lf_rho = vsr(lf, "rho", _spatial_fn(task, external, "rho", refine=True), threads)
        avg = 0.5 * (lf_tau.data + lf_rho.data)
        return LightField4D(avg, "Y", check=False)
    if task.mode == "assr":
        lf = vsr(lf, "tau", _spatial_fn(task, external, "tau", refine=False), threads)
    angular = _angular_fn(task)
    lf = vsr(lf, "tau", angular, threads)
    return vsr(lf, "rho", angular, threads)


def super_resolve(lf: LightField4D, task: SrTask,
                  external_pssr: LightField4D | None = None,
                  threads: int = 1) -> LightField4D:
    """Run one super-resolution task over a full light field.

    `external_pssr`, when given, must hold the externally up-sampled views
    (same angular grid, spatial extents scaled by the task factor); it
    replaces bicubic in the preliminary spatial stage.
    """
    if task.mode in ("asr", "assr") and min(lf.views_rho, lf.views_tau) < 2:
        raise ValueError("angular up-sampling needs at least 2 views per axis")
    source = lf
    restore_rgb = False
    if lf.channels == 3:
        if lf.color_space == "RGB":
            source = rgb_to_ycbcr(lf)
            restore_rgb = True
        ext_channels = split_channels(external_pssr) if external_pssr is not None else None
        if ext_channels is not None and external_pssr.color_space == "RGB":
            ext_channels = split_channels(rgb_to_ycbcr(external_pssr))
        outs = []
        for c, channel in enumerate(split_channels(source)):
            ext = ext_channels[c] if ext_channels is not None else None
            outs.append(_super_resolve_channel(channel, task, ext, threads))
        merged = join_channels(outs, source.color_space, check=False)
        clipped = LightField4D(np.clip(merged.data, 0.0, 1.0), source.color_space)
        return ycbcr_to_rgb(clipped) if restore_rgb else clipped
    out = _super_resolve_channel(lf, task, external_pssr, threads)
    return LightField4D(np.clip(out.data, 0.0, 1.0), "Y")
