"""Preliminary angular up-sampling: novel-view synthesis between view pairs.

Two synthesizers are provided. `nvs_mean` averages the neighboring views,
which is already strong for narrow-baseline light fields. `nvs_cnn_forward`
runs a small residual 2D network on the stacked pair: a shallow feature
extraction layer, a chain of residual blocks (1x1 bottleneck then
conv-prelu-conv with a local skip), a global skip adding the first feature
map back, and a final squeeze to one channel.

`pasr_volume` applies either synthesizer between every consecutive pair of
a-axis slices, growing the extent from A to 2A-1 while passing the input
slices through untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import (
    ParamStore,
    Tensor,
    add,
    concat,
    conv2d_same,
    glorot_uniform_init,
    load_tensors,
    no_grad,
    prelu,
    reshape,
    save_tensors,
)
from .evrn import config_hash
from .lightfield import EPIVolume


@dataclass
class NvsConfig:
    residual_blocks: int = 7
    channels: int = 64

    def __post_init__(self):
        if self.residual_blocks < 1:
            raise ValueError("residual_blocks must be at least 1")
        if self.channels < 1:
            raise ValueError("channels must be at least 1")

    def to_dict(self) -> dict:
        return {"residual_blocks": self.residual_blocks, "channels": self.channels}

    @classmethod
    def from_dict(cls, d: dict) -> "NvsConfig":
        return cls(**d)


class NvsWeights:
    def __init__(self, config: NvsConfig, params: ParamStore):
        self.config = config
        self.params = params
        _validate_shapes(config, params)

    @classmethod
    def initialize(cls, config: NvsConfig, seed: int = 0) -> "NvsWeights":
        rng = np.random.default_rng(seed)
        p = ParamStore()
        c = config.channels

        def conv(name, shape):
            p.add(f"{name}.kernel", glorot_uniform_init(shape, rng), weight_decay=True)
            p.add(f"{name}.bias", np.zeros(shape[-1], np.float32), weight_decay=False)

        def act(name, n):
            p.add(f"{name}.slope", np.zeros(n, np.float32), weight_decay=False)

        conv("sfe", (3, 3, 2, c))
        act("sfe", c)
        for i in range(1, config.residual_blocks + 1):
            conv(f"block{i}.bottleneck", (1, 1, c, c))
            act(f"block{i}.bottleneck", c)
            conv(f"block{i}.conv1", (3, 3, c, c))
            act(f"block{i}.conv1", c)
            conv(f"block{i}.conv2", (3, 3, c, c))
        conv("tail", (3, 3, c, 1))
        return cls(config, p)

    def zeroed(self) -> "NvsWeights":
        out = NvsWeights.initialize(self.config, seed=0)
        out.params.load_arrays({k: np.zeros_like(v) for k, v in self.params.arrays().items()})
        return out

    def save(self, path) -> None:
        save_tensors(path, self.params.arrays())
        sidecar = {"model": "nvs", "config": self.config.to_dict(),
                   "hash": config_hash(self.config)}
        Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def load(cls, path) -> "NvsWeights":
        sidecar = json.loads(Path(str(path) + ".json").read_text())
        config = NvsConfig.from_dict(sidecar["config"])
        if sidecar.get("hash") != config_hash(config):
            raise ValueError(f"{path}: config hash mismatch, refusing to load")
        weights = cls.initialize(config, seed=0)
        weights.params.load_arrays(load_tensors(path))
        return weights


def _validate_shapes(config: NvsConfig, params: ParamStore) -> None:
    c = config.channels
    expected: dict[str, tuple[int, ...]] = {
        "sfe.kernel": (3, 3, 2, c), "sfe.bias": (c,), "sfe.slope": (c,),
        "tail.kernel": (3, 3, c, 1), "tail.bias": (1,),
    }
    for i in range(1, config.residual_blocks + 1):
        expected[f"block{i}.bottleneck.kernel"] = (1, 1, c, c)
        expected[f"block{i}.bottleneck.bias"] = (c,)
        expected[f"block{i}.bottleneck.slope"] = (c,)
        expected[f"block{i}.conv1.kernel"] = (3, 3, c, c)
        expected[f"block{i}.conv1.bias"] = (c,)
        expected[f"block{i}.conv1.slope"] = (c,)
        expected[f"block{i}.conv2.kernel"] = (3, 3, c, c)
        expected[f"block{i}.conv2.bias"] = (c,)
    names = set(params.names())
    if names != set(expected):
        missing = sorted(set(expected) - names)
        extra = sorted(names - set(expected))
        raise ValueError(f"parameter set mismatch: missing {missing}, unexpected {extra}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ValueError(
                f"parameter {name!r} has shape {params[name].shape}, expected {shape}"
            )


def nvs_mean(img_a: np.ndarray, img_b: np.ndarray) -> np.ndarray:
    """Novel view as the pixelwise average of its two neighbors."""
    img_a = np.asarray(img_a)
    img_b = np.asarray(img_b)
    if img_a.shape != img_b.shape:
        raise ValueError(f"shape mismatch: {img_a.shape} vs {img_b.shape}")
    return ((img_a.astype(np.float64) + img_b.astype(np.float64)) / 2.0).astype(np.float32)


def forward_tensor(img_a: Tensor, img_b: Tensor, weights: NvsWeights) -> Tensor:
    """Synthesize the view between two (H, W) tensors; differentiable."""
    p = weights.params
    if img_a.shape != img_b.shape or img_a.ndim != 2:
        raise ValueError(
            f"inputs must be equal-shaped single-channel images, got "
            f"{img_a.shape} and {img_b.shape}"
        )
    h, w = img_a.shape
    x = concat([reshape(img_a, (h, w, 1)), reshape(img_b, (h, w, 1))], axis=2)
    f0 = prelu(conv2d_same(x, p["sfe.kernel"], p["sfe.bias"]), p["sfe.slope"])
    f = f0
    for i in range(1, weights.config.residual_blocks + 1):
        t = prelu(conv2d_same(f, p[f"block{i}.bottleneck.kernel"],
                              p[f"block{i}.bottleneck.bias"]),
                  p[f"block{i}.bottleneck.slope"])
        t = prelu(conv2d_same(t, p[f"block{i}.conv1.kernel"], p[f"block{i}.conv1.bias"]),
                  p[f"block{i}.conv1.slope"])
        t = conv2d_same(t, p[f"block{i}.conv2.kernel"], p[f"block{i}.conv2.bias"])
        f = add(f, t)
    merged = add(f, f0)
    out = conv2d_same(merged, p["tail.kernel"], p["tail.bias"])
    return reshape(out, (h, w))


def nvs_cnn_forward(img_a: np.ndarray, img_b: np.ndarray, weights: NvsWeights) -> np.ndarray:
    """Network synthesis of the intermediate view (unclipped float32)."""
    img_a = np.asarray(img_a, dtype=np.float32)
    img_b = np.asarray(img_b, dtype=np.float32)
    with no_grad():
        out = forward_tensor(Tensor(img_a), Tensor(img_b), weights)
    return out.data


def pasr_volume(vol: EPIVolume, method: str = "mean",
                weights: NvsWeights | None = None) -> EPIVolume:
    """Double the angular sampling of a volume: (s1, A, s2) -> (s1, 2A-1, s2).

    Output slices at even indices 2i are the input slices, bit for bit; the
    slice at 2i+1 is synthesized from input slices i and i+1.
    """
    s1, a, s2 = vol.shape
    if a < 2:
        raise ValueError(f"angular up-sampling needs at least 2 views, got {a}")
    if method == "cnn":
        if weights is None:
            raise ValueError("method 'cnn' requires synthesis weights")
        synth = lambda u, v: nvs_cnn_forward(u, v, weights)
    elif method == "mean":
        synth = nvs_mean
    else:
        raise ValueError(f"unknown PASR method {method!r}")
    out = np.empty((s1, 2 * a - 1, s2), dtype=np.float32)
    out[:, ::2, :] = vol.data
    for i in range(a - 1):
        out[:, 2 * i + 1, :] = synth(vol.data[:, i, :], vol.data[:, i + 1, :])
    return EPIVolume(out, vol.orientation, vol.fixed_index, check=False)
