"""EPI-volume refinement network.

A 3D-convolutional residual network that predicts a correction added to a
preliminarily up-sampled EPI volume through a long skip connection. Feature
extraction stacks densely connected channel-attention residual blocks; the
reconstruction splits into a spatial path and an angular path, each scaled
by its own attention weighting, whose outputs are concatenated and squeezed
back to one channel.

Attention blocks:
  - CAW scales channels from a global-average-pooled descriptor pushed
    through a bottleneck pair of dense layers and a sigmoid;
  - SAW scales spatial positions from pooled (avg and max over a-axis and
    channels) maps fused by a 5x5 convolution and a sigmoid;
  - AAW scales a-axis slices from pooled descriptors fused by a dense layer
    (2A -> A) and a sigmoid.

All attention weights lie strictly inside (0, 1); with every parameter at
zero the whole network is exactly the identity on its input.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import (
    ParamStore,
    Tensor,
    add,
    astensor,
    broadcast_mul,
    concat,
    conv2d_same,
    conv3d_same,
    dense,
    glorot_uniform_init,
    load_tensors,
    no_grad,
    pool_over_axes,
    prelu,
    relu,
    reshape,
    save_tensors,
    sigmoid,
)
from .lightfield import EPIVolume


@dataclass
class EvrnConfig:
    residual_blocks: int = 7
    channels: int = 64
    reduction: int = 16
    angular_extent: int = 9
    use_caw: bool = True
    use_saw: bool = True
    use_aaw: bool = True
    caw_mid_activation: bool = True

    def __post_init__(self):
        if self.residual_blocks < 1:
            raise ValueError("residual_blocks must be at least 1")
        if self.channels % self.reduction:
            raise ValueError(
                f"channels ({self.channels}) must be divisible by the "
                f"reduction ratio ({self.reduction})"
            )
        if self.angular_extent < 1:
            raise ValueError("angular_extent must be at least 1")

    def to_dict(self) -> dict:
        return {
            "residual_blocks": self.residual_blocks,
            "channels": self.channels,
            "reduction": self.reduction,
            "angular_extent": self.angular_extent,
            "use_caw": self.use_caw,
            "use_saw": self.use_saw,
            "use_aaw": self.use_aaw,
            "caw_mid_activation": self.caw_mid_activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvrnConfig":
        return cls(**d)


def config_hash(cfg) -> str:
    """Stable digest of a config dict, embedded in weight sidecars."""
    payload = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def caw_weights(feature, down_w, down_b, up_w, up_b, mid_activation: bool = True) -> Tensor:
    """Channel attention weights (1,1,1,C) from a feature map (s1,a,s2,C)."""
    f = astensor(feature)
    c = f.shape[-1]
    pooled = pool_over_axes(f, (0, 1, 2), "avg")
    v = reshape(pooled, (c,))
    h = dense(v, down_w, down_b)
    if mid_activation:
        h = relu(h)
    u = dense(h, up_w, up_b)
    return reshape(sigmoid(u), (1, 1, 1, c))


def saw_weights(feature, kernel, bias) -> Tensor:
    """Spatial attention weights (s1,1,s2,1) from a feature map (s1,a,s2,C)."""
    f = astensor(feature)
    s1, _, s2, _ = f.shape
    p_avg = pool_over_axes(f, (1, 3), "avg")
    p_max = pool_over_axes(f, (1, 3), "max")
    pooled = concat([p_avg, p_max], axis=3)  # (s1,1,s2,2)
    fused = conv2d_same(reshape(pooled, (s1, s2, 2)), kernel, bias)
    return reshape(sigmoid(fused), (s1, 1, s2, 1))


def aaw_weights(feature, weight, bias) -> Tensor:
    """Angular attention weights (1,A,1,1) from a feature map (s1,a,s2,C)."""
    f = astensor(feature)
    a = f.shape[1]
    p_avg = reshape(pool_over_axes(f, (0, 2, 3), "avg"), (a,))
    p_max = reshape(pool_over_axes(f, (0, 2, 3), "max"), (a,))
    fused = dense(concat([p_avg, p_max], axis=0), weight, bias)
    return reshape(sigmoid(fused), (1, a, 1, 1))


def car_block(
    feature,
    conv1_kernel,
    conv1_bias,
    slope,
    conv2_kernel,
    conv2_bias,
    caw_params=None,
    mid_activation: bool = True,
) -> Tensor:
    """Channel-attention residual block: local skip around conv-prelu-conv.

    `caw_params` is (down_w, down_b, up_w, up_b) or None to bypass the
    channel scaling (the ablation wiring).
    """
    f = astensor(feature)
    body = conv3d_same(prelu(conv3d_same(f, conv1_kernel, conv1_bias), slope),
                       conv2_kernel, conv2_bias)
    if caw_params is not None:
        w = caw_weights(body, *caw_params, mid_activation=mid_activation)
        body = broadcast_mul(body, w)
    return add(f, body)


class EvrnWeights:
    """Named parameter set for one network instance, tied to its config."""

    def __init__(self, config: EvrnConfig, params: ParamStore):
        self.config = config
        self.params = params
        _validate_shapes(config, params)

    @classmethod
    def initialize(cls, config: EvrnConfig, seed: int = 0) -> "EvrnWeights":
        """Glorot-uniform kernels, zero biases and activation slopes."""
        rng = np.random.default_rng(seed)
        p = ParamStore()
        c, r = config.channels, config.reduction
        cr = c // r

        def conv(name, shape):
            p.add(f"{name}.kernel", glorot_uniform_init(shape, rng), weight_decay=True)
            p.add(f"{name}.bias", np.zeros(shape[-1], np.float32), weight_decay=False)

        def act(name, n):
            p.add(f"{name}.slope", np.zeros(n, np.float32), weight_decay=False)

        conv("sfe0", (3, 3, 3, 1, c))
        act("sfe0", c)
        for i in range(1, config.residual_blocks + 1):
            conv(f"block{i}.fbn", (1, 1, 1, i * c, c))
            act(f"block{i}.fbn", c)
            conv(f"block{i}.conv1", (3, 3, 3, c, c))
            act(f"block{i}.conv1", c)
            conv(f"block{i}.conv2", (3, 3, 3, c, c))
            if config.use_caw:
                p.add(f"block{i}.caw.down.weight", glorot_uniform_init((c, cr), rng))
                p.add(f"block{i}.caw.down.bias", np.zeros(cr, np.float32), weight_decay=False)
                p.add(f"block{i}.caw.up.weight", glorot_uniform_init((cr, c), rng))
                p.add(f"block{i}.caw.up.bias", np.zeros(c, np.float32), weight_decay=False)
        dense_in = (config.residual_blocks + 1) * c
        for path in ("spatial", "angular"):
            conv(f"{path}.fbn", (1, 1, 1, dense_in, c))
            act(f"{path}.fbn", c)
            conv(f"{path}.sfe1", (3, 3, 3, c, c))
            act(f"{path}.sfe1", c)
            conv(f"{path}.sfe2", (3, 3, 3, c, c))
            act(f"{path}.sfe2", c)
        if config.use_saw:
            conv("spatial.saw", (5, 5, 2, 1))
        if config.use_aaw:
            a = config.angular_extent
            p.add("angular.aaw.weight", glorot_uniform_init((2 * a, a), rng))
            p.add("angular.aaw.bias", np.zeros(a, np.float32), weight_decay=False)
        conv("tail", (3, 3, 3, 2 * c, 1))
        return cls(config, p)

    def zeroed(self) -> "EvrnWeights":
        """Copy with every parameter set to zero (identity network)."""
        out = EvrnWeights.initialize(self.config, seed=0)
        out.params.load_arrays({k: np.zeros_like(v) for k, v in self.params.arrays().items()})
        return out

    def save(self, path) -> None:
        save_tensors(path, self.params.arrays())
        sidecar = {"model": "evrn", "config": self.config.to_dict(),
                   "hash": config_hash(self.config)}
        Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def load(cls, path) -> "EvrnWeights":
        sidecar = json.loads(Path(str(path) + ".json").read_text())
        config = EvrnConfig.from_dict(sidecar["config"])
        if sidecar.get("hash") != config_hash(config):
            raise ValueError(f"{path}: config hash mismatch, refusing to load")
        arrays = load_tensors(path)
        weights = cls.initialize(config, seed=0)
        weights.params.load_arrays(arrays)
        return weights


def _expected_shapes(config: EvrnConfig) -> dict[str, tuple[int, ...]]:
    c, r = config.channels, config.reduction
    cr = c // r
    shapes: dict[str, tuple[int, ...]] = {
        "sfe0.kernel": (3, 3, 3, 1, c), "sfe0.bias": (c,), "sfe0.slope": (c,),
        "tail.kernel": (3, 3, 3, 2 * c, 1), "tail.bias": (1,),
    }
    for i in range(1, config.residual_blocks + 1):
        shapes[f"block{i}.fbn.kernel"] = (1, 1, 1, i * c, c)
        shapes[f"block{i}.fbn.bias"] = (c,)
        shapes[f"block{i}.fbn.slope"] = (c,)
        shapes[f"block{i}.conv1.kernel"] = (3, 3, 3, c, c)
        shapes[f"block{i}.conv1.bias"] = (c,)
        shapes[f"block{i}.conv1.slope"] = (c,)
        shapes[f"block{i}.conv2.kernel"] = (3, 3, 3, c, c)
        shapes[f"block{i}.conv2.bias"] = (c,)
        if config.use_caw:
            shapes[f"block{i}.caw.down.weight"] = (c, cr)
            shapes[f"block{i}.caw.down.bias"] = (cr,)
            shapes[f"block{i}.caw.up.weight"] = (cr, c)
            shapes[f"block{i}.caw.up.bias"] = (c,)
    dense_in = (config.residual_blocks + 1) * c
    for path in ("spatial", "angular"):
        shapes[f"{path}.fbn.kernel"] = (1, 1, 1, dense_in, c)
        shapes[f"{path}.fbn.bias"] = (c,)
        shapes[f"{path}.fbn.slope"] = (c,)
        shapes[f"{path}.sfe1.kernel"] = (3, 3, 3, c, c)
        shapes[f"{path}.sfe1.bias"] = (c,)
        shapes[f"{path}.sfe1.slope"] = (c,)
        shapes[f"{path}.sfe2.kernel"] = (3, 3, 3, c, c)
        shapes[f"{path}.sfe2.bias"] = (c,)
        shapes[f"{path}.sfe2.slope"] = (c,)
    if config.use_saw:
        shapes["spatial.saw.kernel"] = (5, 5, 2, 1)
        shapes["spatial.saw.bias"] = (1,)
    if config.use_aaw:
        a = config.angular_extent
        shapes["angular.aaw.weight"] = (2 * a, a)
        shapes["angular.aaw.bias"] = (a,)
    return shapes


def _validate_shapes(config: EvrnConfig, params: ParamStore) -> None:
    expected = _expected_shapes(config)
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


def _sfe(x: Tensor, p: ParamStore, name: str) -> Tensor:
    return prelu(conv3d_same(x, p[f"{name}.kernel"], p[f"{name}.bias"]), p[f"{name}.slope"])


def forward_tensor(x: Tensor, weights: EvrnWeights) -> Tensor:
    """Full network on a volume tensor (s1, a, s2); differentiable."""
    cfg = weights.config
    p = weights.params
    if x.ndim != 3:
        raise ValueError(f"expected a 3-axis volume, got shape {x.shape}")
    if cfg.use_aaw and x.shape[1] != cfg.angular_extent:
        raise ValueError(
            f"a-axis extent {x.shape[1]} does not match the angular attention "
            f"layer trained for {cfg.angular_extent}"
        )
    s1, a, s2 = x.shape
    x4 = reshape(x, (s1, a, s2, 1))

    feats = [_sfe(x4, p, "sfe0")]
    for i in range(1, cfg.residual_blocks + 1):
        dense_feat = feats[0] if len(feats) == 1 else concat(feats, axis=3)
        fb = _sfe(dense_feat, p, f"block{i}.fbn")
        caw_params = None
        if cfg.use_caw:
            caw_params = (p[f"block{i}.caw.down.weight"], p[f"block{i}.caw.down.bias"],
                          p[f"block{i}.caw.up.weight"], p[f"block{i}.caw.up.bias"])
        feats.append(
            car_block(
                fb,
                p[f"block{i}.conv1.kernel"], p[f"block{i}.conv1.bias"],
                p[f"block{i}.conv1.slope"],
                p[f"block{i}.conv2.kernel"], p[f"block{i}.conv2.bias"],
                caw_params=caw_params,
                mid_activation=cfg.caw_mid_activation,
            )
        )
    dense_all = concat(feats, axis=3)  # (R+1)*C channels

    def path(prefix: str, attn) -> Tensor:
        t = _sfe(dense_all, p, f"{prefix}.fbn")
        t = _sfe(t, p, f"{prefix}.sfe1")
        if attn is not None:
            t = broadcast_mul(t, attn(t))
        return _sfe(t, p, f"{prefix}.sfe2")

    attn_s = None
    if cfg.use_saw:
        attn_s = lambda t: saw_weights(t, p["spatial.saw.kernel"], p["spatial.saw.bias"])
    attn_a = None
    if cfg.use_aaw:
        attn_a = lambda t: aaw_weights(t, p["angular.aaw.weight"], p["angular.aaw.bias"])
    g_spatial = path("spatial", attn_s)
    g_angular = path("angular", attn_a)

    residual = conv3d_same(concat([g_spatial, g_angular], axis=3),
                           p["tail.kernel"], p["tail.bias"])
    return reshape(add(x4, residual), (s1, a, s2))


def evrn_forward(vol: EPIVolume, weights: EvrnWeights) -> EPIVolume:
    """Refine one EPI volume; shape, orientation and index are preserved."""
    with no_grad():
        out = forward_tensor(Tensor(vol.data), weights)
    return EPIVolume(out.data, vol.orientation, vol.fixed_index, check=False)
