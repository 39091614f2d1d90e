"""Synthetic light-field scenes with exactly known geometry.

A scene is a band-limited periodic texture translated by a constant
disparity per angular step: view (rho, tau) samples the texture at
``(y - d*(tau - K), x - d*(rho - K))`` with ``K = (A-1)//2``. Because the
texture is an analytic trigonometric field, views can be evaluated at any
real shift, so ground truth exists for intermediate angular positions and
EPI lines have exactly slope ``d``.

These scenes back the test oracles and the desk-scale training corpus.
"""

from __future__ import annotations

import numpy as np

from .lightfield import LightField4D, join_channels


class TextureField:
    """Periodic band-limited texture: a small sum of random cosine waves.

    Amplitudes are scaled so values stay strictly inside [0, 1]; no clipping
    is applied, which keeps shifted samplings exactly equal to shifted
    images.
    """

    def __init__(self, rng: np.random.Generator, period_y: int, period_x: int,
                 n_waves: int = 12, max_cycles: int = 4, amplitude: float = 0.42):
        self.period_y = int(period_y)
        self.period_x = int(period_x)
        freqs = []
        while len(freqs) < n_waves:
            f = rng.integers(-max_cycles, max_cycles + 1, size=2)
            if f[0] == 0 and f[1] == 0:
                continue
            freqs.append(f)
        self.freqs = np.array(freqs, dtype=np.float64)
        self.phases = rng.uniform(0.0, 2.0 * np.pi, size=n_waves)
        amps = rng.uniform(0.4, 1.0, size=n_waves)
        self.amps = amps * (amplitude / amps.sum())

    def sample(self, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Evaluate on the grid ys x xs (any real coordinates)."""
        ys = np.asarray(ys, dtype=np.float64)[:, None]
        xs = np.asarray(xs, dtype=np.float64)[None, :]
        out = np.full((ys.shape[0], xs.shape[1]), 0.5, dtype=np.float64)
        for (fy, fx), amp, phase in zip(self.freqs, self.amps, self.phases):
            arg = 2.0 * np.pi * (fy * ys / self.period_y + fx * xs / self.period_x) + phase
            out += amp * np.cos(arg)
        return out


def generate_lightfield(
    width: int,
    height: int,
    a_extent: int,
    disparity: float,
    seed: int,
    channels: int = 1,
    n_waves: int = 12,
    max_cycles: int = 4,
) -> LightField4D:
    """Shifted-texture light field with constant disparity `disparity`.

    Raises if the total shift would exceed a quarter of the spatial extent
    (such scenes stop resembling a narrow-baseline light field).
    """
    if a_extent < 1:
        raise ValueError("a_extent must be at least 1")
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    k = (a_extent - 1) // 2
    if abs(disparity) * k >= min(width, height) / 4:
        raise ValueError(
            f"disparity {disparity} with {a_extent} views shifts more than a "
            f"quarter of the {width}x{height} extent"
        )
    rng = np.random.default_rng(seed)
    fields = [
        TextureField(rng, height, width, n_waves=n_waves, max_cycles=max_cycles)
        for _ in range(channels)
    ]
    planes = []
    for field in fields:
        data = np.empty((height, width, a_extent, a_extent, 1), dtype=np.float32)
        for rho in range(a_extent):
            for tau in range(a_extent):
                ys = np.arange(height, dtype=np.float64) - disparity * (tau - k)
                xs = np.arange(width, dtype=np.float64) - disparity * (rho - k)
                data[:, :, rho, tau, 0] = field.sample(ys, xs).astype(np.float32)
        planes.append(LightField4D(data, "Y", check=False))
    if channels == 1:
        return planes[0]
    return join_channels(planes, "RGB", check=False)


def intermediate_view(lf_params: dict, rho: float, tau: float) -> np.ndarray:
    """Ground-truth view of a generated scene at fractional angular position.

    `lf_params` must hold the generate_lightfield arguments (width, height,
    a_extent, disparity, seed and optionally channels/n_waves/max_cycles).
    """
    width = lf_params["width"]
    height = lf_params["height"]
    a_extent = lf_params["a_extent"]
    disparity = lf_params["disparity"]
    channels = lf_params.get("channels", 1)
    rng = np.random.default_rng(lf_params["seed"])
    fields = [
        TextureField(
            rng,
            height,
            width,
            n_waves=lf_params.get("n_waves", 12),
            max_cycles=lf_params.get("max_cycles", 4),
        )
        for _ in range(channels)
    ]
    k = (a_extent - 1) // 2
    ys = np.arange(height, dtype=np.float64) - disparity * (tau - k)
    xs = np.arange(width, dtype=np.float64) - disparity * (rho - k)
    out = np.stack([f.sample(ys, xs) for f in fields], axis=-1)
    return out.astype(np.float32)
