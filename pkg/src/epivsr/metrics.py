"""PSNR/SSIM and the per-view evaluation protocols.

Metrics run on the luma channel of [0, 1] data with peak 1.0. SSIM is the
mean of local scores under an 11x11 Gaussian window (sigma 1.5, K1 = 0.01,
K2 = 0.03), evaluated where the window fits entirely inside the image.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .lightfield import LightField4D, rgb_to_ycbcr
from .resample import kept_views

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE); +inf when the images are identical."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"psnr shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Mean local structural similarity of two single-channel images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"ssim shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 2:
        raise ValueError(f"ssim expects single-channel 2D images, got {a.ndim} axes")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(
            f"image {a.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    wa = sliding_window_view(a, (SSIM_WINDOW, SSIM_WINDOW))
    wb = sliding_window_view(b, (SSIM_WINDOW, SSIM_WINDOW))
    mu_a = np.einsum("ijkl,kl->ij", wa, w)
    mu_b = np.einsum("ijkl,kl->ij", wb, w)
    e_aa = np.einsum("ijkl,kl->ij", wa * wa, w)
    e_bb = np.einsum("ijkl,kl->ij", wb * wb, w)
    e_ab = np.einsum("ijkl,kl->ij", wa * wb, w)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    """Per-view metric grids plus protocol mask and aggregate means."""

    protocol: str
    psnr_grid: np.ndarray  # (Arho, Atau)
    ssim_grid: np.ndarray
    mask: np.ndarray  # bool, True where the view counts toward the aggregate
    mean_psnr: float
    mean_ssim: float

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "psnr": self.psnr_grid.tolist(),
            "ssim": self.ssim_grid.tolist(),
            "mask": self.mask.astype(int).tolist(),
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            protocol=d["protocol"],
            psnr_grid=np.asarray(d["psnr"], dtype=np.float64),
            ssim_grid=np.asarray(d["ssim"], dtype=np.float64),
            mask=np.asarray(d["mask"], dtype=bool),
            mean_psnr=float(d["mean_psnr"]),
            mean_ssim=float(d["mean_ssim"]),
        )


def save_report(report: MetricReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2))


def load_report(path) -> MetricReport:
    return MetricReport.from_dict(json.loads(Path(path).read_text()))


def report_csv(reports: dict[str, MetricReport], path) -> None:
    """One row per labeled report: label, protocol, PSNR, SSIM, PSNR/SSIM."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "protocol", "psnr", "ssim", "psnr/ssim"])
        for label, rep in reports.items():
            writer.writerow(
                [label, rep.protocol, f"{rep.mean_psnr:.4f}", f"{rep.mean_ssim:.6f}",
                 f"{rep.mean_psnr:.2f}/{rep.mean_ssim:.4f}"]
            )


def lf_luma(lf: LightField4D) -> np.ndarray:
    """Luma plane (H, W, Arho, Atau) of a light field in any color space."""
    if lf.color_space == "RGB":
        lf = rgb_to_ycbcr(lf)
    return np.clip(lf.data[..., 0], 0.0, 1.0)


def _per_view_metrics(pred: LightField4D, gt: LightField4D, protocol: str,
                      mask: np.ndarray) -> MetricReport:
    if pred.data.shape != gt.data.shape:
        raise ValueError(
            f"prediction shape {pred.data.shape} != ground truth {gt.data.shape}"
        )
    yp = lf_luma(pred)
    yg = lf_luma(gt)
    a_rho, a_tau = pred.views_rho, pred.views_tau
    psnr_grid = np.empty((a_rho, a_tau), dtype=np.float64)
    ssim_grid = np.empty((a_rho, a_tau), dtype=np.float64)
    for r in range(a_rho):
        for t in range(a_tau):
            psnr_grid[r, t] = psnr(yp[:, :, r, t], yg[:, :, r, t])
            ssim_grid[r, t] = ssim(yp[:, :, r, t], yg[:, :, r, t])
    mean_psnr = float(np.mean(psnr_grid[mask]))
    mean_ssim = float(np.mean(ssim_grid[mask]))
    return MetricReport(protocol, psnr_grid, ssim_grid, mask, mean_psnr, mean_ssim)


def eval_ssr(pred: LightField4D, gt: LightField4D) -> MetricReport:
    """Spatial-SR protocol: average metrics over the central 7x7 views."""
    if pred.views_rho != 9 or pred.views_tau != 9:
        raise ValueError("the spatial protocol expects a 9x9 view grid")
    mask = np.zeros((9, 9), dtype=bool)
    mask[1:8, 1:8] = True
    return _per_view_metrics(pred, gt, "ssr", mask)


def eval_asr(pred: LightField4D, gt: LightField4D) -> MetricReport:
    """Angular-SR protocol: metrics over the 56 views absent from the 5x5 input."""
    if pred.views_rho != 9 or pred.views_tau != 9:
        raise ValueError("the angular protocol expects a 9x9 view grid")
    mask = np.ones((9, 9), dtype=bool)
    for r, t in kept_views(9):
        mask[r, t] = False
    return _per_view_metrics(pred, gt, "asr", mask)
