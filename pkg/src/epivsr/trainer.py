"""Training-pair construction and the optimization loops.

Pairs are built patch-first: a ground-truth patch is degraded (spatially,
angularly, or both), pushed through the corresponding preliminary
up-sampling stage, and both the result and the ground truth are sliced into
EPI volumes along both angular axes. The refinement network then learns the
stage-1 residual under an L1 objective with AdamW; the view-synthesis
network trains on neighbor-view triples with plain Adam (zero decay).

Every run is deterministic given the schedule seed, and checkpoints carry
enough state (weights, moments, step count, generator state) to resume bit
for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import AdamW, Tensor, backward, l1_loss
from .engine.serialize import load_tensors, save_tensors
from .evrn import EvrnConfig, EvrnWeights, config_hash
from .evrn import forward_tensor as evrn_forward_tensor
from .lightfield import LightField4D, slice_volumes
from .nvs import NvsConfig, NvsWeights
from .nvs import forward_tensor as nvs_forward_tensor
from .pipeline import SrTask, super_resolve
from .resample import Patch, angular_decimate, bicubic_resize, lf_spatial_downsample


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite."""


@dataclass
class TrainSchedule:
    epochs: int = 10
    batch_size: int = 8
    initial_lr: float = 2e-4
    halve_every: int = 10
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if self.batch_size < 1 or self.halve_every < 1:
            raise ValueError("batch_size and halve_every must be positive")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs, "batch_size": self.batch_size,
            "initial_lr": self.initial_lr, "halve_every": self.halve_every,
            "weight_decay": self.weight_decay, "beta1": self.beta1,
            "beta2": self.beta2, "eps": self.eps, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainSchedule":
        return cls(**d)


def lr_at_epoch(schedule: TrainSchedule, epoch: int) -> float:
    """Learning rate halves after every `halve_every` epochs (0-based)."""
    return schedule.initial_lr * 0.5 ** (epoch // schedule.halve_every)


@dataclass
class VolumePair:
    """Aligned (stage-1 input volume, ground-truth volume) arrays."""

    input: np.ndarray
    target: np.ndarray
    provenance: tuple = ()


@dataclass
class NvsPair:
    """Two neighbor views and the ground-truth view between them."""

    input_a: np.ndarray
    input_b: np.ndarray
    target: np.ndarray
    provenance: tuple = ()


@dataclass
class TrainingPairSet:
    task: str
    pairs: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)


def _check_patch(patch: Patch) -> LightField4D:
    lf = patch.lf
    if lf.channels != 1:
        raise ValueError("training patches must be single-channel")
    if lf.views_rho != lf.views_tau or lf.views_rho % 2 == 0 or lf.views_rho < 3:
        raise ValueError(
            f"training patches need an odd square view grid of at least 3x3, "
            f"got {lf.views_rho}x{lf.views_tau}"
        )
    return lf


def _per_view_upsample(lf: LightField4D, height: int, width: int) -> LightField4D:
    data = np.empty((height, width, lf.views_rho, lf.views_tau, 1), dtype=np.float32)
    for r in range(lf.views_rho):
        for t in range(lf.views_tau):
            data[:, :, r, t, :] = bicubic_resize(lf.data[:, :, r, t, :], height, width)
    return LightField4D(data, "Y", check=False)


def _stage1_angular(lf: LightField4D, pasr_method: str, nvs_weights) -> LightField4D:
    task = SrTask(mode="asr", angular=True, pasr_method=pasr_method,
                  nvs_weights=nvs_weights)
    return super_resolve(lf, task)


def _volume_pairs(pre: LightField4D, gt: LightField4D, provenance: tuple) -> list[VolumePair]:
    out = []
    for axis in ("tau", "rho"):
        vin = slice_volumes(pre, axis)
        vgt = slice_volumes(gt, axis)
        for vi, vg in zip(vin, vgt):
            out.append(VolumePair(vi.data, vg.data, provenance + (axis, vi.fixed_index)))
    return out


def build_evrn_pairs(
    patches: list[Patch],
    task: str,
    spatial_factor: int = 2,
    pasr_method: str = "mean",
    nvs_weights: NvsWeights | None = None,
    antialias: bool = True,
) -> TrainingPairSet:
    """EPI-volume pairs (stage-1 output vs ground truth) for one task.

    Both orientations are included, so a patch with an AxA view grid yields
    2A pairs. Spatial inputs are bicubic down- then up-sampled; angular
    inputs are view-decimated then re-synthesized by the chosen method.
    """
    if task not in ("ssr", "asr", "assr"):
        raise ValueError(f"task must be ssr, asr or assr, got {task!r}")
    pair_set = TrainingPairSet(task)
    for patch in patches:
        gt = _check_patch(patch)
        provenance = (patch.scene_id, (patch.y0, patch.x0), task)
        if task == "ssr":
            low = lf_spatial_downsample(gt, spatial_factor, antialias=antialias)
            pre = _per_view_upsample(low, gt.height, gt.width)
        elif task == "asr":
            pre = _stage1_angular(angular_decimate(gt), pasr_method, nvs_weights)
        else:
            low = lf_spatial_downsample(gt, spatial_factor, antialias=antialias)
            spatial_pre = _per_view_upsample(low, gt.height, gt.width)
            pre = _stage1_angular(angular_decimate(spatial_pre), pasr_method, nvs_weights)
        pair_set.pairs.extend(_volume_pairs(pre, gt, provenance))
    return pair_set


def build_nvs_pairs(patches: list[Patch]) -> TrainingPairSet:
    """Neighbor-view synthesis triples from ground-truth patches.

    For each EPI volume the views dropped by angular decimation (odd a-axis
    indices 1, 3, ...) become targets, each predicted from its two even
    neighbors; a 9-view volume yields 4 pairs.
    """
    pair_set = TrainingPairSet("nvs")
    for patch in patches:
        gt = _check_patch(patch)
        if gt.views_rho < 3:
            raise ValueError("view synthesis pairs need at least 3 views per axis")
        for axis in ("tau", "rho"):
            for vol in slice_volumes(gt, axis):
                for t in range(1, vol.shape[1] - 1, 2):
                    pair_set.pairs.append(NvsPair(
                        vol.data[:, t - 1, :], vol.data[:, t + 1, :], vol.data[:, t, :],
                        (patch.scene_id, (patch.y0, patch.x0), axis, vol.fixed_index, t),
                    ))
    return pair_set


@dataclass
class TrainResult:
    weights: object
    optimizer: AdamW
    schedule: TrainSchedule
    epochs_done: int
    loss_curve: list
    rng: np.random.Generator
    model: str


def _pair_loss_grads(model: str, weights, pair):
    if model == "evrn":
        out = evrn_forward_tensor(Tensor(pair.input), weights)
        loss = l1_loss(out, Tensor(pair.target))
    else:
        out = nvs_forward_tensor(Tensor(pair.input_a), Tensor(pair.input_b), weights)
        loss = l1_loss(out, Tensor(pair.target))
    grads = backward(loss, weights.params)
    return float(loss.data), grads


def _run_epochs(model, weights, optimizer, pairs, schedule, rng,
                start_epoch, end_epoch, loss_curve, log=None):
    n = len(pairs)
    for epoch in range(start_epoch, end_epoch):
        lr = lr_at_epoch(schedule, epoch)
        order = rng.permutation(n)
        total = 0.0
        for b0 in range(0, n, schedule.batch_size):
            batch = order[b0 : b0 + schedule.batch_size]
            acc: dict[str, np.ndarray] = {}
            batch_loss = 0.0
            for idx in batch:
                loss, grads = _pair_loss_grads(model, weights, pairs[int(idx)])
                batch_loss += loss
                for k, g in grads.items():
                    if k in acc:
                        acc[k] += g.astype(np.float64)
                    else:
                        acc[k] = g.astype(np.float64)
            batch_loss /= len(batch)
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {optimizer.t + 1} (lr={lr:g})"
                )
            optimizer.step({k: v / len(batch) for k, v in acc.items()}, lr=lr)
            total += batch_loss * len(batch)
        loss_curve.append(total / n)
        if log is not None:
            log({"epoch": epoch, "lr": lr, "loss": loss_curve[-1]})
    return loss_curve


def train(model: str, pair_set: TrainingPairSet, schedule: TrainSchedule,
          config=None, weights=None, log=None) -> TrainResult:
    """Run the full schedule from scratch (or from given initial weights)."""
    if model not in ("evrn", "nvs"):
        raise ValueError(f"model must be 'evrn' or 'nvs', got {model!r}")
    if len(pair_set) == 0:
        raise ValueError("training needs a non-empty pair set")
    if weights is None:
        if config is None:
            config = EvrnConfig() if model == "evrn" else NvsConfig()
        cls = EvrnWeights if model == "evrn" else NvsWeights
        weights = cls.initialize(config, seed=schedule.seed)
    optimizer = AdamW(weights.params, lr=schedule.initial_lr, beta1=schedule.beta1,
                      beta2=schedule.beta2, eps=schedule.eps,
                      weight_decay=schedule.weight_decay)
    rng = np.random.default_rng(schedule.seed)
    curve = _run_epochs(model, weights, optimizer, pair_set.pairs, schedule, rng,
                        0, schedule.epochs, [], log=log)
    return TrainResult(weights, optimizer, schedule, schedule.epochs, curve, rng, model)


# ---------------------------------------------------------------------------
# Checkpoints: tensor container (weights + moments) + JSON state
# ---------------------------------------------------------------------------


def save_checkpoint(prefix, result: TrainResult) -> None:
    prefix = Path(prefix)
    tensors = {f"param.{k}": v for k, v in result.weights.params.arrays().items()}
    tensors.update(result.optimizer.state_arrays())
    save_tensors(prefix.with_suffix(".lfw"), tensors)
    state = {
        "model": result.model,
        "config": result.weights.config.to_dict(),
        "config_hash": config_hash(result.weights.config),
        "schedule": result.schedule.to_dict(),
        "epochs_done": result.epochs_done,
        "optimizer_t": result.optimizer.t,
        "rng_state": result.rng.bit_generator.state,
        "loss_curve": list(result.loss_curve),
    }
    prefix.with_suffix(".json").write_text(json.dumps(state, indent=2))


def load_checkpoint(prefix) -> TrainResult:
    prefix = Path(prefix)
    state = json.loads(prefix.with_suffix(".json").read_text())
    tensors = load_tensors(prefix.with_suffix(".lfw"))
    model = state["model"]
    if model == "evrn":
        weights = EvrnWeights.initialize(EvrnConfig.from_dict(state["config"]), seed=0)
    else:
        weights = NvsWeights.initialize(NvsConfig.from_dict(state["config"]), seed=0)
    if state["config_hash"] != config_hash(weights.config):
        raise ValueError(f"{prefix}: config hash mismatch, refusing to load")
    weights.params.load_arrays(
        {k[len("param."):]: v for k, v in tensors.items() if k.startswith("param.")}
    )
    schedule = TrainSchedule.from_dict(state["schedule"])
    optimizer = AdamW(weights.params, lr=schedule.initial_lr, beta1=schedule.beta1,
                      beta2=schedule.beta2, eps=schedule.eps,
                      weight_decay=schedule.weight_decay)
    optimizer.load_state_arrays(tensors, t=state["optimizer_t"])
    rng = np.random.default_rng()
    rng.bit_generator.state = state["rng_state"]
    return TrainResult(weights, optimizer, schedule, int(state["epochs_done"]),
                       list(state["loss_curve"]), rng, model)


def resume_training(prefix, pair_set: TrainingPairSet, epochs: int | None = None,
                    log=None) -> TrainResult:
    """Continue a checkpointed run; bit-exact with an uninterrupted run."""
    result = load_checkpoint(prefix)
    target = result.schedule.epochs if epochs is None else int(epochs)
    if target < result.epochs_done:
        raise ValueError(
            f"target epochs {target} precedes checkpoint at {result.epochs_done}"
        )
    _run_epochs(result.model, result.weights, result.optimizer, pair_set.pairs,
                result.schedule, result.rng, result.epochs_done, target,
                result.loss_curve, log=log)
    result.epochs_done = target
    return result
