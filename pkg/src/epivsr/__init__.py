"""Light-field super-resolution on 3D EPI volumes.

A light field is decomposed into EPI volumes, each volume is up-sampled by
a preliminary stage (bicubic spatial resizing and/or pairwise novel-view
synthesis), refined by a learned 3D residual network, and the volumes are
merged back. Spatial, angular, and joint tasks share this machinery.
"""

from .evrn import EvrnConfig, EvrnWeights, evrn_forward
from .lightfield import (
    EPIVolume,
    LightField4D,
    ViewIndex,
    crop_central_views,
    extract_api,
    extract_sai,
    load_lightfield,
    merge_volumes,
    rgb_to_ycbcr,
    save_lightfield,
    slice_volumes,
    ycbcr_to_rgb,
)
from .metrics import MetricReport, eval_asr, eval_ssr, psnr, ssim
from .nvs import NvsConfig, NvsWeights, nvs_cnn_forward, nvs_mean, pasr_volume
from .pipeline import SrTask, super_resolve, vsr
from .resample import (
    DegradeSpec,
    Patch,
    PatchSpec,
    angular_decimate,
    bicubic_resize,
    degrade_lightfield,
    extract_training_patches,
    lf_spatial_downsample,
    pssr_volume,
)
from .synthetic import generate_lightfield
from .trainer import (
    TrainSchedule,
    TrainingPairSet,
    build_evrn_pairs,
    build_nvs_pairs,
    lr_at_epoch,
    resume_training,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "DegradeSpec",
    "EPIVolume",
    "EvrnConfig",
    "EvrnWeights",
    "LightField4D",
    "MetricReport",
    "NvsConfig",
    "NvsWeights",
    "Patch",
    "PatchSpec",
    "SrTask",
    "TrainSchedule",
    "TrainingPairSet",
    "ViewIndex",
    "angular_decimate",
    "bicubic_resize",
    "build_evrn_pairs",
    "build_nvs_pairs",
    "crop_central_views",
    "degrade_lightfield",
    "eval_asr",
    "eval_ssr",
    "evrn_forward",
    "extract_api",
    "extract_sai",
    "extract_training_patches",
    "generate_lightfield",
    "lf_spatial_downsample",
    "load_lightfield",
    "lr_at_epoch",
    "merge_volumes",
    "nvs_cnn_forward",
    "nvs_mean",
    "pasr_volume",
    "psnr",
    "pssr_volume",
    "resume_training",
    "rgb_to_ycbcr",
    "save_checkpoint",
    "save_lightfield",
    "slice_volumes",
    "ssim",
    "super_resolve",
    "train",
    "vsr",
    "ycbcr_to_rgb",
]
