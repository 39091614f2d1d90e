"""Command-line surface: dataset prep, degradation, super-resolution,
training, evaluation, and inspection.

Commands are config-file first (JSON or TOML) with flag overrides; every
run is reproducible from its config plus seed, and the effective config is
echoed into all outputs. Exit status is 0 only when every contract held.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .evrn import EvrnConfig, EvrnWeights
from .lightfield import load_lightfield, load_manifest, rgb_to_ycbcr, save_lightfield
from .lightfield import LightField4D
from .metrics import eval_asr, eval_ssr, report_csv, save_report
from .nvs import NvsConfig, NvsWeights
from .pipeline import SrTask, super_resolve
from .resample import DegradeSpec, PatchSpec, degrade_lightfield, extract_training_patches
from .synthetic import generate_lightfield
from .trainer import (
    TrainSchedule,
    build_evrn_pairs,
    build_nvs_pairs,
    resume_training,
    save_checkpoint,
    train,
)


def load_config_file(path) -> dict:
    """Read a JSON (.json) or TOML (.toml) config file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def _threads(args) -> int:
    return 1 if args.deterministic else max(1, args.threads)


def cmd_gen_synthetic(args) -> int:
    config = {
        "width": args.width, "height": args.height, "a_extent": args.views,
        "disparity": args.disparity, "seed": args.seed, "channels": args.channels,
        "n_waves": args.waves, "max_cycles": args.max_cycles,
    }
    lf = generate_lightfield(**config)
    save_lightfield(lf, args.out, extra={"generator": config})
    print(f"wrote {lf} to {args.out}")
    return 0


def cmd_degrade(args) -> int:
    manifest = load_manifest(args.input)
    if "degradation" in manifest:
        warnings.warn(f"{args.input} already carries a degradation record; degrading again")
        print("warning: input was already degraded once", file=sys.stderr)
    lf = load_lightfield(args.input)
    spec = DegradeSpec(
        spatial_factor=args.factor,
        angular_decimate=args.angular,
        antialias=not args.no_antialias,
    )
    out = degrade_lightfield(lf, spec)
    save_lightfield(out, args.out, bit_depth=int(manifest.get("bit_depth", 8)),
                    extra={"degradation": spec.to_dict(), "source": str(args.input)})
    print(f"wrote {out} to {args.out}")
    return 0


def _build_task(config: dict, args) -> tuple[SrTask, LightField4D | None]:
    evrn_weights = None
    if args.evrn_weights and not args.no_evrn:
        evrn_weights = EvrnWeights.load(args.evrn_weights)
    nvs_weights = NvsWeights.load(args.nvs_weights) if args.nvs_weights else None
    task = SrTask(
        mode=config["mode"],
        spatial_factor=int(config.get("spatial_factor", 1)),
        angular=bool(config.get("angular", config["mode"] in ("asr", "assr"))),
        pssr_method=config.get("pssr_method", "bicubic"),
        pasr_method=config.get("pasr_method", "mean"),
        evrn_weights=evrn_weights,
        nvs_weights=nvs_weights,
    )
    external = load_lightfield(args.external_pssr) if args.external_pssr else None
    if task.pssr_method == "external" and external is None:
        raise ValueError("task uses pssr_method 'external' but no --external-pssr given")
    return task, external


def cmd_sr(args) -> int:
    config = load_config_file(args.config)
    task, external = _build_task(config, args)
    lf = load_lightfield(args.input)
    t0 = time.perf_counter()
    out = super_resolve(lf, task, external_pssr=external, threads=_threads(args))
    elapsed = time.perf_counter() - t0
    save_lightfield(out, args.out, extra={"task": task.describe(), "source": str(args.input)})
    report = {
        "task": task.describe(),
        "config": config,
        "no_evrn": bool(args.no_evrn),
        "input_shape": list(lf.data.shape),
        "output_shape": list(out.data.shape),
        "seconds": round(elapsed, 3),
        "threads": _threads(args),
    }
    report_path = args.report or str(Path(args.out) / "sr_report.json")
    Path(report_path).write_text(json.dumps(report, indent=2))
    print(f"wrote {out} to {args.out} in {elapsed:.2f}s (report: {report_path})")
    return 0


def _luma_field(lf) -> LightField4D:
    if lf.color_space == "RGB":
        lf = rgb_to_ycbcr(lf)
    if lf.channels == 3:
        lf = LightField4D(lf.data[..., :1], "Y", check=False)
    return lf


def _collect_patches(config: dict) -> list:
    spec_cfg = config.get("patch", {})
    spec = PatchSpec(
        size=int(spec_cfg.get("size", 48)),
        stride=int(spec_cfg.get("stride", 16)),
        plain_reject_threshold=float(spec_cfg.get("plain_reject_threshold", 0.02)),
    )
    patches = []
    for scene in config["scenes"]:
        lf = _luma_field(load_lightfield(scene))
        patches.extend(extract_training_patches(lf, spec, scene_id=str(scene)))
    if not patches:
        raise ValueError("no usable training patches were extracted from the scenes")
    return patches


def cmd_train(args) -> int:
    config = load_config_file(args.config)
    schedule = TrainSchedule(**config.get("schedule", {}))
    model = config.get("model", "evrn")

    if args.resume:
        result = resume_training(args.resume, _pairs_from_config(config, model),
                                 epochs=args.epochs)
    else:
        pairs = _pairs_from_config(config, model)
        if model == "evrn":
            model_cfg = EvrnConfig(**config.get("evrn", {}))
        else:
            model_cfg = NvsConfig(**config.get("nvs", {}))
        result = train(model, pairs, schedule, config=model_cfg,
                       log=lambda rec: print(json.dumps(rec)))
    save_checkpoint(args.out, result)
    weights_path = str(args.out) + ".weights.lfw"
    result.weights.save(weights_path)
    summary = {
        "checkpoint": str(args.out), "weights": weights_path,
        "epochs_done": result.epochs_done,
        "final_loss": result.loss_curve[-1] if result.loss_curve else None,
        "config": config,
    }
    print(json.dumps(summary))
    return 0


def _pairs_from_config(config: dict, model: str):
    patches = _collect_patches(config)
    if model == "nvs":
        return build_nvs_pairs(patches)
    task = config.get("task", "ssr")
    nvs_weights = None
    if config.get("pasr_method") == "cnn":
        nvs_weights = NvsWeights.load(config["nvs_weights"])
    return build_evrn_pairs(
        patches, task,
        spatial_factor=int(config.get("spatial_factor", 2)),
        pasr_method=config.get("pasr_method", "mean"),
        nvs_weights=nvs_weights,
    )


def cmd_eval(args) -> int:
    pred = load_lightfield(args.pred)
    gt = load_lightfield(args.gt)
    report = eval_ssr(pred, gt) if args.protocol == "ssr" else eval_asr(pred, gt)
    save_report(report, args.out)
    if args.csv:
        report_csv({args.label: report}, args.csv)
    print(f"{args.protocol}: PSNR {report.mean_psnr:.4f} dB, SSIM {report.mean_ssim:.6f}")
    return 0


def cmd_inspect(args) -> int:
    path = Path(args.path)
    if path.is_dir() and (path / "manifest.json").exists():
        manifest = load_manifest(path)
        lf = load_lightfield(path)
        print(json.dumps({"type": "lightfield", "manifest": manifest,
                          "value_range": [float(lf.data.min()), float(lf.data.max())]},
                         indent=2))
        return 0
    if path.suffix == ".lfw" or path.with_suffix(".lfw").exists():
        from .engine.serialize import load_tensors

        target = path if path.suffix == ".lfw" else path.with_suffix(".lfw")
        tensors = load_tensors(target)
        entries = [{"name": k, "shape": list(v.shape), "dtype": str(v.dtype)}
                   for k, v in tensors.items()]
        info = {"type": "tensor-container", "entries": entries}
        sidecar = Path(str(target) + ".json")
        if sidecar.exists():
            info["sidecar"] = json.loads(sidecar.read_text())
        print(json.dumps(info, indent=2))
        return 0
    raise ValueError(f"cannot inspect {path}: not a light field directory or container")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epivsr",
        description="Light-field super-resolution on 3D EPI volumes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=1,
                        help="cap on internal parallelism over volumes")
    parser.add_argument("--deterministic", action="store_true",
                        help="force serial execution")
    parser.add_argument("--verbose", action="store_true",
                        help="emit per-volume progress as JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a shifted-texture light field")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--views", type=int, default=9)
    p.add_argument("--disparity", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", type=int, default=1, choices=(1, 3))
    p.add_argument("--waves", type=int, default=12)
    p.add_argument("--max-cycles", type=int, default=4)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("degrade", help="spatially/angularly degrade a light field")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--factor", type=int, default=2)
    p.add_argument("--angular", action="store_true")
    p.add_argument("--no-antialias", action="store_true")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("sr", help="super-resolve a light field")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", required=True, help="task config (JSON or TOML)")
    p.add_argument("--evrn-weights")
    p.add_argument("--nvs-weights")
    p.add_argument("--external-pssr", help="directory with pre-up-sampled views")
    p.add_argument("--no-evrn", action="store_true",
                   help="stage-1 only (skip the refinement network)")
    p.add_argument("--report", help="where to write the timing/shape report")
    p.set_defaults(func=cmd_sr)

    p = sub.add_parser("train", help="train the refinement or synthesis network")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="checkpoint prefix")
    p.add_argument("--resume", help="checkpoint prefix to continue from")
    p.add_argument("--epochs", type=int, help="override target epochs when resuming")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a prediction against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--protocol", choices=("ssr", "asr"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.add_argument("--label", default="scene")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="print metadata for a light field or container")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
