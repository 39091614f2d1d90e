"""Angular super-resolution: 5x5 views in, 9x9 views out.

The 56 missing views are first synthesized by averaging neighbor views
(exact for zero disparity, ghosted otherwise), then a trained refinement
network cleans up the full EPI volumes. Scores use the novel-view protocol,
which masks out the 25 input positions.
"""

import numpy as np

from epivsr import (
    EvrnConfig,
    PatchSpec,
    SrTask,
    TrainSchedule,
    angular_decimate,
    build_evrn_pairs,
    eval_asr,
    extract_sai,
    extract_training_patches,
    generate_lightfield,
    super_resolve,
    train,
)

patches = []
for i, d in enumerate((0, 1, 2)):
    scene = generate_lightfield(36, 36, 9, disparity=d, seed=200 + 10 * i, max_cycles=3)
    found = extract_training_patches(
        scene, PatchSpec(size=16, stride=16, plain_reject_threshold=0.01),
        scene_id=f"d{d}")
    patches += found[:2]
pairs = build_evrn_pairs(patches, "asr", pasr_method="mean")
print(f"{len(patches)} patches -> {len(pairs)} volume pairs (a-extent "
      f"{pairs.pairs[0].input.shape[1]} after preliminary synthesis)")

config = EvrnConfig(residual_blocks=1, channels=16, reduction=4, angular_extent=9)
schedule = TrainSchedule(epochs=12, batch_size=8, initial_lr=2e-3, halve_every=6,
                         weight_decay=1e-4, seed=0)
result = train("evrn", pairs, schedule, config=config)
print(f"training loss {result.loss_curve[0]:.4f} -> {result.loss_curve[-1]:.4f}")

print("\nheld-out 5x5 -> 9x9 reconstruction, novel-view protocol:")
for d in (1, 2):
    gt = generate_lightfield(36, 36, 9, disparity=d, seed=950 + d, max_cycles=3)
    low = angular_decimate(gt)
    averaged = super_resolve(low, SrTask(mode="asr", angular=True, pasr_method="mean"))
    refined = super_resolve(low, SrTask(mode="asr", angular=True, pasr_method="mean",
                                        evrn_weights=result.weights))
    # the 25 input views ride through the preliminary stage untouched
    passthrough = np.array_equal(extract_sai(averaged, (0, 0)), extract_sai(low, (0, 0)))
    r0, r1 = eval_asr(averaged, gt), eval_asr(refined, gt)
    print(f"  disparity {d}: averaging {r0.mean_psnr:.2f} dB / {r0.mean_ssim:.4f}, "
          f"refined {r1.mean_psnr:.2f} dB / {r1.mean_ssim:.4f} "
          f"(inputs preserved: {passthrough})")
