"""Tour of the light-field data model.

Builds a synthetic scene with known disparity, pulls out views, angular
patches, and EPI volumes, and verifies the two structural facts everything
else relies on: slicing/merging is lossless, and scene points trace lines
of slope `disparity` through the EPI volumes.
"""

import numpy as np

from epivsr import extract_api, extract_sai, generate_lightfield, merge_volumes, slice_volumes

# A 24x24 scene seen from a 5x5 grid of viewpoints. Each step across the
# grid shifts the image by exactly 2 pixels (the disparity).
lf = generate_lightfield(width=24, height=24, a_extent=5, disparity=2, seed=7)
print(f"scene: {lf}")

center = extract_sai(lf, (2, 2))
corner = extract_sai(lf, (4, 2))
print(f"center view {center.shape}, corner view {corner.shape}")
print("corner equals center shifted by 2*(4-2) = 4 px:",
      np.array_equal(corner[:, 4:, 0], center[:, :-4, 0]))

patch = extract_api(lf, (12, 12))
print(f"angular patch at (12,12): {patch.shape} "
      f"(one pixel per viewpoint, range {patch.min():.3f}..{patch.max():.3f})")

# EPI volumes: fix tau, reorder to (x, rho, y). A point at depth d moves d
# pixels per angular step, so consecutive a-slices are shifted copies.
volumes = slice_volumes(lf, "tau")
print(f"{len(volumes)} horizontal volumes of shape {volumes[0].shape}")
v = volumes[2].data
print("EPI line property V[x, a+1, y] == V[x-2, a, y]:",
      all(np.array_equal(v[2:, a + 1, :], v[:-2, a, :]) for a in range(4)))

rebuilt = merge_volumes(volumes, "tau")
print("merge(slice(lf)) == lf bit-exactly:", np.array_equal(rebuilt.data, lf.data))
