"""Dev probe: ES recovery vs mutation strength and optimize resolution."""
import sys
import time

import numpy as np

import stitchcal as sc
from stitchcal.evolve import ESConfig, evolve
from stitchcal.fitness import LossWeights, SceneInputs, decode_genome, loss_total
from stitchcal.simulate import (
    DriftSpec,
    SceneTruth,
    apply_drift,
    default_cameras,
    metric_iou,
    metric_roe,
    metric_stitch,
    metric_tre,
)

f = sc.PlayfieldModel()
marks = sc.standard_markings(f.length_m, f.width_m)
cams = default_cameras(f)
masks = [sc.render_mask(f, marks, c) for c in cams]
gt = [c.pose for c in cams]
drift = DriftSpec(sigma_translation=0.0935, sigma_rotation=0.057)
frame_eval = sc.BirdsEyeFrame.for_field(f, 0.1)
tmpl_eval = sc.render_template(marks, 0.1)

res_list = [float(x) for x in sys.argv[1].split(",")]
sr_list = [float(x) for x in sys.argv[2].split(",")]
seeds = [int(x) for x in sys.argv[3].split(",")]
radii = tuple(float(x) for x in sys.argv[4].split(",")) if len(sys.argv) > 4 else (2.0, 4.0, 8.0, 16.0)

for res in res_list:
    frame = sc.BirdsEyeFrame.for_field(f, res)
    T = sc.blurred_template(sc.render_template(marks, res), sc.BlurSpec(radii).scaled(0.1 / res))
    scene_in = SceneInputs(tuple(masks), tuple(c.k for c in cams), f, T, frame)
    w = LossWeights(0.5)
    loss_fn = lambda g: loss_total(g, scene_in, w)
    for sr in sr_list:
        outs = []
        t0 = time.time()
        for seed in seeds:
            rng = np.random.default_rng(seed + 1000)
            starts = [apply_drift(p, drift, rng) for p in gt]
            scene = SceneTruth(field=f, cameras=tuple(cams), start_poses=tuple(starts))
            best, trace = evolve(loss_fn, starts, ESConfig(seed=seed, sigma_rotation=sr))
            est = decode_genome(best.genome, 2)
            outs.append(
                (
                    metric_tre(est, gt),
                    metric_roe(est, gt),
                    metric_stitch(est, scene, frame_eval),
                    metric_iou(est, scene, frame_eval, tmpl_eval, masks),
                )
            )
        dt = (time.time() - t0) / len(seeds)
        arr = np.array(outs)
        med = np.median(arr, axis=0)
        print(
            f"res={res} sr={sr} radii={radii}: {dt:.0f}s/seed  "
            f"median tre={med[0]:.2f}cm roe={med[1]:.3f} stitch={med[2]:.2f}px iou={med[3]:.1f}%  "
            + " | ".join(f"{o[0]:.1f}/{o[1]:.2f}/{o[2]:.1f}" for o in outs),
            flush=True,
        )
