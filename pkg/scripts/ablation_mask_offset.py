"""Mean IoU between shifted annotations and the true visible masks.

    python scripts/ablation_mask_offset.py --instances 100 --offsets 0 10 20 30
"""
import argparse
import json

import numpy as np

from inscore import GenConfig, render_scene
from inscore.metrics import mask_iou


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--offsets", type=int, nargs="+", default=[0, 10, 20, 30])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    for d in args.offsets:
        config = GenConfig(mask_offset=d, master_seed=args.seed)
        ious = []
        index = 0
        while len(ious) < args.instances:
            r = render_scene(config, index)
            ious += [mask_iou(a, v) for a, v in zip(r.annotated, r.visible) if v.any()]
            index += 1
        rows.append({"mask_offset": d, "instances": args.instances, "mean_iou": float(np.mean(ious[:args.instances]))})
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
