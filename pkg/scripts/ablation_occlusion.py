"""Mean pairwise outer-shell IoU for a sweep of occlusion rates.

    python scripts/ablation_occlusion.py --scenes 1000 --rates 50 100 200
"""
import argparse
import json

import numpy as np

from inscore import GenConfig
from inscore.metrics import shell_overlap


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenes", type=int, default=1000)
    ap.add_argument("--rates", type=float, nargs="+", default=[50, 100, 200])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    for rate in args.rates:
        config = GenConfig(occlusion_rate=rate, master_seed=args.seed)
        ious = np.concatenate([shell_overlap(config, i) for i in range(args.scenes)])
        rows.append({"occlusion_rate": rate, "pairs": int(ious.size), "mean_shell_iou": float(ious.mean())})
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
