"""Single-core images/second for render + PNG encode at a given config."""
import argparse
import io
import time

from PIL import Image

from inscore import GenConfig, render_scene

ap = argparse.ArgumentParser()
ap.add_argument("--images", type=int, default=100)
ap.add_argument("--size", type=int, default=512)
args = ap.parse_args()

config = GenConfig(width=args.size, height=args.size)
start = time.perf_counter()
for i in range(args.images):
    r = render_scene(config, i)
    Image.fromarray(r.image).save(io.BytesIO(), format="PNG")
elapsed = time.perf_counter() - start
print(f"{args.images / elapsed:.2f} images/s ({elapsed / args.images * 1000:.1f} ms/image)")
