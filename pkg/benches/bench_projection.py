"""Compare the compiled and numpy projection backends.

Usage: python benches/bench_projection.py [--frames N]

Renders identical view sequences through both backends at the training and
evaluation resolutions, reports ms/frame, and cross-checks the outputs
(max per-pixel difference must stay within one intensity level).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from panosearch.geometry import Direction
from panosearch.projection import Panorama, ViewSpec, available_backends, render_view


def bench(pano: Panorama, spec: ViewSpec, backend: str, frames: int) -> float:
    rng = np.random.default_rng(7)
    dirs = [Direction(rng.uniform(0, 360), rng.uniform(-60, 60)) for _ in range(frames)]
    render_view(pano, dirs[0], spec, backend=backend)  # warm up
    t0 = time.perf_counter()
    for d in dirs:
        render_view(pano, d, spec, backend=backend)
    return (time.perf_counter() - t0) / frames * 1000.0


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {backends}")
    rng = np.random.default_rng(0)
    pano = Panorama(
        rng.integers(0, 256, (1920, 3840, 3), dtype=np.uint8), source_id="bench"
    )

    specs = {
        "train 1280x720": ViewSpec(1280, 720, 90),
        "eval 1920x1080": ViewSpec(1920, 1080, 90),
    }
    for label, spec in specs.items():
        times = {}
        for backend in backends:
            times[backend] = bench(pano, spec, backend, args.frames)
        line = "  ".join(f"{b}: {t:8.1f} ms/frame" for b, t in times.items())
        if len(times) == 2:
            speedup = times["numpy"] / times["compiled"]
            line += f"  (compiled {speedup:.1f}x faster)"
        print(f"{label}:  {line}")

    if len(backends) == 2:
        d = Direction(123.4, -17.2)
        spec = ViewSpec(640, 360, 90)
        a = render_view(pano, d, spec, backend="numpy").pixels.astype(int)
        b = render_view(pano, d, spec, backend="compiled").pixels.astype(int)
        diff = np.abs(a - b)
        print(
            f"cross-check 640x360: max diff {diff.max()} levels, "
            f"{int((diff > 0).sum())} differing samples"
        )
        assert diff.max() <= 1, "backends disagree beyond one intensity level"


if __name__ == "__main__":
    main()
