"""Timing comparison of the jit and numpy kernel backends.

Runs the per-frame SINR kernel and the three end-to-end estimators under
SECRELAY_BACKEND=numpy and =numba (when importable) and reports per-frame
cost, speedup, and the largest relative disagreement between the two routes.

Usage: python benchmarks/bench_backends.py [--frames N] [--repeats K]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from secrelay import _kernels
from secrelay import channel_models as cm
from secrelay import geometry as geo
from secrelay import montecarlo as mc
from secrelay import protocol as pr


def reference_setup():
    geom = geo.NetworkGeometry(
        source=geo.NodePosition(0.0, 0.0, 0.0),
        destination=geo.NodePosition(10.0, 0.0, 0.0),
        eavesdropper=geo.NodePosition(8.0, 1.0, 0.0),
        relay=geo.NodePosition(2.0, 0.0, 1.5),
    )
    links = cm.build_links(geom, geo.Environment())
    cfg = pr.ProtocolConfig(total_power=100.0)
    return cfg, links


def best_of(repeats, fn):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernel(frames, repeats, backends):
    cfg, links = reference_setup()
    mu = np.empty(5)
    sigma = np.empty(5)
    loss = np.empty(5)
    for j, link in enumerate(links.ordered()):
        mu[j], sigma[j] = cm.amplitude_params(link.k_factor)
        loss[j] = link.large_scale_gain
    z = mc.block_stream(0, 0).standard_normal((frames, 5, 2))

    def run():
        return _kernels.frame_metrics(
            z, mu, sigma, loss, cfg.source_power, cfg.jamming_power,
            cfg.harvester_efficiency, cfg.power_split,
            cfg.processing_noise_ratio, cfg.noise_power)

    results = {}
    outputs = {}
    for backend in backends:
        os.environ[_kernels.BACKEND_ENV] = backend
        run()  # warm-up (jit compilation / cache load)
        results[backend] = best_of(repeats, run)
        outputs[backend] = run()
    os.environ.pop(_kernels.BACKEND_ENV, None)

    print(f"kernel frame_metrics, {frames} frames (best of {repeats}):")
    for backend in backends:
        per_frame = results[backend] / frames * 1e9
        print(f"  {backend:<6} {results[backend] * 1e3:8.2f} ms   "
              f"{per_frame:7.1f} ns/frame")
    if len(backends) == 2:
        print(f"  speedup numba vs numpy: "
              f"{results['numpy'] / results['numba']:.2f}x")
        worst = 0.0
        for a, b in zip(outputs["numpy"], outputs["numba"]):
            scale = np.maximum(np.abs(a), 1e-300)
            worst = max(worst, float(np.max(np.abs(a - b) / scale)))
        print(f"  max relative disagreement: {worst:.3e}")


def bench_estimators(frames, repeats, backends):
    cfg, links = reference_setup()
    plan = mc.SimulationPlan(frames=frames, seed=0)
    estimators = [("cp", mc.estimate_cp), ("sop", mc.estimate_sop),
                  ("asr", mc.estimate_asr)]
    print(f"\nestimators, {frames} frames (best of {repeats}):")
    for name, estimator in estimators:
        timings = {}
        for backend in backends:
            os.environ[_kernels.BACKEND_ENV] = backend
            estimator(cfg, links, plan)  # warm-up
            timings[backend] = best_of(
                repeats, lambda: estimator(cfg, links, plan))
        os.environ.pop(_kernels.BACKEND_ENV, None)
        line = f"  {name:<4}" + "".join(
            f"  {backend}: {timings[backend] * 1e3:8.2f} ms"
            for backend in backends)
        if len(backends) == 2:
            line += f"  speedup: {timings['numpy'] / timings['numba']:.2f}x"
        print(line)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    backends = ["numpy", "numba"] if _kernels.HAS_NUMBA else ["numpy"]
    if not _kernels.HAS_NUMBA:
        print("numba not importable; timing the numpy path only\n")
    bench_kernel(args.frames, args.repeats, backends)
    bench_estimators(args.frames, args.repeats, backends)


if __name__ == "__main__":
    main()
