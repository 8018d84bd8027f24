"""Seedable Monte Carlo engine for frame-level metric estimation.

Frames are partitioned into fixed-size blocks and block i draws from its own
Philox stream keyed by (seed, i), so gains depend only on the seed and the
frame's block, never on worker count or scheduling. Partial sums are folded
in block order, making every estimate bit-reproducible.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel_models import LINK_IDS, LinkSet, amplitude_params, sample_power_gain
from .protocol import FrameRealization, ProtocolConfig

_LN2 = math.log(2.0)

BLOCK_FRAMES = 8192


@dataclass(frozen=True)
class SimulationPlan:
    """How many frames to simulate, from which seed, on how many workers."""

    frames: int = 100_000
    seed: int = 0
    workers: int | None = None  # None = auto

    def __post_init__(self) -> None:
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"workers must be >= 1 or None, got {self.workers}")


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error and the provenance that made it."""

    mean: float
    std_error: float
    frames: int
    seed: int

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")


def sample_frame(links: LinkSet, stream: np.random.Generator, size=None) -> FrameRealization:
    """Draw one frame (or a batch) of independent per-link gains."""
    draws = {
        f"s_{link.link_id}": sample_power_gain(link.k_factor, stream, size)
        for link in links.ordered()
    }
    return FrameRealization(**draws)


def block_stream(seed: int, index: int) -> np.random.Generator:
    """The Philox stream that owns block `index`; independent across indices."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def _spans(frames: int):
    return [
        (i, min(BLOCK_FRAMES, frames - i * BLOCK_FRAMES))
        for i in range((frames + BLOCK_FRAMES - 1) // BLOCK_FRAMES)
    ]


def _worker_count(plan: SimulationPlan, blocks: int) -> int:
    if plan.workers is not None:
        return plan.workers
    return max(1, min(8, os.cpu_count() or 1, blocks))


def _collect(plan: SimulationPlan, per_block):
    """Run per_block(index, length) for all blocks, results in block order."""
    spans = _spans(plan.frames)
    workers = _worker_count(plan, len(spans))
    if workers == 1 or len(spans) == 1:
        return [per_block(i, n) for i, n in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: per_block(*span), spans))


def _link_arrays(links: LinkSet):
    mu = np.empty(5)
    sigma = np.empty(5)
    loss = np.empty(5)
    for j, link in enumerate(links.ordered()):
        mu[j], sigma[j] = amplitude_params(link.k_factor)
        loss[j] = link.large_scale_gain
    return mu, sigma, loss


def _block_metrics(cfg: ProtocolConfig, arrays, seed: int, index: int, length: int):
    mu, sigma, loss = arrays
    z = block_stream(seed, index).standard_normal((length, 5, 2))
    return _kernels.frame_metrics(
        z, mu, sigma, loss,
        cfg.source_power, cfg.jamming_power, cfg.harvester_efficiency,
        cfg.power_split, cfg.processing_noise_ratio, cfg.noise_power,
        cfg.include_residual_epsilon,
    )


def _binomial_estimate(plan: SimulationPlan, hits: int) -> Estimate:
    mean = hits / plan.frames
    std_error = math.sqrt(mean * (1.0 - mean) / plan.frames)
    return Estimate(mean=mean, std_error=std_error, frames=plan.frames, seed=plan.seed)


def _moment_estimate(plan: SimulationPlan, total: float, total_sq: float) -> Estimate:
    n = plan.frames
    mean = total / n
    if n > 1:
        var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
    else:
        var = 0.0
    return Estimate(mean=mean, std_error=math.sqrt(var / n), frames=n, seed=plan.seed)


def estimate_cp(cfg: ProtocolConfig, links: LinkSet, plan: SimulationPlan) -> Estimate:
    """Probability that the destination decodes: fraction of frames with
    main-link SINR above the transmission threshold."""
    arrays = _link_arrays(links)
    delta = cfg.delta_t

    def per_block(index, length):
        gamma_m, _, _ = _block_metrics(cfg, arrays, plan.seed, index, length)
        return int(np.count_nonzero(gamma_m > delta))

    return _binomial_estimate(plan, sum(_collect(plan, per_block)))


def estimate_sop(cfg: ProtocolConfig, links: LinkSet, plan: SimulationPlan) -> Estimate:
    """Probability of a secrecy outage: fraction of frames where the better of
    the eavesdropper's two SINRs clears the secrecy threshold."""
    arrays = _link_arrays(links)
    delta = cfg.delta_e

    def per_block(index, length):
        _, gamma_1, gamma_2 = _block_metrics(cfg, arrays, plan.seed, index, length)
        return int(np.count_nonzero(np.maximum(gamma_1, gamma_2) > delta))

    return _binomial_estimate(plan, sum(_collect(plan, per_block)))


def estimate_asr(cfg: ProtocolConfig, links: LinkSet, plan: SimulationPlan) -> Estimate:
    """Average secrecy rate: mean clamped capacity gap in bits/s/Hz."""
    arrays = _link_arrays(links)

    def per_block(index, length):
        gamma_m, gamma_1, gamma_2 = _block_metrics(cfg, arrays, plan.seed, index, length)
        gamma_e = np.maximum(gamma_1, gamma_2)
        rate = np.maximum(
            0.5 * np.log1p(gamma_m) / _LN2 - 0.5 * np.log1p(gamma_e) / _LN2, 0.0
        )
        return float(np.sum(rate)), float(np.dot(rate, rate))

    total = 0.0
    total_sq = 0.0
    for s1, s2 in _collect(plan, per_block):
        total += s1
        total_sq += s2
    return _moment_estimate(plan, total, total_sq)


def estimate_functional(
    cfg: ProtocolConfig, links: LinkSet, plan: SimulationPlan, functional
) -> Estimate:
    """Mean of an arbitrary frame functional over the same gain stream the
    metric estimators consume. The functional receives a FrameRealization
    whose fields are length-n arrays and must return n real values."""
    mu, sigma, loss = _link_arrays(links)

    def per_block(index, length):
        z = block_stream(plan.seed, index).standard_normal((length, 5, 2))
        amp = mu + sigma * z[:, :, 0]
        gains = amp * amp + (sigma * z[:, :, 1]) ** 2
        frame = FrameRealization(**{
            f"s_{name}": gains[:, j] for j, name in enumerate(LINK_IDS)
        })
        values = np.asarray(functional(frame), dtype=float)
        if values.shape != (length,):
            raise ValueError(
                f"functional returned shape {values.shape}, expected ({length},)"
            )
        bad = int(np.count_nonzero(~np.isfinite(values)))
        if bad:
            return 0.0, 0.0, bad
        return float(np.sum(values)), float(np.dot(values, values)), 0

    total = 0.0
    total_sq = 0.0
    bad = 0
    for s1, s2, b in _collect(plan, per_block):
        total += s1
        total_sq += s2
        bad += b
    if bad:
        raise ValueError(
            f"functional produced {bad} non-finite values over {plan.frames} frames"
        )
    return _moment_estimate(plan, total, total_sq)
