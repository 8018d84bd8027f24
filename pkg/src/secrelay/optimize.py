"""Power allocation and relay placement tuning.

Two optimization layers live here. The per-frame layer works on one channel
realization: the objective is the SINR gap ratio
phi(allocation) = (gamma_main - gamma_eve) / (1 + gamma_eve), whose sign
matches the instantaneous secrecy rate, and the closed form
lambda* = 1 / (1 + sqrt(nu)) predicts its maximizer from the gain ratios.
The ergodic layer searches Monte Carlo estimates over parameter grids:
a joint (allocation, split) search and relay placement sweeps along the
source-destination line or the vertical axis.

The closed form is derived for high transmit SNR with the eavesdropper
ratios summed rather than maximized; where those premises fail the grid
argmax of the exact phi can sit far from lambda*. brute_force_lambda exists
so callers can always measure the difference.

All Monte Carlo searches reuse one simulation plan across grid cells
(common random numbers), so surfaces are smooth in the parameters and
results are deterministic given (seed, grid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import channel_models as cm
from . import geometry as geo
from . import montecarlo as mc
from . import protocol as pr

CASE_NO_OPTIMUM = "no_optimum"
CASE_HALF = "half"
CASE_INTERIOR = "interior"

_FALLBACK_GRID = np.linspace(0.01, 0.99, 99)


class SinrConstants(NamedTuple):
    """Coefficients of the exact SINR dependence on the allocation factor.

    With effective (loss-scaled) gains behind them, the per-frame SINRs are
    exactly gamma_main = a*c1, gamma_eve1 = a*c2/((1-a)*c3 + 1), and
    gamma_eve2 = a*c4/((1-a)*c5 + 1) for every allocation a, so the tuple
    carries the full allocation dependence of one frame.
    """

    c1: object
    c2: object
    c3: object
    c4: object
    c5: object

    @property
    def nu(self):
        """Gain-ratio sum driving the closed-form allocation."""
        return self.c2 / self.c3 + self.c4 / self.c5


def sinr_constants(cfg: pr.ProtocolConfig, frame: pr.FrameRealization,
                   links: cm.LinkSet) -> SinrConstants:
    """Reparametrize one frame's SINRs as rational functions of allocation."""
    x = frame.s_au * links.au.large_scale_gain
    y = frame.s_ub * links.ub.large_scale_gain
    z = frame.s_ue * links.ue.large_scale_gain
    v = frame.s_ae * links.ae.large_scale_gain
    w = frame.s_be * links.be.large_scale_gain
    p, n0 = cfg.total_power, cfg.noise_power
    eta, beta = cfg.harvester_efficiency, cfg.power_split
    shared = eta * beta * (1.0 - beta)
    den_main = eta * beta * (1.0 - beta + cfg.processing_noise_ratio) * y * n0 \
        + (1.0 - beta) * n0
    den_eve2 = eta * beta * (1.0 - beta + cfg.processing_noise_ratio) * z * n0 \
        + (1.0 - beta) * n0
    return SinrConstants(
        c1=shared * p * x * y / den_main,
        c2=p * v / n0,
        c3=p * w / n0,
        c4=shared * p * x * z / den_eve2,
        c5=shared * p * y * z / den_eve2,
    )


@dataclass(frozen=True)
class LambdaStarResult:
    """Closed-form allocation for one frame.

    nu is the gain-ratio sum; case is one of the three analytic branches.
    lambda_star is None exactly when the branch reports no interior optimum.
    """

    nu: float
    lambda_star: float | None
    case: str

    def __post_init__(self) -> None:
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"nu must be positive and finite, got {self.nu}")
        if self.case == CASE_NO_OPTIMUM:
            ok = self.nu < 1.0 and self.lambda_star is None
        elif self.case == CASE_HALF:
            ok = self.nu == 1.0 and self.lambda_star == 0.5
        elif self.case == CASE_INTERIOR:
            ok = (self.nu > 1.0 and self.lambda_star is not None
                  and abs(self.lambda_star - 1.0 / (1.0 + math.sqrt(self.nu)))
                  <= 1e-12 and 0.0 < self.lambda_star < 0.5)
        else:
            raise ValueError(f"unknown case {self.case!r}")
        if not ok:
            raise ValueError(
                f"inconsistent result: case={self.case!r}, nu={self.nu}, "
                f"lambda_star={self.lambda_star}"
            )


def lambda_star(frame: pr.FrameRealization,
                links: cm.LinkSet | None = None) -> LambdaStarResult:
    """Closed-form allocation from one frame's gain ratios.

    Without links, nu is the raw ratio sum s_ae/s_be + s_au/s_ub. Passing
    links folds the large-scale gains in; only then does nu describe the
    SINRs an actual link budget produces (the ratios are otherwise off by
    the loss quotients, which at realistic geometries are orders of
    magnitude), so comparisons against the exact phi need the scaled form.
    """
    for name in ("s_au", "s_ub", "s_ue", "s_ae", "s_be"):
        if np.ndim(getattr(frame, name)) != 0:
            raise TypeError("lambda_star consumes a single frame, not a batch")
    eve_ratio = frame.s_ae / frame.s_be
    main_ratio = frame.s_au / frame.s_ub
    if links is not None:
        eve_ratio *= links.ae.large_scale_gain / links.be.large_scale_gain
        main_ratio *= links.au.large_scale_gain / links.ub.large_scale_gain
    nu = eve_ratio + main_ratio
    if nu < 1.0:
        return LambdaStarResult(nu=nu, lambda_star=None, case=CASE_NO_OPTIMUM)
    if nu == 1.0:
        return LambdaStarResult(nu=nu, lambda_star=0.5, case=CASE_HALF)
    return LambdaStarResult(nu=nu, lambda_star=1.0 / (1.0 + math.sqrt(nu)),
                            case=CASE_INTERIOR)


def phi_lambda(allocation, cfg: pr.ProtocolConfig, frame: pr.FrameRealization,
               links: cm.LinkSet, mode: str = "exact"):
    """SINR gap ratio of one frame (or batch) at the given allocation.

    Exact mode rebuilds the protocol SINRs at the requested allocation.
    Approximate mode evaluates the high-SNR rational form
    c1*a*(1-a) / (1 + (nu-1)*a), which keeps the maximizer at
    1/(1 + sqrt(nu)) for every nu > 0.
    """
    if not 0.0 < allocation < 1.0:
        raise ValueError(f"allocation must lie in (0, 1), got {allocation}")
    if mode == "exact":
        cfg_a = replace(cfg, allocation=allocation)
        gamma_m = pr.sinr_main(cfg_a, frame, links)
        gamma_e = pr.sinr_eve(cfg_a, frame, links)
        return (gamma_m - gamma_e) / (1.0 + gamma_e)
    if mode == "approximate":
        consts = sinr_constants(cfg, frame, links)
        nu = consts.nu
        return consts.c1 * allocation * (1.0 - allocation) \
            / (1.0 + (nu - 1.0) * allocation)
    raise ValueError(f"mode must be 'exact' or 'approximate', got {mode!r}")


def brute_force_lambda(cfg: pr.ProtocolConfig, frame: pr.FrameRealization,
                       links: cm.LinkSet, grid_step: float = 1e-3):
    """Grid argmax of the exact phi; the measuring stick for lambda_star.

    Works on a frame batch, returning one argmax per frame. The grid covers
    (0, 1) exclusive in steps of grid_step.
    """
    if not 0.0 < grid_step <= 1e-3:
        raise ValueError(f"grid_step must lie in (0, 1e-3], got {grid_step}")
    shape = np.broadcast(*(getattr(frame, f) for f in
                           ("s_au", "s_ub", "s_ue", "s_ae", "s_be"))).shape
    best_value = np.full(shape, -np.inf)
    best_allocation = np.zeros(shape)
    for allocation in np.arange(grid_step, 1.0, grid_step):
        value = phi_lambda(float(allocation), cfg, frame, links)
        better = value > best_value
        best_value = np.where(better, value, best_value)
        best_allocation = np.where(better, allocation, best_allocation)
    if shape == ():
        return float(best_allocation)
    return best_allocation


# ---------------------------------------------------------------------------
# Per-frame allocation policy inside the ergodic estimator.


def _rate_from_constants(allocation, consts: SinrConstants):
    gamma_m = allocation * consts.c1
    gamma_e = np.maximum(
        allocation * consts.c2 / ((1.0 - allocation) * consts.c3 + 1.0),
        allocation * consts.c4 / ((1.0 - allocation) * consts.c5 + 1.0),
    )
    return np.maximum(0.5 * (np.log1p(gamma_m) - np.log1p(gamma_e))
                      / math.log(2.0), 0.0)


def _policy_allocations(consts: SinrConstants) -> np.ndarray:
    """Per-frame closed-form allocation, grid fallback where nu < 1."""
    nu = np.asarray(consts.nu)
    allocation = 1.0 / (1.0 + np.sqrt(nu))
    low = nu < 1.0
    if np.any(low):
        sub = SinrConstants(*(np.asarray(c)[low] for c in consts))
        stacked = np.stack([_rate_from_constants(g, sub) for g in _FALLBACK_GRID])
        allocation[low] = _FALLBACK_GRID[np.argmax(stacked, axis=0)]
    return allocation


def estimate_asr_allocation_policy(cfg: pr.ProtocolConfig, links: cm.LinkSet,
                                   plan: mc.SimulationPlan) -> mc.Estimate:
    """Average secrecy rate when every frame applies its own lambda*.

    The closed form needs the eavesdropper's instantaneous gains, so this is
    the genie-aided upper layer of the policy, distinct from the ergodic
    grid searches below. Frames in the nu < 1 branch fall back to a grid
    argmax over [0.01, 0.99]; allocation_policy_fallback_share reports how
    often that happens under the same draws.
    """

    def rates(frame):
        consts = sinr_constants(cfg, frame, links)
        return _rate_from_constants(_policy_allocations(consts), consts)

    return mc.estimate_functional(cfg, links, plan, rates)


def allocation_policy_fallback_share(cfg: pr.ProtocolConfig, links: cm.LinkSet,
                                     plan: mc.SimulationPlan) -> float:
    """Fraction of frames the per-frame policy sends to the grid fallback."""

    def indicator(frame):
        nu = sinr_constants(cfg, frame, links).nu
        return (np.asarray(nu) < 1.0).astype(float)

    return mc.estimate_functional(cfg, links, plan, indicator).mean


# ---------------------------------------------------------------------------
# Ergodic grid searches.

_ALLOCATION_POINTS = tuple(float(v) for v in np.linspace(0.01, 0.99, 25))
_DISTANCE_POINTS = tuple(float(v) for v in np.linspace(0.05, 0.95, 19))
_ALTITUDE_POINTS = tuple(float(v) for v in np.linspace(0.5, 8.0, 16))


def _validated_axis(name, values, lower, upper, closed):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d grid")
    if not np.all(np.isfinite(arr)) or np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be finite and strictly increasing")
    inside = (lower <= arr[0] and arr[-1] <= upper) if closed \
        else (lower < arr[0] and arr[-1] < upper)
    if not inside:
        raise ValueError(
            f"{name} must stay within {'[' if closed else '('}{lower}, "
            f"{upper}{']' if closed else ')'}"
        )


@dataclass(frozen=True)
class SweepGrid:
    """Axes for the ergodic searches; defaults match the reference figures.

    Allocation and split axes must stay inside [0.01, 0.99] (the estimators
    degenerate at the endpoints), distances are normalized to the
    source-destination separation, altitudes are absolute.
    """

    allocation_grid: tuple = _ALLOCATION_POINTS
    split_grid: tuple = _ALLOCATION_POINTS
    distance_grid: tuple = _DISTANCE_POINTS
    altitude_grid: tuple = _ALTITUDE_POINTS

    def __post_init__(self) -> None:
        _validated_axis("allocation_grid", self.allocation_grid, 0.01, 0.99, True)
        _validated_axis("split_grid", self.split_grid, 0.01, 0.99, True)
        _validated_axis("distance_grid", self.distance_grid, 0.0, 1.0, False)
        _validated_axis("altitude_grid", self.altitude_grid, 0.0, math.inf, False)


@dataclass(frozen=True, eq=False)
class OpsaSearchResult:
    """Metric surface over (allocation, split) plus its argmax cell."""

    objective: str
    allocation_grid: np.ndarray
    split_grid: np.ndarray
    surface: np.ndarray
    se_surface: np.ndarray
    allocation_best: float
    split_best: float
    metric_best: float


_OBJECTIVES = {"asr": mc.estimate_asr, "cp": mc.estimate_cp}


def grid_search_opsa(cfg_template: pr.ProtocolConfig, links: cm.LinkSet,
                     plan: mc.SimulationPlan, grid: SweepGrid | None = None,
                     objective: str = "asr") -> OpsaSearchResult:
    """Joint (allocation, split) search of a Monte Carlo metric surface.

    Every cell reuses the same plan, so the whole surface shares one set of
    channel draws and the argmax is deterministic given (seed, grid).
    """
    if objective not in _OBJECTIVES:
        raise ValueError(f"objective must be one of {sorted(_OBJECTIVES)}, "
                         f"got {objective!r}")
    grid = grid if grid is not None else SweepGrid()
    estimator = _OBJECTIVES[objective]
    allocations = np.asarray(grid.allocation_grid)
    splits = np.asarray(grid.split_grid)
    surface = np.empty((allocations.size, splits.size))
    se_surface = np.empty_like(surface)
    for i, allocation in enumerate(allocations):
        for j, split in enumerate(splits):
            cfg = replace(cfg_template, allocation=float(allocation),
                          power_split=float(split))
            est = estimator(cfg, links, plan)
            surface[i, j] = est.mean
            se_surface[i, j] = est.std_error
    i_best, j_best = np.unravel_index(int(np.argmax(surface)), surface.shape)
    return OpsaSearchResult(
        objective=objective, allocation_grid=allocations, split_grid=splits,
        surface=surface, se_surface=se_surface,
        allocation_best=float(allocations[i_best]),
        split_best=float(splits[j_best]), metric_best=float(surface[i_best, j_best]),
    )


@dataclass(frozen=True, eq=False)
class PlacementCurve:
    """ASR against relay position, under four allocation strategies.

    positions are normalized distances (horizontal axis) or absolute
    altitudes. asr_fixed keeps the template allocation; asr_best_allocation
    re-optimizes the allocation grid per position (best_allocation records
    the winner); asr_policy applies the per-frame closed form with
    policy_fallback_share logging its nu < 1 fallback rate; asr_no_jamming
    hands the whole budget to the source.
    """

    axis: str
    positions: np.ndarray
    asr_fixed: np.ndarray
    asr_fixed_se: np.ndarray
    asr_best_allocation: np.ndarray
    asr_best_allocation_se: np.ndarray
    best_allocation: np.ndarray
    asr_policy: np.ndarray
    asr_policy_se: np.ndarray
    policy_fallback_share: np.ndarray
    asr_no_jamming: np.ndarray
    asr_no_jamming_se: np.ndarray


def _relay_position(axis: str, geom: geo.NetworkGeometry, value: float):
    if axis == "horizontal":
        a, b = geom.source, geom.destination
        return geo.NodePosition(
            a.x + value * (b.x - a.x), a.y + value * (b.y - a.y), geom.relay.z,
        )
    return geo.NodePosition(geom.relay.x, geom.relay.y, value)


def placement_sweep(cfg: pr.ProtocolConfig, geometry_template: geo.NetworkGeometry,
                    plan: mc.SimulationPlan, axis: str,
                    grid: SweepGrid | None = None,
                    env: geo.Environment | None = None) -> PlacementCurve:
    """ASR curve along one placement axis, links rebuilt per position.

    The horizontal axis slides the relay along the source-destination line
    at the template's altitude, parametrized by the normalized distance
    from the source. The altitude axis moves it vertically above the
    template's ground coordinates.
    """
    if axis not in ("horizontal", "altitude"):
        raise ValueError(f"axis must be 'horizontal' or 'altitude', got {axis!r}")
    grid = grid if grid is not None else SweepGrid()
    env = env if env is not None else geo.Environment()
    positions = np.asarray(grid.distance_grid if axis == "horizontal"
                           else grid.altitude_grid)
    n = positions.size
    curve = {name: np.empty(n) for name in
             ("asr_fixed", "asr_fixed_se", "asr_best_allocation",
              "asr_best_allocation_se", "best_allocation", "asr_policy",
              "asr_policy_se", "policy_fallback_share", "asr_no_jamming",
              "asr_no_jamming_se")}
    for k, value in enumerate(positions):
        geom_k = geo.NetworkGeometry(
            source=geometry_template.source,
            destination=geometry_template.destination,
            eavesdropper=geometry_template.eavesdropper,
            relay=_relay_position(axis, geometry_template, float(value)),
        )
        links_k = cm.build_links(geom_k, env)
        fixed = mc.estimate_asr(cfg, links_k, plan)
        curve["asr_fixed"][k] = fixed.mean
        curve["asr_fixed_se"][k] = fixed.std_error
        best, best_alloc = None, np.nan
        for allocation in grid.allocation_grid:
            est = mc.estimate_asr(replace(cfg, allocation=allocation),
                                  links_k, plan)
            if best is None or est.mean > best.mean:
                best, best_alloc = est, allocation
        curve["asr_best_allocation"][k] = best.mean
        curve["asr_best_allocation_se"][k] = best.std_error
        curve["best_allocation"][k] = best_alloc
        policy = estimate_asr_allocation_policy(cfg, links_k, plan)
        curve["asr_policy"][k] = policy.mean
        curve["asr_policy_se"][k] = policy.std_error
        curve["policy_fallback_share"][k] = allocation_policy_fallback_share(
            cfg, links_k, plan)
        no_jam = mc.estimate_asr(replace(cfg, allocation=1.0), links_k, plan)
        curve["asr_no_jamming"][k] = no_jam.mean
        curve["asr_no_jamming_se"][k] = no_jam.std_error
    return PlacementCurve(axis=axis, positions=positions, **curve)
