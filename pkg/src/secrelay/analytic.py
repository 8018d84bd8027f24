"""Truncated-series evaluators for the three secrecy metrics.

Connection probability and the second secrecy-outage factor are finite
multiple series over Rician expansion indices; the rate lower bound is a
Jensen-style log-moment expression. Every series is accumulated in log
space: powers, factorials, Bessel and confluent factors enter as logarithms
and meet in a single logsumexp per metric, so deep operating points (high
power, order 25) stay inside float range.

Probabilities come back as the raw series value plus a [0, 1]-clamped
companion. The truncation weights keep the finite sums close to the exact
transcendentals but can leave small out-of-range residues, and consumers
need the raw number to judge the truncation rather than a silently
repaired one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import specfun as sf
from .channel_models import LinkSet
from .protocol import ProtocolConfig

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class NoncentralityParams:
    """Noncentrality of the 2-DOF chi-square view of each squared-Rician gain."""

    lambda_au: float
    lambda_ub: float
    lambda_ue: float

    def __post_init__(self) -> None:
        for name in ("lambda_au", "lambda_ub", "lambda_ue"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def lambda_bu(self) -> float:
        """The destination-relay direction reuses the relay-destination K."""
        return self.lambda_ub


def noncentrality_params(links: LinkSet) -> NoncentralityParams:
    return NoncentralityParams(
        lambda_au=2.0 * links.au.k_factor,
        lambda_ub=2.0 * links.ub.k_factor,
        lambda_ue=2.0 * links.ue.k_factor,
    )


@dataclass(frozen=True)
class SeriesAuxiliaries:
    """Constants of the eavesdropper-branch series, fixed by (config, links).

    a1, a2, a3 split the phase-2 outage threshold into its jamming,
    relay-noise, and processing-noise contributions, each normalized by the
    source-relay arrival power. The b and c families collect the Rician
    constants that multiply them inside the series.
    """

    a1: float
    a2: float
    a3: float
    a: float
    b: float
    b_tilde: float
    c_tilde: float
    b1: float
    b2: float
    b3: float
    c1: float

    def __post_init__(self) -> None:
        for name in ("a1", "a2", "a3", "a", "b", "b_tilde", "c_tilde",
                     "b1", "b2", "b3", "c1"):
            value = getattr(self, name)
            if not value >= 0.0:
                raise ValueError(f"{name} must be >= 0, got {value}")


def series_auxiliaries(cfg: ProtocolConfig, links: LinkSet) -> SeriesAuxiliaries:
    """Auxiliary constants for the phase-2 outage factor. Needs 0 < beta < 1."""
    delta = cfg.delta_e
    beta, eta = cfg.power_split, cfg.harvester_efficiency
    zeta, n0 = cfg.processing_noise_ratio, cfg.noise_power
    p_a, p_b = cfg.source_power, cfg.jamming_power
    k_au, k_ub, k_ue = links.au.k_factor, links.ub.k_factor, links.ue.k_factor
    l_au, l_ub, l_ue = (links.au.large_scale_gain, links.ub.large_scale_gain,
                        links.ue.large_scale_gain)

    a1 = delta * p_b * l_ub / (p_a * l_au)
    a2 = delta * n0 / (eta * beta * p_a * l_au * l_ue)
    a3 = delta * (1.0 - beta + zeta) * n0 / ((1.0 - beta) * p_a * l_au)
    b = 2.0 * (1.0 + k_au) * a1
    return SeriesAuxiliaries(
        a1=a1,
        a2=a2,
        a3=a3,
        a=2.0 * k_au,
        b=b,
        b_tilde=0.5 * b + k_ub + 1.0,
        c_tilde=math.sqrt(k_ub * (1.0 + k_ub)),
        b1=k_ue + 1.0,
        b2=2.0 * (k_ue + 1.0) * a3,
        b3=2.0 * (k_ue + 1.0) * a2,
        c1=k_ue * (1.0 + k_ue),
    )


class SeriesProbability(NamedTuple):
    """Raw series value alongside its [0, 1] clamp."""

    raw: float
    clamped: float


def _as_series_probability(raw: float) -> SeriesProbability:
    return SeriesProbability(raw, min(max(raw, 0.0), 1.0))


def _xlog(exponents, base: float) -> np.ndarray:
    """exponents * log(base) with the 0 * log(0) = 0 convention."""
    exponents = np.asarray(exponents)
    if base == 0.0:
        return np.where(exponents == 0, 0.0, _NEG_INF)
    return exponents * math.log(base)


def _checked_logsumexp(terms: np.ndarray, label: str) -> float:
    """Reduce log-terms; a NaN or +inf term means the series left float range."""
    flat = terms.ravel()
    bad = np.isnan(flat) | np.isposinf(flat)
    if np.any(bad):
        index = int(np.argmax(bad))
        raise sf.SeriesOverflowError(
            f"{label} series: log-term {index} of {flat.size} is {flat[index]}"
        )
    return sf.logsumexp(flat)


def _require_finite_constants(label: str, **constants: float) -> None:
    for name, value in constants.items():
        if not math.isfinite(value):
            raise sf.SeriesOverflowError(f"{label} series: {name} is {value}")


def _require_interior_split(cfg: ProtocolConfig) -> None:
    # beta at either end starves the relay of signal or of harvested power
    if not 0.0 < cfg.power_split < 1.0:
        raise ValueError(
            f"power_split must lie strictly inside (0, 1), got {cfg.power_split}"
        )


def connection_probability(
    cfg: ProtocolConfig,
    links: LinkSet,
    orders: sf.TruncationOrders = sf.TruncationOrders(),
) -> SeriesProbability:
    """Probability that the destination decodes at the transmission rate.

    Finite weighted series over the source-relay expansion index d, its
    binomial split (u, s) of the two threshold contributions, and the
    relay-destination index r, with a modified Bessel K factor joining the
    two links.
    """
    _require_interior_split(cfg)
    delta = cfg.delta_t
    if delta == 0.0:
        # zero threshold: the end-to-end SINR is positive almost surely
        return SeriesProbability(1.0, 1.0)
    beta, eta = cfg.power_split, cfg.harvester_efficiency
    zeta, n0 = cfg.processing_noise_ratio, cfg.noise_power
    p_a = cfg.source_power
    k_au, k_ub = links.au.k_factor, links.ub.k_factor
    l_au, l_ub = links.au.large_scale_gain, links.ub.large_scale_gain

    # threshold split: direct-noise part scales 1/P_a, relayed part 1/(P_a L_ub)
    part_a = (1.0 - beta + zeta) * n0 * delta / ((1.0 - beta) * p_a * l_au)
    part_b = n0 * delta / (eta * beta * p_a * l_au * l_ub)
    _require_finite_constants("connection", part_a=part_a, part_b=part_b)

    depth, radial = orders.D, orders.R
    lg = sf.lgamma_int(depth + radial + 3)
    w_d = sf.log_series_weight(depth, np.arange(depth + 1))
    w_r = sf.log_series_weight(radial, np.arange(radial + 1))

    d_i, u_i, s_i = _triangle_indices(depth)
    base = (w_d[d_i] - lg[d_i + 1] - lg[s_i + 1] - lg[u_i - s_i + 1]
            + _xlog(d_i, k_au) + u_i * math.log1p(k_au)
            + _xlog(s_i, part_a) + _xlog(u_i - s_i, part_b))
    r = np.arange(radial + 1)
    base_r = w_r - 2.0 * lg[r + 1] + _xlog(r, k_ub * (1.0 + k_ub))

    argument = 2.0 * math.sqrt((1.0 + k_au) * (1.0 + k_ub) * part_b)
    order_nu = (s_i - u_i)[:, None] + r[None, :] + 1
    log_k = sf.log_bessel_k_sequence(int(np.max(np.abs(order_nu))), argument)
    log_ratio = math.log((1.0 + k_au) * part_b / (1.0 + k_ub))

    terms = (base[:, None] + base_r[None, :]
             + 0.5 * order_nu * log_ratio + log_k[np.abs(order_nu)])
    log_prefix = (math.log(2.0 * (1.0 + k_ub))
                  - k_au - k_ub - (1.0 + k_au) * part_a)
    raw = math.exp(log_prefix + _checked_logsumexp(terms, "connection"))
    return _as_series_probability(raw)


def _triangle_indices(depth: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (d, u, s) with 0 <= s <= u <= d <= depth, flattened."""
    d_i, u_i, s_i = [], [], []
    for d in range(depth + 1):
        for u in range(d + 1):
            for s in range(u + 1):
                d_i.append(d)
                u_i.append(u)
                s_i.append(s)
    return np.array(d_i), np.array(u_i), np.array(s_i)


def _pyramid_indices(
    depth: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """All (d, u, r, s) with u <= d <= depth, r <= u, s <= u - r, flattened."""
    d_i, u_i, r_i, s_i = [], [], [], []
    for d in range(depth + 1):
        for u in range(d + 1):
            for r in range(u + 1):
                for s in range(u - r + 1):
                    d_i.append(d)
                    u_i.append(u)
                    r_i.append(r)
                    s_i.append(s)
    return np.array(d_i), np.array(u_i), np.array(r_i), np.array(s_i)


def _log_f11_table(max_r: int, x: float) -> np.ndarray:
    """log 1F1(r+1; 1; x) for r = 0..max_r via e^x * sum_k C(r,k) x^k / k!."""
    lg = sf.lgamma_int(max_r + 2)
    out = np.empty(max_r + 1)
    for r in range(max_r + 1):
        k = np.arange(r + 1)
        body = sf.log_binomial(r, k) + _xlog(k, x) - lg[k + 1]
        out[r] = x + sf.logsumexp(body)
    return out


def sop_l1(cfg: ProtocolConfig, links: LinkSet) -> float:
    """Probability the phase-1 eavesdropper SINR stays below threshold."""
    delta = cfg.delta_e
    p_a, p_b, n0 = cfg.source_power, cfg.jamming_power, cfg.noise_power
    l_ae, l_be = links.ae.large_scale_gain, links.be.large_scale_gain
    num = p_a * l_ae * math.exp(-n0 * delta / (p_a * l_ae))
    return 1.0 - num / (p_b * l_be * delta + p_a * l_ae)


def sop_l2(
    cfg: ProtocolConfig,
    links: LinkSet,
    orders: sf.TruncationOrders = sf.TruncationOrders(),
) -> SeriesProbability:
    """Probability the phase-2 eavesdropper SINR stays below threshold.

    Finite weighted series over the source-relay index d, its split into the
    jamming (r), processing-noise (s), and relay-noise (m = u - r - s)
    threshold contributions, and the relay-eavesdropper index q. The jamming
    contribution carries a confluent hypergeometric factor from integrating
    over the relay-destination gain; the relay-noise one carries a Bessel K.
    """
    _require_interior_split(cfg)
    delta = cfg.delta_e
    if delta == 0.0:
        # zero threshold: the SINR is positive almost surely, so never below
        return SeriesProbability(0.0, 0.0)
    k_au, k_ub, k_ue = links.au.k_factor, links.ub.k_factor, links.ue.k_factor

    aux = series_auxiliaries(cfg, links)
    # noise offsets rescaled to the source-link chi-square normalization
    shift_t = 2.0 * (1.0 + k_au) * aux.a3
    shift_p = 2.0 * (1.0 + k_au) * aux.a2
    x_f11 = aux.c_tilde**2 / aux.b_tilde
    _require_finite_constants("phase-2 outage", a1=aux.a1, a2=aux.a2, a3=aux.a3,
                              shift_t=shift_t, shift_p=shift_p)

    depth, radial = orders.D, orders.Q
    lg = sf.lgamma_int(depth + radial + 3)
    w_d = sf.log_series_weight(depth, np.arange(depth + 1))
    w_q = sf.log_series_weight(radial, np.arange(radial + 1))
    f11 = _log_f11_table(depth, x_f11)

    d_i, u_i, r_i, s_i = _pyramid_indices(depth)
    m_i = u_i - r_i - s_i
    base = (w_d[d_i] + _xlog(d_i, aux.a) - lg[d_i + 1] - (d_i + u_i) * sf.LN2
            + _xlog(r_i, aux.b) + f11[r_i] - (r_i + 1) * math.log(aux.b_tilde)
            + _xlog(s_i, shift_t) - lg[s_i + 1]
            + _xlog(m_i, shift_p) - lg[m_i + 1])
    q = np.arange(radial + 1)
    base_q = w_q + _xlog(q, aux.c1) - 2.0 * lg[q + 1]

    argument = 2.0 * math.sqrt((1.0 + k_au) * (1.0 + k_ue) * aux.a2)
    order_nu = (s_i - (u_i - r_i))[:, None] + q[None, :] + 1
    log_k = sf.log_bessel_k_sequence(int(np.max(np.abs(order_nu))), argument)
    log_ratio = math.log((1.0 + k_au) * aux.a2 / (1.0 + k_ue))

    terms = (base[:, None] + base_q[None, :]
             + 0.5 * order_nu * log_ratio + log_k[np.abs(order_nu)])
    log_prefix = (math.log(2.0 * (1.0 + k_ub) * (1.0 + k_ue))
                  - k_au - k_ub - k_ue - 0.5 * shift_t)
    raw = 1.0 - math.exp(log_prefix + _checked_logsumexp(terms, "phase-2 outage"))
    return _as_series_probability(raw)


def secrecy_outage_probability(
    cfg: ProtocolConfig,
    links: LinkSet,
    orders: sf.TruncationOrders = sf.TruncationOrders(),
) -> SeriesProbability:
    """1 - L1 L2: the two eavesdropper phases fail independently."""
    l1 = sop_l1(cfg, links)
    l2 = sop_l2(cfg, links, orders)
    return _as_series_probability(1.0 - l1 * l2.raw)


def mean_gamma_eve_phase1(cfg: ProtocolConfig, links: LinkSet) -> float:
    """Mean phase-1 eavesdropper SINR via the exponential integral."""
    p_b = cfg.jamming_power
    if p_b == 0.0:
        raise ValueError("mean_gamma_eve_phase1 needs active jamming (allocation < 1)")
    x = cfg.noise_power / (p_b * links.be.large_scale_gain)
    ratio = ((cfg.source_power / p_b)
             * (links.ae.large_scale_gain / links.be.large_scale_gain))
    # e^x E1(x) composed in log space; the product tends to 1/x for large x
    return ratio * math.exp(x + sf.log_exp_integral_e1(x))


def asr_lower_bound(
    cfg: ProtocolConfig,
    links: LinkSet,
    orders: sf.TruncationOrders = sf.TruncationOrders(),
    scale_corrected: bool = False,
) -> float:
    """Jensen-route lower bound on the average secrecy rate, bits/s/Hz.

    The main-link term exponentiates a log-moment proxy T1; the
    eavesdropper term is a mean-level proxy T2. The default evaluates both
    proxies on standard chi-square variables with no scale normalization;
    scale_corrected=True restores the unit-mean gain scales and path losses,
    which changes the result materially (the two disagree by the chi-square
    normalization, and only the corrected form tracks measured log-moments).
    """
    _require_interior_split(cfg)
    if cfg.jamming_power == 0.0:
        raise ValueError("asr_lower_bound needs active jamming (allocation < 1)")
    t1 = _log_main_sinr_proxy(cfg, links, orders.R, scale_corrected)
    t2 = _mean_eve_sinr_proxy(cfg, links, scale_corrected)
    if t1 > 35.0:
        main = t1 + math.log1p(math.exp(-t1))
    else:
        main = math.log1p(math.exp(t1))
    return max(main - math.log1p(t2), 0.0) / (2.0 * sf.LN2)


def _log_main_sinr_proxy(
    cfg: ProtocolConfig, links: LinkSet, order: int, scale_corrected: bool
) -> float:
    """T1: log-moment proxy for the legitimate end-to-end SINR."""
    beta, eta = cfg.power_split, cfg.harvester_efficiency
    zeta, n0 = cfg.processing_noise_ratio, cfg.noise_power
    k_au, k_ub = links.au.k_factor, links.ub.k_factor
    l_au, l_ub = links.au.large_scale_gain, links.ub.large_scale_gain
    nc = noncentrality_params(links)
    shift = (1.0 - beta) / (eta * beta * (1.0 - beta + zeta) * l_ub)
    t1 = (math.log((1.0 - beta) * cfg.source_power * l_au / ((1.0 - beta + zeta) * n0))
          + sf.log_moment_ncx2(nc.lambda_au, 0.0, "series", order)
          + sf.log_moment_ncx2(nc.lambda_ub, 0.0, "series", order))
    if scale_corrected:
        # E ln S = g1(2K) - ln(2(1+K)); the relay-side log cancels against
        # rescaling the denominator shift, leaving the source-side offset
        t1 -= sf.log_moment_ncx2(
            nc.lambda_ub, 2.0 * (1.0 + k_ub) * shift, "series", order
        )
        t1 -= math.log(2.0 * (1.0 + k_au))
    else:
        t1 -= sf.log_moment_ncx2(nc.lambda_ub, shift, "series", order)
    return t1


def _mean_eve_sinr_proxy(
    cfg: ProtocolConfig, links: LinkSet, scale_corrected: bool
) -> float:
    """T2: mean-level proxy for the eavesdropper SINR across both phases."""
    beta, eta = cfg.power_split, cfg.harvester_efficiency
    zeta, n0 = cfg.processing_noise_ratio, cfg.noise_power
    p_a, p_b = cfg.source_power, cfg.jamming_power
    if scale_corrected:
        l_au, l_ub, l_ue = (links.au.large_scale_gain,
                            links.ub.large_scale_gain,
                            links.ue.large_scale_gain)
        num = eta * beta * (1.0 - beta) * p_a * l_au * l_ue
        den = (eta * beta * (1.0 - beta) * p_b * l_ub * l_ue
               + eta * beta * (1.0 - beta + zeta) * l_ue * n0
               + (1.0 - beta) * n0)
    else:
        # chi-square means lambda + 2 stand in for the gains, losses dropped
        nc = noncentrality_params(links)
        m_au, m_ub, m_ue = nc.lambda_au + 2.0, nc.lambda_ub + 2.0, nc.lambda_ue + 2.0
        num = eta * beta * (1.0 - beta) * p_a * m_au * m_ue
        den = (eta * beta * (1.0 - beta) * p_b * m_ub * m_ue
               + eta * beta * (1.0 - beta + zeta) * m_ue * n0
               + (1.0 - beta) * n0)
    return num / den + mean_gamma_eve_phase1(cfg, links)
