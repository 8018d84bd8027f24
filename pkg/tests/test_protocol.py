"""Two-phase protocol physics: power budget, relay gain, SINRs, secrecy.

The SINR closed forms are checked against an independent composition route
(explicit relay gain applied to the received-signal model), which they must
equal exactly when the processing-noise ratio is zero.
"""

import math

import numpy as np
import pytest

from secrelay import channel_models as cm
from secrelay import geometry as geo
from secrelay import protocol as pr

ENV = geo.Environment()
GEOM = geo.NetworkGeometry(
    source=geo.NodePosition(0.0, 0.0, 0.0),
    destination=geo.NodePosition(10.0, 0.0, 0.0),
    eavesdropper=geo.NodePosition(8.0, 1.0, 0.0),
    relay=geo.NodePosition(2.0, 0.0, 1.5),
)
LINKS = cm.build_links(GEOM, ENV)

UNIT_LINKS = cm.LinkSet(*[cm.LinkModel(i, 0.0, 1.0) for i in cm.LINK_IDS])
ONES = pr.FrameRealization(1.0, 1.0, 1.0, 1.0, 1.0)


def random_frames(n, seed):
    rng = np.random.default_rng(seed)
    gains = {
        f"s_{name}": cm.sample_power_gain(getattr(LINKS, name).k_factor, rng, n)
        for name in cm.LINK_IDS
    }
    return pr.FrameRealization(**gains)


def composition_route(cfg, frame, links):
    """gamma_main and gamma_eve2 rebuilt from the relay gain, exact at zeta=0."""
    beta = cfg.power_split
    n0 = cfg.noise_power
    g2 = pr.relay_gain(cfg, frame, links) ** 2
    x_a = cfg.source_power * frame.s_au * links.au.large_scale_gain
    x_b = cfg.jamming_power * frame.s_ub * links.ub.large_scale_gain
    fwd_b = frame.s_ub * links.ub.large_scale_gain * g2
    fwd_e = frame.s_ue * links.ue.large_scale_gain * g2
    gamma_b = (1.0 - beta) * x_a * fwd_b / (
        fwd_b * ((1.0 - beta) * n0 + cfg.processing_noise) + n0
    )
    gamma_e = (1.0 - beta) * x_a * fwd_e / (
        (1.0 - beta) * x_b * fwd_e
        + fwd_e * ((1.0 - beta) * n0 + cfg.processing_noise)
        + n0
    )
    return gamma_b, gamma_e


# ---------------------------------------------------------------------------
# configuration


def test_config_power_budget():
    cfg = pr.ProtocolConfig(total_power=100.0, allocation=0.7)
    assert cfg.source_power == pytest.approx(70.0)
    assert cfg.jamming_power == pytest.approx(30.0)
    assert cfg.source_power + cfg.jamming_power == pytest.approx(cfg.total_power)


def test_config_thresholds_frozen():
    cfg = pr.ProtocolConfig(total_power=1.0)  # rate_t=0.5, rate_s=0.2
    assert cfg.delta_t == pytest.approx(1.0, rel=1e-15)
    assert cfg.delta_e == pytest.approx(0.5157165665103982, rel=1e-14)


def test_config_full_allocation_disables_jamming():
    cfg = pr.ProtocolConfig(total_power=10.0, allocation=1.0)
    assert cfg.jamming_power == 0.0


@pytest.mark.parametrize(
    "bad",
    [
        dict(total_power=0.0),
        dict(total_power=1.0, allocation=0.0),
        dict(total_power=1.0, allocation=1.5),
        dict(total_power=1.0, power_split=-0.1),
        dict(total_power=1.0, power_split=1.1),
        dict(total_power=1.0, harvester_efficiency=0.0),
        dict(total_power=1.0, processing_noise_ratio=-1.0),
        dict(total_power=1.0, rate_t=0.2, rate_s=0.2),
        dict(total_power=1.0, rate_t=0.1, rate_s=0.2),
    ],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        pr.ProtocolConfig(**bad)


def test_frame_rejects_bad_gains():
    with pytest.raises(ValueError):
        pr.FrameRealization(1.0, 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        pr.FrameRealization(1.0, math.nan, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        pr.FrameRealization(np.ones(4), np.array([1.0, -1.0, 1.0, 1.0]), np.ones(4), np.ones(4), np.ones(4))


# ---------------------------------------------------------------------------
# harvesting and relay gain


def test_harvested_power_zero_split():
    cfg = pr.ProtocolConfig(total_power=100.0, power_split=0.0)
    assert pr.harvested_power(cfg, ONES, LINKS) == 0.0


def test_harvested_power_full_harvest_toy():
    cfg = pr.ProtocolConfig(
        total_power=2.0, power_split=1.0, harvester_efficiency=1.0, noise_power=0.0
    )
    assert pr.harvested_power(cfg, ONES, UNIT_LINKS) == pytest.approx(2.0, rel=1e-15)


def test_harvested_power_default_layout_frozen():
    cfg = pr.ProtocolConfig(total_power=100.0)
    assert pr.harvested_power(cfg, ONES, LINKS) == pytest.approx(
        2.8439214850197887, rel=1e-14
    )


def test_relay_gain_zero_split():
    cfg = pr.ProtocolConfig(total_power=100.0, power_split=0.0)
    assert pr.relay_gain(cfg, ONES, LINKS) == 0.0


def test_relay_gain_balanced_toy_is_unity():
    cfg = pr.ProtocolConfig(
        total_power=2.0, harvester_efficiency=1.0, noise_power=0.0,
        processing_noise_ratio=0.0,
    )
    assert pr.relay_gain(cfg, ONES, UNIT_LINKS) == pytest.approx(1.0, rel=1e-15)


def test_relay_gain_identity_on_random_frames():
    cfg = pr.ProtocolConfig(total_power=100.0)
    frames = random_frames(20_000, 3)
    g = pr.relay_gain(cfg, frames, LINKS)
    x_a = cfg.source_power * frames.s_au * LINKS.au.large_scale_gain
    x_b = cfg.jamming_power * frames.s_ub * LINKS.ub.large_scale_gain
    den = 0.5 * (x_a + x_b + cfg.noise_power) + cfg.processing_noise
    np.testing.assert_allclose(g * g * den, pr.harvested_power(cfg, frames, LINKS), rtol=1e-12)


def test_relay_gain_rejects_empty_processing_chain():
    cfg = pr.ProtocolConfig(total_power=1.0, power_split=1.0, processing_noise_ratio=0.0)
    with pytest.raises(ValueError):
        pr.relay_gain(cfg, ONES, LINKS)
    # with processing noise present the beta = 1 gain is still defined
    ok = pr.ProtocolConfig(total_power=1.0, power_split=1.0, processing_noise_ratio=2.0)
    assert np.isfinite(pr.relay_gain(ok, ONES, LINKS))


# ---------------------------------------------------------------------------
# main-link SINR


def test_sinr_main_vanishes_at_split_endpoints():
    for beta in (0.0, 1.0):
        cfg = pr.ProtocolConfig(total_power=100.0, power_split=beta)
        assert pr.sinr_main(cfg, ONES, LINKS) == 0.0
    cfg = pr.ProtocolConfig(total_power=100.0, power_split=0.0)
    out = pr.sinr_main(cfg, random_frames(8, 0), LINKS)
    assert out.shape == (8,) and np.all(out == 0.0)


def test_sinr_main_toy_hand_value():
    # eta=1, beta=1/2, P_a=2, S=L=1, zeta=0, N0=1:
    # 0.25*2 / (0.25*1 + 0.5*1) = 2/3 by direct substitution
    cfg = pr.ProtocolConfig(
        total_power=4.0, harvester_efficiency=1.0, noise_power=1.0,
        processing_noise_ratio=0.0,
    )
    assert pr.sinr_main(cfg, ONES, UNIT_LINKS) == pytest.approx(2.0 / 3.0, rel=1e-15)


def test_sinr_main_matches_composition_at_zero_zeta():
    cfg = pr.ProtocolConfig(total_power=100.0, processing_noise_ratio=0.0)
    frames = random_frames(20_000, 11)
    gamma_b, gamma_e = composition_route(cfg, frames, LINKS)
    np.testing.assert_allclose(pr.sinr_main(cfg, frames, LINKS), gamma_b, rtol=1e-12)
    np.testing.assert_allclose(pr.sinr_eve_phase2(cfg, frames, LINKS), gamma_e, rtol=1e-12)


def test_sinr_main_monotone_in_source_gain_and_power():
    cfg = pr.ProtocolConfig(total_power=100.0, include_residual_epsilon=True)
    frames = random_frames(500, 7)
    bumped = pr.FrameRealization(
        s_au=frames.s_au * 1.3, s_ub=frames.s_ub, s_ue=frames.s_ue,
        s_ae=frames.s_ae, s_be=frames.s_be,
    )
    assert np.all(pr.sinr_main(cfg, bumped, LINKS) > pr.sinr_main(cfg, frames, LINKS))
    richer = pr.ProtocolConfig(total_power=130.0, include_residual_epsilon=True)
    assert np.all(pr.sinr_main(richer, frames, LINKS) > pr.sinr_main(cfg, frames, LINKS))


def test_sinr_main_unimodal_in_beta():
    betas = np.linspace(0.01, 0.99, 99)
    frames = random_frames(16, 5)
    for i in range(16):
        one = pr.FrameRealization(
            *[float(np.asarray(getattr(frames, f"s_{n}"))[i]) for n in cm.LINK_IDS]
        )
        vals = np.array([
            pr.sinr_main(
                pr.ProtocolConfig(total_power=100.0, power_split=float(b)), one, LINKS
            )
            for b in betas
        ])
        rises = np.sign(np.diff(vals))
        assert np.count_nonzero(np.diff(rises) != 0) <= 1  # single interior peak


def test_residual_epsilon_lowers_sinr_but_stays_small_in_mean():
    frames = random_frames(20_000, 13)
    for p_dbw in (20.0, 25.0, 30.0):
        p = 10.0 ** (p_dbw / 10.0)
        off = pr.sinr_main(pr.ProtocolConfig(total_power=p), frames, LINKS)
        on = pr.sinr_main(
            pr.ProtocolConfig(total_power=p, include_residual_epsilon=True), frames, LINKS
        )
        assert np.all(on < off)  # extra noise can only hurt
        assert abs(on.mean() - off.mean()) / off.mean() < 0.01


# ---------------------------------------------------------------------------
# eavesdropper SINRs


def test_sinr_eve_phase1_no_jamming_toy():
    cfg = pr.ProtocolConfig(total_power=2.0, allocation=1.0, noise_power=1.0)
    assert pr.sinr_eve_phase1(cfg, ONES, UNIT_LINKS) == pytest.approx(2.0, rel=1e-15)


def test_sinr_eve_phase1_jamming_dominance():
    # jamming power grows with fixed source power: the leak must vanish
    p_a = 10.0
    values = [
        pr.sinr_eve_phase1(
            pr.ProtocolConfig(total_power=p_a / lam, allocation=lam), ONES, LINKS
        )
        for lam in (0.9, 0.5, 0.1, 0.01, 1e-6)
    ]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-4 * values[0]


def test_sinr_eve_phase2_vanishes_at_split_endpoints():
    for beta in (0.0, 1.0):
        cfg = pr.ProtocolConfig(total_power=100.0, power_split=beta)
        assert pr.sinr_eve_phase2(cfg, ONES, LINKS) == 0.0


def test_sinr_eve_phase2_no_jamming_toy():
    # same structure as the main-link toy: 0.25*2 / (0 + 0.5 + 0.25) = 2/3
    cfg = pr.ProtocolConfig(
        total_power=2.0, allocation=1.0, harvester_efficiency=1.0,
        noise_power=1.0, processing_noise_ratio=0.0,
    )
    assert pr.sinr_eve_phase2(cfg, ONES, UNIT_LINKS) == pytest.approx(2.0 / 3.0, rel=1e-15)


def test_sinr_eve_is_the_phase_maximum():
    cfg = pr.ProtocolConfig(total_power=100.0)
    frames = random_frames(5_000, 17)
    combined = pr.sinr_eve(cfg, frames, LINKS)
    g1 = pr.sinr_eve_phase1(cfg, frames, LINKS)
    g2 = pr.sinr_eve_phase2(cfg, frames, LINKS)
    np.testing.assert_array_equal(combined, np.maximum(g1, g2))
    assert np.any(combined == g1) and np.any(combined == g2)  # both phases matter


def test_sinr_eve_non_increasing_in_jamming_power():
    frames = random_frames(1_000, 19)
    p_a = 10.0
    prev = None
    for lam in (0.9, 0.5, 0.2, 0.05, 0.01):
        cfg = pr.ProtocolConfig(total_power=p_a / lam, allocation=lam)
        cur = pr.sinr_eve(cfg, frames, LINKS)
        if prev is not None:
            assert np.all(cur <= prev * (1.0 + 1e-12))
        prev = cur


def test_phase_sinrs_use_disjoint_gain_coordinates():
    cfg = pr.ProtocolConfig(total_power=100.0)
    frames = random_frames(100, 23)
    relay_bumped = pr.FrameRealization(
        s_au=frames.s_au * 2.0, s_ub=frames.s_ub * 3.0, s_ue=frames.s_ue * 1.7,
        s_ae=frames.s_ae, s_be=frames.s_be,
    )
    np.testing.assert_array_equal(
        pr.sinr_eve_phase1(cfg, frames, LINKS), pr.sinr_eve_phase1(cfg, relay_bumped, LINKS)
    )
    direct_bumped = pr.FrameRealization(
        s_au=frames.s_au, s_ub=frames.s_ub, s_ue=frames.s_ue,
        s_ae=frames.s_ae * 2.0, s_be=frames.s_be * 3.0,
    )
    np.testing.assert_array_equal(
        pr.sinr_eve_phase2(cfg, frames, LINKS), pr.sinr_eve_phase2(cfg, direct_bumped, LINKS)
    )
    np.testing.assert_array_equal(
        pr.sinr_main(cfg, frames, LINKS), pr.sinr_main(cfg, direct_bumped, LINKS)
    )


# ---------------------------------------------------------------------------
# secrecy quantities


def test_secrecy_quantities_identities():
    cfg = pr.ProtocolConfig(total_power=100.0)
    frames = random_frames(5_000, 29)
    out = pr.secrecy_quantities(cfg, frames, LINKS)
    gm = pr.sinr_main(cfg, frames, LINKS)
    ge = pr.sinr_eve(cfg, frames, LINKS)
    np.testing.assert_allclose(out.capacity_main, 0.5 * np.log2(1.0 + gm), rtol=1e-12)
    np.testing.assert_allclose(out.capacity_eve, 0.5 * np.log2(1.0 + ge), rtol=1e-12)
    np.testing.assert_array_equal(
        out.secrecy_rate, np.maximum(out.capacity_main - out.capacity_eve, 0.0)
    )
    assert np.all(out.secrecy_rate <= out.capacity_main)
    assert np.all(out.secrecy_rate[ge >= gm] == 0.0)


def test_secrecy_rate_clamps_when_eavesdropper_wins():
    strong_eve = cm.LinkSet(
        au=cm.LinkModel("au", 0.0, 1e-6),
        ub=cm.LinkModel("ub", 0.0, 1e-6),
        ue=cm.LinkModel("ue", 0.0, 1.0),
        ae=cm.LinkModel("ae", 0.0, 1.0),
        be=cm.LinkModel("be", 0.0, 1e-9),
    )
    cfg = pr.ProtocolConfig(total_power=100.0)
    out = pr.secrecy_quantities(cfg, ONES, strong_eve)
    assert out.capacity_eve > out.capacity_main
    assert out.secrecy_rate == 0.0


def test_secrecy_rate_approaches_main_capacity_without_leaks():
    deaf_eve = cm.LinkSet(
        au=LINKS.au, ub=LINKS.ub,
        ue=cm.LinkModel("ue", 0.0, 1e-30),
        ae=cm.LinkModel("ae", 0.0, 1e-30),
        be=LINKS.be,
    )
    cfg = pr.ProtocolConfig(total_power=100.0)
    out = pr.secrecy_quantities(cfg, ONES, deaf_eve)
    assert out.secrecy_rate == pytest.approx(out.capacity_main, rel=1e-12)
