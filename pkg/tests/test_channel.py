import math

import numpy as np
import pytest

from v2xcoex.channel import (
    ChannelState,
    LinkGain,
    PhyParams,
    active_indicator,
    channel_gain,
    db_to_linear,
    dbm_to_watts,
    rate,
    received_power,
    sinr_v2i,
    sinr_v2v,
    watts_to_dbm,
)

from conftest import line_scenario


class FakeAlloc:
    def __init__(self, members):
        self.members = members  # dict (k, t) -> set of uids

    def users_of(self, k, t):
        return self.members.get((k, t), set())


def test_gain_drifts_distance_by_relative_velocity():
    phy = PhyParams.defaults()
    g = channel_gain((3.0, 4.0), (1.0, 0.0), 2.0, 1.0, phy)
    want = phy.gain_factor * math.hypot(5.0, 4.0) ** -3.0
    assert g.value == pytest.approx(want, rel=1e-12)
    assert g.fading_draw == 1.0
    # fading scales linearly
    g2 = channel_gain((3.0, 4.0), (1.0, 0.0), 2.0, 0.25, phy)
    assert g2.value == pytest.approx(want * 0.25, rel=1e-12)


def test_received_power_at_one_meter_matches_db_budget():
    # 23 dBm - 31.5 dB = -8.5 dBm at 1 m, unit fading, no drift
    phy = PhyParams.defaults()
    g = channel_gain((1.0, 0.0), (0.0, 0.0), 0.0, 1.0, phy)
    p = received_power(g, phy)
    assert watts_to_dbm(p) == pytest.approx(-8.5, abs=1e-9)


def test_rate_frozen_points():
    assert rate(0.0) == 0.0
    assert rate(1.0) == pytest.approx(1.0)
    assert rate(3.0) == pytest.approx(2.0)


def test_active_indicator_threshold_inclusive():
    assert active_indicator(1.0, 1.0) == 1
    assert active_indicator(0.9999999, 1.0) == 0
    assert active_indicator(5.0, 1.0) == 1


def test_defaults_noise_floor():
    phy = PhyParams.defaults()
    # -174 dBm/Hz over 10 kHz -> -134 dBm
    assert watts_to_dbm(phy.noise_w) == pytest.approx(-134.0, abs=1e-9)
    assert phy.sinr_threshold == 1.0
    assert phy.disk_radius() == pytest.approx(164.6897865482869, rel=1e-9)


def test_sinr_single_equal_gain_interferer():
    # interfering transmitter co-located with the wanted transmitter:
    # sinr = s / (noise + s)
    sc = line_scenario([("v2v", 0.0, 10.0), ("v2v", 0.0, 300.0)],
                       subframes=1)
    chan = ChannelState(sc, unit_fading=True)
    s = sc.phy.tx_power_w * chan.gain[0, 0, 0]
    assert chan.gain[1, 0, 0] == pytest.approx(chan.gain[0, 0, 0], rel=1e-9)
    got = chan.sinr(0, 1, [1])
    assert got == pytest.approx(s / (sc.phy.noise_w + s), rel=1e-9)


def test_sinr_non_increasing_in_interferers(rng):
    sc = line_scenario([("v2v", 0.0, 12.0), ("v2v", 40.0, 55.0),
                        ("v2v", 90.0, 100.0), ("v2i", 140.0)],
                       subframes=2)
    chan = ChannelState(sc, seed=3)
    for uid in range(3):
        others = [v for v in range(4) if v != uid]
        for t in (1, 2):
            prev = chan.sinr(uid, t, [])
            co = []
            for nxt in others:
                co.append(nxt)
                cur = chan.sinr(uid, t, co)
                assert cur <= prev + 1e-15
                prev = cur


def test_v2i_denominator_ignores_other_v2i():
    sc = line_scenario([("v2i", 0.0), ("v2i", 30.0), ("v2v", 60.0, 70.0)],
                       subframes=1)
    chan = ChannelState(sc, unit_fading=True)
    alloc = FakeAlloc({(1, 1): {0, 1, 2}})
    got = sinr_v2i(0, 1, 1, alloc, chan)
    # only the V2V transmitter contributes interference at the BS
    num = sc.phy.tx_power_w * chan.gain[0, 0, 0]
    den = sc.phy.noise_w + sc.phy.tx_power_w * chan.gain[2, 0, 0]
    assert got == pytest.approx(num / den, rel=1e-12)
    with pytest.raises(ValueError):
        sinr_v2i(2, 1, 1, alloc, chan)


def test_v2v_denominator_hears_everyone():
    sc = line_scenario([("v2i", 0.0), ("v2i", 30.0), ("v2v", 60.0, 70.0)],
                       subframes=1)
    chan = ChannelState(sc, unit_fading=True)
    alloc = FakeAlloc({(2, 1): {0, 1, 2}})
    got = sinr_v2v(2, 2, 1, alloc, chan)
    num = sc.phy.tx_power_w * chan.gain[2, 2, 0]
    den = (sc.phy.noise_w
           + sc.phy.tx_power_w * chan.gain[0, 2, 0]
           + sc.phy.tx_power_w * chan.gain[1, 2, 0])
    assert got == pytest.approx(num / den, rel=1e-12)
    with pytest.raises(ValueError):
        sinr_v2v(0, 2, 1, alloc, chan)


def test_vanet_vehicles_never_enter_gain_tables():
    specs = [("v2i", 0.0), ("v2v", 50.0, 60.0)]
    plain = line_scenario(specs, subframes=2)
    noisy = line_scenario(specs + [("vanet", 20.0), ("vanet", 80.0)],
                          subframes=2)
    a = ChannelState(plain, unit_fading=True)
    b = ChannelState(noisy, unit_fading=True)
    assert a.n_users == b.n_users == 2
    assert np.allclose(a.gain, b.gain)


def test_fading_reproducible_by_seed():
    sc = line_scenario([("v2v", 0.0, 10.0), ("v2i", 40.0)], subframes=3)
    a = ChannelState(sc, seed=11)
    b = ChannelState(sc, seed=11)
    c = ChannelState(sc, seed=12)
    assert np.array_equal(a.fading, b.fading)
    assert not np.array_equal(a.fading, c.fading)
    # unit-mean exponential draws
    big = ChannelState(line_scenario([("v2v", 0.0, 10.0)] * 8,
                                     subframes=8), seed=5)
    assert big.fading.mean() == pytest.approx(1.0, rel=0.1)


def test_bs_receiver_is_static():
    # for a V2I user the receiver sits at the base station
    sc = line_scenario([("v2i", -100.0)], subframes=1)
    chan = ChannelState(sc, unit_fading=True)
    d = math.hypot(-100.0, 0.0)
    drift = sc.phy.waiting_interval_s * sc.vehicles[0].speed
    want = sc.phy.gain_factor * (d - drift) ** -3.0
    assert chan.gain[0, 0, 0] == pytest.approx(want, rel=1e-9)
