"""Link gains, SINR and rate model.

Gains follow a velocity-aware power law: the distance vector is advanced by
the relative velocity over the scheduling-to-transmission gap t_w, then
path loss and a per-link Rayleigh power draw apply. V2X-to-V2X interference
only; VANET users never enter a denominator (they are protected in space by
the interference disks and in time by the duty cycle, not modelled as
co-channel transmitters).
"""

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .geometry import interference_radius

__all__ = [
    "PhyParams",
    "LinkGain",
    "db_to_linear",
    "dbm_to_watts",
    "watts_to_dbm",
    "channel_gain",
    "received_power",
    "rate",
    "active_indicator",
    "sinr_v2i",
    "sinr_v2v",
    "ChannelState",
]

# transmitter and receiver are never closer than this (meters)
_MIN_LINK_DISTANCE = 1e-3


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(frozen=True)
class PhyParams:
    """Radio constants; powers in watts, factors linear."""

    tx_power_w: float
    rx_threshold_w: float
    noise_w: float
    gain_factor: float
    alpha: float
    sinr_threshold: float
    subchannel_bw_hz: float
    waiting_interval_s: float

    @classmethod
    def defaults(cls) -> "PhyParams":
        """23 dBm tx, -75 dBm disk threshold, -174 dBm/Hz noise density,
        -31.5 dB gain, alpha 3, 0 dB SINR threshold, 10 kHz subchannels,
        t_w of one 10 ms scheduling cycle."""
        bw = 1e4
        return cls(
            tx_power_w=dbm_to_watts(23.0),
            rx_threshold_w=dbm_to_watts(-75.0),
            noise_w=dbm_to_watts(-174.0 + 10.0 * math.log10(bw)),
            gain_factor=db_to_linear(-31.5),
            alpha=3.0,
            sinr_threshold=db_to_linear(0.0),
            subchannel_bw_hz=bw,
            waiting_interval_s=0.01,
        )

    def with_overrides(self, **kw) -> "PhyParams":
        return replace(self, **kw)

    def disk_radius(self, fading: float = 1.0) -> float:
        return interference_radius(self.tx_power_w, self.gain_factor, fading,
                                   self.rx_threshold_w, self.alpha)


@dataclass(frozen=True)
class LinkGain:
    value: float
    fading_draw: float


def channel_gain(d_vec: Sequence[float], v_rel: Sequence[float], t_w: float,
                 fading_draw: float, params: PhyParams) -> LinkGain:
    """Power gain of a link whose separation drifts by v_rel over t_w."""
    dx = d_vec[0] + v_rel[0] * t_w
    dy = d_vec[1] + v_rel[1] * t_w
    dist = max(math.hypot(dx, dy), _MIN_LINK_DISTANCE)
    value = params.gain_factor * dist ** (-params.alpha) * fading_draw
    return LinkGain(value=value, fading_draw=fading_draw)


def received_power(gain: LinkGain, params: PhyParams) -> float:
    return params.tx_power_w * gain.value


def rate(sinr: float) -> float:
    """Spectral efficiency in bit/s/Hz."""
    return math.log2(1.0 + sinr)


def active_indicator(sinr: float, threshold: float) -> int:
    """1 when the link clears the detection threshold (inclusive)."""
    return 1 if sinr >= threshold else 0


class ChannelState:
    """Per-run gain tables for one scenario.

    A unit-mean exponential power draw is taken once per directed user pair
    and subframe; channel index never enters the draw, so a user sees the
    same gain on every subchannel of a subframe and SINR differences come
    from co-channel membership alone.
    """

    def __init__(self, scenario, seed=None, unit_fading: bool = False):
        from .scenario import advance, velocities  # cycle-free at runtime

        self.scenario = scenario
        self.phy = scenario.phy
        self.users = scenario.users()
        n = len(self.users)
        t_count = scenario.sps.subframes
        self.n_users = n
        self.subframes = t_count
        self.radius = self.phy.disk_radius()

        if unit_fading:
            self.fading = np.ones((n, n, t_count))
        else:
            rng = np.random.default_rng(seed)
            self.fading = rng.exponential(1.0, size=(n, n, t_count))

        vel = velocities(scenario)
        self.tx_pos = np.empty((n, t_count, 2))
        rx_pos = np.empty((n, t_count, 2))
        tx_vel = np.empty((n, 2))
        rx_vel = np.empty((n, 2))
        pos_by_t = [advance(scenario, t) for t in range(1, t_count + 1)]
        for u in self.users:
            tx_vel[u.uid] = vel[u.tx]
            for ti in range(t_count):
                self.tx_pos[u.uid, ti] = pos_by_t[ti][u.tx]
            if u.rx is None:
                rx_pos[u.uid, :, :] = np.asarray(scenario.bs_position)
                rx_vel[u.uid] = 0.0
            else:
                rx_vel[u.uid] = vel[u.rx]
                for ti in range(t_count):
                    rx_pos[u.uid, ti] = pos_by_t[ti][u.rx]

        # gain[v, u, t]: from user v's transmitter to user u's receiver
        self.gain = np.empty((n, n, t_count))
        for v in range(n):
            for u in range(n):
                v_rel = rx_vel[u] - tx_vel[v]
                for ti in range(t_count):
                    d_vec = rx_pos[u, ti] - self.tx_pos[v, ti]
                    self.gain[v, u, ti] = channel_gain(
                        d_vec, v_rel, self.phy.waiting_interval_s,
                        self.fading[v, u, ti], self.phy).value

    def sinr(self, uid: int, t: int, co_users: Iterable[int]) -> float:
        """SINR of user uid in subframe t against co-channel users.

        For V2I users every co-channel V2I term is dropped from the
        denominator (at most one V2I may hold a cell, so the term only
        appears for infeasible sets); V2V receivers hear everybody.
        """
        ti = t - 1
        p = self.phy.tx_power_w
        num = p * self.gain[uid, uid, ti]
        den = self.phy.noise_w
        v2i_victim = self.users[uid].kind == "v2i"
        for v in co_users:
            if v == uid:
                continue
            if v2i_victim and self.users[v].kind == "v2i":
                continue
            den += p * self.gain[v, uid, ti]
        return num / den

    def rate(self, uid: int, t: int, co_users: Iterable[int]) -> float:
        return rate(self.sinr(uid, t, co_users))

    def active(self, uid: int, t: int, co_users: Iterable[int]) -> int:
        return active_indicator(self.sinr(uid, t, co_users),
                                self.phy.sinr_threshold)


def sinr_v2i(uid: int, k: int, t: int, alloc, chan: ChannelState) -> float:
    """SINR at the base station for a V2I holder of cell (k, t)."""
    if chan.users[uid].kind != "v2i":
        raise ValueError(f"user {uid} is not a V2I user")
    co = [v for v in alloc.users_of(k, t) if v != uid]
    return chan.sinr(uid, t, co)


def sinr_v2v(uid: int, k: int, t: int, alloc, chan: ChannelState) -> float:
    """SINR at the paired receiver for a V2V holder of cell (k, t)."""
    if chan.users[uid].kind != "v2v":
        raise ValueError(f"user {uid} is not a V2V user")
    co = [v for v in alloc.users_of(k, t) if v != uid]
    return chan.sinr(uid, t, co)
