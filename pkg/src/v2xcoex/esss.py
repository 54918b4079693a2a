"""Duty-cycled coexistence on the unlicensed band.

Each duty cycle is laid out as [sensing][cellular V2X][VANET]. An idle
sensing result hands the whole adaptive period to V2X; a busy one splits it
equally with the VANET side, so the two never transmit at once.
"""

from dataclasses import dataclass

import numpy as np

from .matching import run_dvrma
from .schedule import objective

__all__ = [
    "DutyCycleConfig",
    "DutyCycle",
    "ChannelOccupancy",
    "sample_occupancy",
    "sense_and_select",
    "maybe_switch",
    "plan_duty_cycle",
    "CycleRecord",
    "run_coexistence",
    "cycle_seed",
    "cycles_to_csv",
]


@dataclass(frozen=True)
class DutyCycleConfig:
    """Timing and traffic constants for the coexistence loop.

    adaptive_sps counts the SPS cycles spanned by the adaptive transmission
    period; keeping it an integer avoids float drift in period arithmetic.
    """
    sps_period_s: float
    adaptive_sps: int = 2
    sensing_s: float = 1e-3
    n_channels: int = 3
    p_busy: float = 0.5
    sensing_threshold_w: float = 1e-10

    @classmethod
    def for_scenario(cls, scenario, **overrides) -> "DutyCycleConfig":
        base = dict(
            sps_period_s=scenario.sps.subframes * scenario.sps.subframe_s,
            sensing_s=scenario.sps.subframe_s,
            sensing_threshold_w=scenario.phy.rx_threshold_w,
        )
        base.update(overrides)
        cfg = cls(**base)
        if cfg.adaptive_sps < 1:
            raise ValueError("adaptive_sps must be at least 1")
        if cfg.n_channels < 1:
            raise ValueError("need at least one unlicensed channel")
        if not 0.0 <= cfg.p_busy <= 1.0:
            raise ValueError("p_busy must lie in [0, 1]")
        return cfg


@dataclass(frozen=True)
class DutyCycle:
    sensing_period: float
    v2x_period: float
    vanet_period: float
    n_sc: int  # SPS cycles inside the V2X period

    @property
    def cycle_length(self) -> float:
        return self.sensing_period + self.v2x_period + self.vanet_period


@dataclass(frozen=True)
class ChannelOccupancy:
    """Measured interference per unlicensed channel, channel ids 1-based."""
    levels: tuple

    def idle(self, channel: int, threshold: float) -> bool:
        return self.levels[channel - 1] < threshold


def sample_occupancy(cfg: DutyCycleConfig, rng) -> ChannelOccupancy:
    """One Bernoulli busy draw per channel; busy channels measure in
    [thr, 2 thr), idle ones in [0, thr)."""
    busy = rng.random(cfg.n_channels) < cfg.p_busy
    u = rng.random(cfg.n_channels)
    thr = cfg.sensing_threshold_w
    return ChannelOccupancy(tuple(thr * (1.0 + ui) if b else thr * ui
                                  for b, ui in zip(busy, u)))


def sense_and_select(occ: ChannelOccupancy,
                     threshold: float) -> tuple[int, bool]:
    """First idle channel by index, else the least interfered one."""
    for cid, level in enumerate(occ.levels, start=1):
        if level < threshold:
            return cid, True
    return int(np.argmin(occ.levels)) + 1, False


def maybe_switch(current: int, occ: ChannelOccupancy,
                 threshold: float) -> int:
    """Leave a busy channel only for a strictly less interfered one."""
    if occ.idle(current, threshold):
        return current
    best = int(np.argmin(occ.levels)) + 1
    if occ.levels[best - 1] < occ.levels[current - 1]:
        return best
    return current


def plan_duty_cycle(idle: bool, cfg: DutyCycleConfig) -> DutyCycle:
    """Idle hands the whole adaptive period to V2X; busy splits it equally.

    The equal split needs an even adaptive_sps, checked only when a busy
    cycle actually occurs.
    """
    if idle:
        n_sc = cfg.adaptive_sps
        vanet = 0.0
    else:
        if cfg.adaptive_sps % 2:
            raise ValueError(
                "busy cycles split the adaptive period in half; "
                f"adaptive_sps={cfg.adaptive_sps} must be even")
        n_sc = cfg.adaptive_sps // 2
        vanet = n_sc * cfg.sps_period_s
    return DutyCycle(cfg.sensing_s, n_sc * cfg.sps_period_s, vanet, n_sc)


def cycle_seed(master_seed: int, cycle_index: int,
               sps_index: int) -> np.random.SeedSequence:
    """Seed for one SPS-cycle scheduler run; the same derivation lets a
    direct scheduler pipeline reproduce coexistence metrics exactly."""
    return np.random.SeedSequence(master_seed,
                                  spawn_key=(1, cycle_index, sps_index))


@dataclass(frozen=True)
class CycleRecord:
    cycle_index: int
    selected_channel: int
    idle: bool
    plan: DutyCycle
    active_count: float      # mean over the cycle's SPS runs
    interference_area: float


def run_coexistence(scenario, lam: float, n_cycles: int, seed: int, *,
                    config: DutyCycleConfig = None,
                    unit_fading: bool = False) -> list[CycleRecord]:
    """Sense, plan and schedule n_cycles duty cycles.

    Occupancy draws come from one dedicated stream; each SPS cycle inside a
    V2X period gets its own scheduler run and seed.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    cfg = config if config is not None \
        else DutyCycleConfig.for_scenario(scenario)
    thr = cfg.sensing_threshold_w
    occ_rng = np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(0,)))
    records = []
    current = None
    for c in range(1, n_cycles + 1):
        occ = sample_occupancy(cfg, occ_rng)
        if current is None:
            current, idle = sense_and_select(occ, thr)
        else:
            current = maybe_switch(current, occ, thr)
            idle = occ.idle(current, thr)
        plan = plan_duty_cycle(idle, cfg)
        actives = []
        areas = []
        for s in range(plan.n_sc):
            res = run_dvrma(scenario, lam, cycle_seed(seed, c, s),
                            unit_fading=unit_fading)
            br = objective(res.alloc, res.state.chan, lam)
            actives.append(br.active_count)
            areas.append(br.interference_area)
        records.append(CycleRecord(
            c, current, idle,
            plan,
            float(np.mean(actives)) if actives else 0.0,
            float(np.mean(areas)) if areas else 0.0))
    return records


def cycles_to_csv(records) -> str:
    lines = ["cycle_index,selected_channel,idle_flag,active_count,"
             "interference_area"]
    for r in records:
        lines.append(f"{r.cycle_index},{r.selected_channel},{int(r.idle)},"
                     f"{r.active_count:.9g},{r.interference_area:.9g}")
    return "\n".join(lines) + "\n"
