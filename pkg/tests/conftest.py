"""Shared fixtures: hand-built scenarios with known geometry."""

import numpy as np
import pytest

from v2xcoex.channel import PhyParams, dbm_to_watts
from v2xcoex.scenario import (
    Lane,
    QuotaConfig,
    RoadGrid,
    Scenario,
    SpectrumConfig,
    SpsConfig,
    Vehicle,
)


def desk_phy(**overrides) -> PhyParams:
    """Default radio constants with a short interference radius (7.64 m),
    so penalty regimes are exercised at bench-top map sizes."""
    return PhyParams.defaults().with_overrides(
        rx_threshold_w=dbm_to_watts(-35.0), **overrides)


def line_scenario(specs, *, k_dedicated=2, k_unlicensed=1, subframes=2,
                  quota_vehicle=2, quota_resource=2, speed_kmh=30.0,
                  phy=None, lane_length=4000.0):
    """Build a single-lane scenario from explicit offsets.

    specs: list of ("v2i", off) | ("v2v", tx_off, rx_off) | ("vanet", off).
    """
    lane = Lane("test-0", (-lane_length / 2, 0.0), (1.0, 0.0), lane_length)
    grid = RoadGrid((lane,), (-lane_length / 2, -10.0, lane_length / 2, 10.0))
    speed = speed_kmh * 1000.0 / 3600.0
    vehicles = []

    def add(role, off, peer=None):
        vid = len(vehicles)
        vehicles.append(Vehicle(vid, role, 0, float(off) + lane_length / 2,
                                speed, peer))
        return vid

    for spec in specs:
        if spec[0] == "v2i":
            add("v2i", spec[1])
        elif spec[0] == "v2v":
            tx = add("v2v_tx", spec[1])
            rx = add("v2v_rx", spec[2], peer=tx)
            vehicles[tx] = Vehicle(tx, "v2v_tx", 0, vehicles[tx].offset,
                                   speed, rx)
        elif spec[0] == "vanet":
            add("vanet", spec[1])
        else:
            raise ValueError(spec[0])

    return Scenario(
        grid=grid,
        vehicles=tuple(vehicles),
        spectrum=SpectrumConfig(k_dedicated, k_unlicensed),
        sps=SpsConfig(subframes, 1e-3),
        quotas=QuotaConfig(quota_vehicle, quota_resource),
        phy=phy if phy is not None else desk_phy(),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20250815)
