"""Urban grid scenarios: lanes, vehicles, roles and deterministic mobility.

The default map is two perpendicular roads crossing at the base station with
two lanes per direction. Vehicles keep a constant speed along their lane and
wrap around at the arm ends, so positions are a pure function of time.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .channel import PhyParams

__all__ = [
    "ScenarioError",
    "Lane",
    "RoadGrid",
    "Vehicle",
    "SpectrumConfig",
    "SpsConfig",
    "QuotaConfig",
    "User",
    "Scenario",
    "ScenarioConfig",
    "generate_urban",
    "advance",
    "velocities",
    "scenario_to_json",
    "scenario_from_json",
]

log = logging.getLogger(__name__)

KMH = 1000.0 / 3600.0


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Lane:
    name: str
    origin: tuple[float, float]
    heading: tuple[float, float]  # unit vector
    length: float

    def point_at(self, s: float) -> tuple[float, float]:
        s = s % self.length
        return (self.origin[0] + self.heading[0] * s,
                self.origin[1] + self.heading[1] * s)


@dataclass(frozen=True)
class RoadGrid:
    lanes: tuple[Lane, ...]
    bounds: tuple[float, float, float, float]


@dataclass(frozen=True)
class Vehicle:
    vid: int
    role: str  # v2i | v2v_tx | v2v_rx | vanet
    lane: int
    offset: float  # arc length along the lane at subframe 1
    speed: float  # m/s, along the lane heading
    peer: Optional[int] = None


@dataclass(frozen=True)
class SpectrumConfig:
    k_dedicated: int
    k_unlicensed: int

    @property
    def k_total(self) -> int:
        return self.k_dedicated + self.k_unlicensed

    def is_unlicensed(self, k: int) -> bool:
        return k > self.k_dedicated


@dataclass(frozen=True)
class SpsConfig:
    subframes: int  # T
    subframe_s: float  # T_s


@dataclass(frozen=True)
class QuotaConfig:
    per_vehicle: int  # S
    per_resource: int  # Q


@dataclass(frozen=True)
class User:
    """A schedulable entity: a V2I vehicle or a V2V transmitter/receiver pair."""
    uid: int
    kind: str  # v2i | v2v
    tx: int  # vehicle id of the transmitter
    rx: Optional[int]  # vehicle id of the receiver, None for the base station


@dataclass(frozen=True)
class Scenario:
    grid: RoadGrid
    vehicles: tuple[Vehicle, ...]
    spectrum: SpectrumConfig
    sps: SpsConfig
    quotas: QuotaConfig
    phy: PhyParams
    bs_position: tuple[float, float] = (0.0, 0.0)

    def users(self) -> tuple[User, ...]:
        out = []
        uid = 0
        for v in self.vehicles:  # V2I users first, ordered by vehicle id
            if v.role == "v2i":
                out.append(User(uid, "v2i", v.vid, None))
                uid += 1
        for v in self.vehicles:
            if v.role == "v2v_tx":
                out.append(User(uid, "v2v", v.vid, v.peer))
                uid += 1
        return tuple(out)

    def dedicated_view(self) -> "Scenario":
        """Same scenario with the unlicensed band removed."""
        return replace(self, spectrum=SpectrumConfig(
            self.spectrum.k_dedicated, 0))


def velocities(scenario: Scenario) -> np.ndarray:
    out = np.zeros((len(scenario.vehicles), 2))
    for v in scenario.vehicles:
        lane = scenario.grid.lanes[v.lane]
        out[v.vid, 0] = lane.heading[0] * v.speed
        out[v.vid, 1] = lane.heading[1] * v.speed
    return out


def advance(scenario: Scenario, t: int) -> np.ndarray:
    """Positions of all vehicles in subframe t, 1-based, wrap at lane ends."""
    if not 1 <= t <= scenario.sps.subframes:
        raise ValueError(f"subframe {t} outside [1, {scenario.sps.subframes}]")
    dt = (t - 1) * scenario.sps.subframe_s
    out = np.empty((len(scenario.vehicles), 2))
    for v in scenario.vehicles:
        lane = scenario.grid.lanes[v.lane]
        out[v.vid] = lane.point_at(v.offset + v.speed * dt)
    return out


# --- generation --------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    n_v2i: int = 10
    n_v2v: int = 10  # pairs; uses two vehicles each
    n_vanet: int = 10
    speed_kmh: float = 30.0
    arm_length_m: float = 500.0
    lane_width_m: float = 3.5
    lanes_per_direction: int = 2
    pairing_range_m: float = 50.0
    headway_s: float = 2.5
    gap_jitter_mean_m: Optional[float] = None  # default: half the safe gap
    subframes: int = 10
    subframe_s: float = 1e-3
    k_dedicated: int = 10
    k_unlicensed: int = 10
    quota_vehicle: int = 3
    quota_resource: int = 3
    phy: PhyParams = field(default_factory=PhyParams.defaults)

    def validate(self) -> None:
        if not 15.0 <= self.speed_kmh <= 60.0:
            raise ScenarioError(
                f"speed {self.speed_kmh} km/h outside the supported 15-60 range")
        for name in ("n_v2i", "n_v2v", "n_vanet"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be >= 0")
        if self.k_dedicated < 1:
            raise ScenarioError("need at least one dedicated subchannel")
        for name in ("subframes", "quota_vehicle", "quota_resource",
                     "lanes_per_direction"):
            if getattr(self, name) < 1:
                raise ScenarioError(f"{name} must be >= 1")


def _project(lane: Lane, point: tuple[float, float]) -> float:
    """Arc length on the lane closest to a point, clamped to the segment."""
    s = ((point[0] - lane.origin[0]) * lane.heading[0]
         + (point[1] - lane.origin[1]) * lane.heading[1])
    return min(max(s, 0.0), lane.length - 1e-9)


def default_grid(arm_length_m: float = 500.0, lane_width_m: float = 3.5,
                 lanes_per_direction: int = 2) -> RoadGrid:
    a, w, n = arm_length_m, lane_width_m, lanes_per_direction
    lanes = []
    for j in range(n):
        off = w / 2 + j * w
        lanes.append(Lane(f"ew-east-{j}", (-a, -off), (1.0, 0.0), 2 * a))
        lanes.append(Lane(f"ew-west-{j}", (a, off), (-1.0, 0.0), 2 * a))
        lanes.append(Lane(f"ns-north-{j}", (off, -a), (0.0, 1.0), 2 * a))
        lanes.append(Lane(f"ns-south-{j}", (-off, a), (0.0, -1.0), 2 * a))
    return RoadGrid(lanes=tuple(lanes), bounds=(-a, -a, a, a))


def generate_urban(cfg: ScenarioConfig, seed=None) -> Scenario:
    """Place vehicles with safe headways, assign roles, pair V2V users."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    grid = default_grid(cfg.arm_length_m, cfg.lane_width_m,
                        cfg.lanes_per_direction)
    speed = cfg.speed_kmh * KMH
    min_gap = cfg.headway_s * speed
    jitter = cfg.gap_jitter_mean_m
    if jitter is None:
        jitter = 0.5 * min_gap

    n_primary = cfg.n_v2i + cfg.n_v2v + cfg.n_vanet
    slots: list[tuple[int, float]] = []  # (lane index, offset)
    for li, lane in enumerate(grid.lanes):
        cursor = float(rng.uniform(0.0, min_gap))
        # wrap-around mobility: also keep a safe gap across the seam
        while cursor < lane.length - min_gap:
            slots.append((li, cursor))
            cursor += min_gap + float(rng.exponential(jitter))
    if len(slots) < n_primary:
        lane = grid.lanes[-1]
        raise ScenarioError(
            f"cannot place {n_primary} vehicles at {cfg.speed_kmh} km/h: the "
            f"grid saturates at {len(slots)} (placement stopped on lane "
            f"{lane.name})")

    picked = list(rng.choice(len(slots), size=n_primary, replace=False))
    rng.shuffle(picked)
    chosen = [slots[i] for i in picked]

    roles = (["v2i"] * cfg.n_v2i + ["v2v_tx"] * cfg.n_v2v
             + ["vanet"] * cfg.n_vanet)
    taken: dict[int, list[float]] = {}
    for li, s in chosen:
        taken.setdefault(li, []).append(s)

    def lane_clear(li: int, s: float) -> bool:
        return all(abs(s - other) >= min_gap for other in taken.get(li, []))

    vehicles: list[Vehicle] = []
    for role, (li, s) in zip(roles, chosen):
        vehicles.append(Vehicle(len(vehicles), role, li, float(s), speed))

    # V2V receivers ride close to their transmitters: prefer the laterally
    # nearest lane at the projected offset, fall back to a same-lane slot one
    # headway away, demote the transmitter when the map is too crowded.
    for tx in [v for v in vehicles if v.role == "v2v_tx"]:
        tx_pos = grid.lanes[tx.lane].point_at(tx.offset)
        placed = None
        order = sorted(
            range(len(grid.lanes)),
            key=lambda li: math.dist(grid.lanes[li].point_at(
                _project(grid.lanes[li], tx_pos)), tx_pos))
        deltas = [0.0, 0.4 * min_gap, -0.4 * min_gap, min_gap + 0.1,
                  -min_gap - 0.1]
        for li in order:
            lane = grid.lanes[li]
            base = _project(lane, tx_pos)
            for delta in deltas:
                s = base + delta
                if not 0.0 <= s < lane.length:
                    continue
                if li == tx.lane and abs(s - tx.offset) < min_gap:
                    continue
                if not lane_clear(li, s):
                    continue
                if math.dist(lane.point_at(s), tx_pos) > cfg.pairing_range_m:
                    continue
                placed = (li, s)
                break
            if placed:
                break
        if placed is None:
            log.warning(
                "no receiver slot within %.0f m of vehicle %d; demoted to VANET",
                cfg.pairing_range_m, tx.vid)
            vehicles[tx.vid] = replace(tx, role="vanet")
            continue
        rx = Vehicle(len(vehicles), "v2v_rx", placed[0], float(placed[1]),
                     speed, peer=tx.vid)
        vehicles.append(rx)
        taken.setdefault(placed[0], []).append(placed[1])
        vehicles[tx.vid] = replace(tx, peer=rx.vid)

    vehicles = tuple(vehicles)
    return Scenario(
        grid=grid,
        vehicles=vehicles,
        spectrum=SpectrumConfig(cfg.k_dedicated, cfg.k_unlicensed),
        sps=SpsConfig(cfg.subframes, cfg.subframe_s),
        quotas=QuotaConfig(cfg.quota_vehicle, cfg.quota_resource),
        phy=cfg.phy,
    )


# --- serialization -----------------------------------------------------------

def scenario_to_json(scenario: Scenario) -> dict:
    return {
        "grid": {
            "lanes": [asdict(lane) for lane in scenario.grid.lanes],
            "bounds": list(scenario.grid.bounds),
        },
        "vehicles": [asdict(v) for v in scenario.vehicles],
        "spectrum": asdict(scenario.spectrum),
        "sps": asdict(scenario.sps),
        "quotas": asdict(scenario.quotas),
        "phy": asdict(scenario.phy),
        "bs_position": list(scenario.bs_position),
    }


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioError(f"missing field {where}.{key}")
    return mapping[key]


def scenario_from_json(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    grid_doc = _require(doc, "grid", "scenario")
    lanes = []
    for i, ld in enumerate(_require(grid_doc, "lanes", "grid")):
        lanes.append(Lane(
            name=str(_require(ld, "name", f"grid.lanes[{i}]")),
            origin=tuple(_require(ld, "origin", f"grid.lanes[{i}]")),
            heading=tuple(_require(ld, "heading", f"grid.lanes[{i}]")),
            length=float(_require(ld, "length", f"grid.lanes[{i}]")),
        ))
    grid = RoadGrid(tuple(lanes), tuple(_require(grid_doc, "bounds", "grid")))
    vehicles = []
    for i, vd in enumerate(_require(doc, "vehicles", "scenario")):
        role = _require(vd, "role", f"vehicles[{i}]")
        if role not in ("v2i", "v2v_tx", "v2v_rx", "vanet"):
            raise ScenarioError(f"vehicles[{i}].role: unknown role {role!r}")
        lane = int(_require(vd, "lane", f"vehicles[{i}]"))
        if not 0 <= lane < len(grid.lanes):
            raise ScenarioError(f"vehicles[{i}].lane: no lane {lane}")
        vehicles.append(Vehicle(
            vid=int(_require(vd, "vid", f"vehicles[{i}]")),
            role=role, lane=lane,
            offset=float(_require(vd, "offset", f"vehicles[{i}]")),
            speed=float(_require(vd, "speed", f"vehicles[{i}]")),
            peer=vd.get("peer"),
        ))
    if [v.vid for v in vehicles] != list(range(len(vehicles))):
        raise ScenarioError("vehicle ids must be 0..n-1 in order")
    for v in vehicles:
        if v.role in ("v2v_tx", "v2v_rx"):
            if v.peer is None or not 0 <= v.peer < len(vehicles):
                raise ScenarioError(f"vehicle {v.vid}: bad V2V peer {v.peer!r}")
            if vehicles[v.peer].peer != v.vid:
                raise ScenarioError(f"vehicle {v.vid}: pairing is not mutual")
    sp = _require(doc, "spectrum", "scenario")
    sps = _require(doc, "sps", "scenario")
    quotas = _require(doc, "quotas", "scenario")
    phy = _require(doc, "phy", "scenario")
    return Scenario(
        grid=grid,
        vehicles=tuple(vehicles),
        spectrum=SpectrumConfig(int(_require(sp, "k_dedicated", "spectrum")),
                                int(_require(sp, "k_unlicensed", "spectrum"))),
        sps=SpsConfig(int(_require(sps, "subframes", "sps")),
                      float(_require(sps, "subframe_s", "sps"))),
        quotas=QuotaConfig(int(_require(quotas, "per_vehicle", "quotas")),
                           int(_require(quotas, "per_resource", "quotas"))),
        phy=PhyParams(**{k: float(v) for k, v in phy.items()}),
        bs_position=tuple(_require(doc, "bs_position", "scenario")),
    )


def save_scenario(scenario: Scenario, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_json(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        return scenario_from_json(json.load(fh))
