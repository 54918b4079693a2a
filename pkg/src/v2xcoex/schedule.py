"""Allocation bookkeeping, feasibility checks and the scored objective.

A cell is one (subchannel, subframe) slot. The objective counts assignments
whose SINR clears the detection threshold and charges lambda per square meter
of additional interference area on the unlicensed band.
"""

import io
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .channel import ChannelState
from .geometry import InterferenceDisk, penalty_term as _disk_penalty, \
    subframe_interference, union_area

__all__ = [
    "Resource",
    "Allocation",
    "Violation",
    "check_constraints",
    "resource_utility",
    "penalty_term",
    "total_interference",
    "coverage_ratio",
    "ObjectiveBreakdown",
    "objective",
    "active_by_class",
    "allocation_to_csv",
    "allocation_from_csv",
]


@dataclass(frozen=True, order=True)
class Resource:
    """One time-frequency cell; k and t are 1-based."""
    k: int
    t: int


class Allocation:
    """Binary user-to-cell assignment with both lookup directions."""

    def __init__(self, n_users: int, spectrum, subframes: int):
        self.n_users = n_users
        self.spectrum = spectrum
        self.subframes = subframes
        self._cells: dict[tuple[int, int], set[int]] = {}
        self._by_user: dict[int, set[tuple[int, int]]] = {}

    @classmethod
    def for_scenario(cls, scenario) -> "Allocation":
        return cls(len(scenario.users()), scenario.spectrum,
                   scenario.sps.subframes)

    def _check_cell(self, k: int, t: int) -> None:
        if not 1 <= k <= self.spectrum.k_total:
            raise ValueError(f"subchannel {k} outside [1, {self.spectrum.k_total}]")
        if not 1 <= t <= self.subframes:
            raise ValueError(f"subframe {t} outside [1, {self.subframes}]")

    def assign(self, uid: int, k: int, t: int) -> None:
        self._check_cell(k, t)
        if not 0 <= uid < self.n_users:
            raise ValueError(f"unknown user {uid}")
        cell = (k, t)
        if cell in self._by_user.get(uid, ()):
            raise ValueError(f"user {uid} already holds cell {cell}")
        self._cells.setdefault(cell, set()).add(uid)
        self._by_user.setdefault(uid, set()).add(cell)

    def release(self, uid: int, k: int, t: int) -> None:
        cell = (k, t)
        try:
            self._cells[cell].remove(uid)
            self._by_user[uid].remove(cell)
        except KeyError:
            raise ValueError(f"user {uid} does not hold cell {cell}") from None
        if not self._cells[cell]:
            del self._cells[cell]
        if not self._by_user[uid]:
            del self._by_user[uid]

    def users_of(self, k: int, t: int) -> set[int]:
        return self._cells.get((k, t), set())

    def resources_of(self, uid: int) -> set[tuple[int, int]]:
        return self._by_user.get(uid, set())

    def load(self, uid: int) -> int:
        return len(self._by_user.get(uid, ()))

    def holds_dedicated(self, uid: int, t: int) -> bool:
        return any(k <= self.spectrum.k_dedicated and tt == t
                   for k, tt in self._by_user.get(uid, ()))

    def unlicensed_holders(self, t: int) -> list[int]:
        """Users transmitting on any unlicensed subchannel of subframe t,
        ascending id."""
        out = {u for (k, tt), members in self._cells.items()
               if tt == t and self.spectrum.is_unlicensed(k)
               for u in members}
        return sorted(out)

    def assignments(self) -> Iterator[tuple[int, int, int]]:
        for (k, t), members in self._cells.items():
            for uid in members:
                yield uid, k, t

    def count(self) -> int:
        return sum(len(m) for m in self._cells.values())

    def copy(self) -> "Allocation":
        dup = Allocation(self.n_users, self.spectrum, self.subframes)
        dup._cells = {c: set(m) for c, m in self._cells.items()}
        dup._by_user = {u: set(r) for u, r in self._by_user.items()}
        return dup

    def __eq__(self, other) -> bool:
        return (isinstance(other, Allocation)
                and self._cells == other._cells)


@dataclass(frozen=True)
class Violation:
    constraint: str
    subject: str
    count: int

    def __str__(self) -> str:
        return f"{self.constraint}: {self.subject} (count {self.count})"


def check_constraints(alloc: Allocation, scenario) -> list[Violation]:
    """All matching-condition violations; empty list means feasible.

    Checks: at most one V2I holder per cell, per-vehicle quota, per-resource
    quota, and a dedicated anchor in every subframe a vehicle occupies.
    """
    users = scenario.users()
    quotas = scenario.quotas
    out: list[Violation] = []
    for (k, t), members in sorted(alloc._cells.items()):
        n_v2i = sum(1 for u in members if users[u].kind == "v2i")
        if n_v2i > 1:
            out.append(Violation("v2i_exclusive", f"cell ({k},{t})", n_v2i))
        if len(members) > quotas.per_resource:
            out.append(Violation("resource_quota", f"cell ({k},{t})",
                                 len(members)))
    for uid in sorted(alloc._by_user):
        cells = alloc._by_user[uid]
        if len(cells) > quotas.per_vehicle:
            out.append(Violation("vehicle_quota", f"user {uid}", len(cells)))
        for t in sorted({t for _, t in cells}):
            if not alloc.holds_dedicated(uid, t):
                out.append(Violation("dedicated_anchor",
                                     f"user {uid} subframe {t}", 1))
    return out


def resource_utility(resource: Resource, alloc: Allocation,
                     chan: ChannelState) -> int:
    """Number of active holders of one cell under the given allocation."""
    members = alloc.users_of(resource.k, resource.t)
    total = 0
    for uid in members:
        co = [v for v in members if v != uid]
        total += chan.active(uid, resource.t, co)
    return total


def disk_map(chan: ChannelState, t: int,
             uids: Iterable[int]) -> dict[int, InterferenceDisk]:
    ti = t - 1
    return {u: InterferenceDisk(chan.tx_pos[u, ti, 0], chan.tx_pos[u, ti, 1],
                                chan.radius)
            for u in uids}


def penalty_term(uid: int, alloc: Allocation, t: int,
                 chan: ChannelState) -> float:
    """Interference charge of one user in subframe t under the allocation."""
    holders = disk_map(chan, t, alloc.unlicensed_holders(t))
    return _disk_penalty(uid, holders)


def total_interference(alloc: Allocation, chan: ChannelState) -> float:
    """Total charged interference area across the scheduling cycle."""
    total = 0.0
    for t in range(1, alloc.subframes + 1):
        holders = disk_map(chan, t, alloc.unlicensed_holders(t))
        total += subframe_interference(holders)
    return total


def coverage_ratio(alloc: Allocation, chan: ChannelState,
                   cell: float = 2.0) -> float:
    """Mean fraction of the map denied to VANET users per subframe.

    Union of the unlicensed interference disks clipped to the road bounding
    box; a diagnostic ratio in [0, 1], distinct from the charged area.
    """
    bounds = chan.scenario.grid.bounds
    box = (bounds[2] - bounds[0]) * (bounds[3] - bounds[1])
    total = 0.0
    for t in range(1, alloc.subframes + 1):
        disks = list(disk_map(chan, t, alloc.unlicensed_holders(t)).values())
        if disks:
            total += union_area(disks, bounds, cell=cell) / box
    return total / alloc.subframes


@dataclass(frozen=True)
class ObjectiveBreakdown:
    active_count: int
    interference_area: float
    lam: float

    @property
    def value(self) -> float:
        return self.active_count - self.lam * self.interference_area


def objective(alloc: Allocation, chan: ChannelState,
              lam: float) -> ObjectiveBreakdown:
    """Active assignments minus lambda times charged interference area.

    Detection indicators are evaluated against the allocation being scored.
    """
    active = 0
    for (k, t), members in alloc._cells.items():
        for uid in members:
            co = [v for v in members if v != uid]
            active += chan.active(uid, t, co)
    return ObjectiveBreakdown(active_count=active,
                              interference_area=total_interference(alloc, chan),
                              lam=lam)


def active_by_class(alloc: Allocation, chan: ChannelState) -> dict[str, int]:
    """Active assignment counts split by user kind and band."""
    out = {"v2i_dedicated": 0, "v2i_unlicensed": 0,
           "v2v_dedicated": 0, "v2v_unlicensed": 0}
    for (k, t), members in alloc._cells.items():
        band = "unlicensed" if alloc.spectrum.is_unlicensed(k) else "dedicated"
        for uid in members:
            co = [v for v in members if v != uid]
            if chan.active(uid, t, co):
                out[f"{chan.users[uid].kind}_{band}"] += 1
    return out


def allocation_to_csv(alloc: Allocation) -> str:
    """Assignment triples, one per line, sorted, LF-terminated."""
    buf = io.StringIO()
    buf.write("vehicle_id,k,t\n")
    for uid, k, t in sorted(alloc.assignments()):
        buf.write(f"{uid},{k},{t}\n")
    return buf.getvalue()


def allocation_from_csv(text: str, n_users: int, spectrum,
                        subframes: int) -> Allocation:
    lines = text.strip().split("\n")
    if lines[0] != "vehicle_id,k,t":
        raise ValueError(f"unexpected header {lines[0]!r}")
    alloc = Allocation(n_users, spectrum, subframes)
    for line in lines[1:]:
        uid, k, t = (int(x) for x in line.split(","))
        alloc.assign(uid, k, t)
    return alloc
