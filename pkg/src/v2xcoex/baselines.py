"""Comparison schedulers: greedy max-SINR and the dedicated-only mode."""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .matching import MatchingResult, run_dvrma
from .schedule import Allocation

__all__ = ["GreedyResult", "run_greedy", "run_dedicated_only"]


@dataclass(frozen=True)
class GreedyResult:
    alloc: Allocation
    selections: tuple  # ((uid, k, t), ...) in claim order
    comparisons: dict  # uid -> SINR evaluations spent


def _admissible_cells(alloc: Allocation, uid: int, kind: str, users,
                      per_resource: int):
    """Cells uid may claim right now, honoring quotas, V2I exclusivity and
    the dedicated-anchor condition."""
    held = alloc.resources_of(uid)
    for t in range(1, alloc.subframes + 1):
        anchored = alloc.holds_dedicated(uid, t)
        for k in range(1, alloc.spectrum.k_total + 1):
            if (k, t) in held:
                continue
            if alloc.spectrum.is_unlicensed(k) and not anchored:
                continue
            members = alloc.users_of(k, t)
            if len(members) >= per_resource:
                continue
            if kind == "v2i" and any(users[v].kind == "v2i"
                                     for v in members):
                continue
            yield k, t, members


def run_greedy(scenario, seed=None, *, chan: ChannelState = None,
               unit_fading: bool = False) -> GreedyResult:
    """Vehicles take turns in id order, each grabbing the admissible cell
    with the highest SINR under the partial allocation until it holds S
    cells or runs out of options.

    No detection threshold is applied, so a claim can land below it; the
    allocation never depends on the penalty weight.
    """
    if chan is None:
        chan = ChannelState(scenario, seed=seed, unit_fading=unit_fading)
    alloc = Allocation.for_scenario(scenario)
    users = chan.users
    s_max = scenario.quotas.per_vehicle
    q = scenario.quotas.per_resource
    selections = []
    comparisons = {u.uid: 0 for u in users}
    for u in users:
        for _ in range(s_max):
            best = None
            for k, t, members in _admissible_cells(alloc, u.uid, u.kind,
                                                   users, q):
                comparisons[u.uid] += 1
                cand = (-chan.sinr(u.uid, t, members), k, t)
                if best is None or cand < best:
                    best = cand
            if best is None:
                break
            _, k, t = best
            alloc.assign(u.uid, k, t)
            selections.append((u.uid, k, t))
    return GreedyResult(alloc, tuple(selections), comparisons)


def run_dedicated_only(scenario, lam: float, seed, *,
                       unit_fading: bool = False) -> MatchingResult:
    """Matching run restricted to the dedicated band (K_u = 0 view)."""
    return run_dvrma(scenario.dedicated_view(), lam, seed,
                     unit_fading=unit_fading)
