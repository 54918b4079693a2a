"""Dynamic vehicle-resource matching with resource-side decisions.

Vehicles propose cells in descending-rate order; resources accept, reject or
evict by comparing their own utility net of the weighted interference area.
Rejection events are memoized per (vehicle, cell, matched set) so the same
configuration is never proposed twice, which bounds the total proposal count.
"""

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .geometry import subframe_interference
from .schedule import Allocation, Resource, disk_map, objective

__all__ = [
    "MatchingError",
    "PreferenceList",
    "MatchingState",
    "DecisionOutcome",
    "TraceRow",
    "MatchingResult",
    "build_preferences",
    "is_blocking_pair",
    "resource_decide",
    "run_matching_process",
    "run_dvrma",
    "is_pairwise_stable",
    "trace_to_csv",
]


class MatchingError(RuntimeError):
    """Proposal count escaped its theoretical bound; engine is diverging."""


@dataclass
class PreferenceList:
    owner: int
    entries: list  # [(k, t)], best first; consumed front to back


@dataclass(frozen=True)
class DecisionOutcome:
    accepted: bool
    evicted: int | None = None


@dataclass(frozen=True)
class TraceRow:
    process_index: int
    proposals: int
    active_count: int
    objective_value: float


class MatchingState:
    """Matching plus the memoization and counters the engine mutates."""

    def __init__(self, chan: ChannelState):
        self.chan = chan
        self.scenario = chan.scenario
        self.users = chan.users
        self.alloc = Allocation.for_scenario(self.scenario)
        # (uid, k, t) -> set of matched sets that rejected uid there
        self.incompatible: dict[tuple[int, int, int], set[frozenset]] = {}
        self.prefs: dict[int, PreferenceList] = {}
        self.proposal_count = 0
        self.round_index = 0
        n = len(self.users)
        q = self.scenario.quotas.per_resource
        grid = self.scenario.spectrum.k_total * self.scenario.sps.subframes
        # Runaway ceiling, not a tightness claim: every rejection or
        # eviction of a pair (V, W) records a matched set of W never seen
        # by V there before, and an acceptance needs a prior eviction to
        # recur, so proposals per pair cannot outrun twice the number of
        # recordable sets (sizes 0..Q drawn from the other users) plus one.
        sets_per_pair = sum(math.comb(max(n - 1, 0), j)
                            for j in range(0, q + 1))
        self.proposal_cap = n * grid * (2 * sets_per_pair + 1)

    def is_incompatible(self, uid: int, k: int, t: int) -> bool:
        rec = self.incompatible.get((uid, k, t))
        return (rec is not None
                and frozenset(self.alloc.users_of(k, t)) in rec)

    def record_incompatible(self, uid: int, k: int, t: int) -> None:
        self.incompatible.setdefault((uid, k, t), set()).add(
            frozenset(self.alloc.users_of(k, t)))


def _cell_utility(state: MatchingState, t: int, members) -> int:
    total = 0
    for v in members:
        co = [w for w in members if w != v]
        total += state.chan.active(v, t, co)
    return total


def _hypothetical_holders(state: MatchingState, k: int, t: int,
                          members: frozenset) -> set[int]:
    """Unlicensed transmitters of subframe t if cell (k,t) held `members`.

    Accounts for departures that strip a vehicle's last dedicated anchor in
    t, which releases its unlicensed cells there.
    """
    alloc = state.alloc
    spectrum = alloc.spectrum
    holders = set(alloc.unlicensed_holders(t))
    old = alloc.users_of(k, t)
    if spectrum.is_unlicensed(k):
        holders.update(members - old)
        for v in old - members:
            still = any(tt == t and spectrum.is_unlicensed(kk) and kk != k
                        for kk, tt in alloc.resources_of(v))
            if not still:
                holders.discard(v)
    else:
        for v in old - members:
            anchored = any(tt == t and kk <= spectrum.k_dedicated
                           and (kk, tt) != (k, t)
                           for kk, tt in alloc.resources_of(v))
            if not anchored:
                holders.discard(v)
    return holders


def _option_score(state: MatchingState, k: int, t: int,
                  members: frozenset, lam: float) -> float:
    """Cell utility minus lambda times the subframe's charged area if the
    cell held `members`; the basis resources compare options on."""
    util = _cell_utility(state, t, members)
    if lam == 0.0:
        return float(util)
    holders = _hypothetical_holders(state, k, t, members)
    area = subframe_interference(disk_map(state.chan, t, holders))
    return util - lam * area


def _cascade_release(state: MatchingState, uid: int, t: int) -> None:
    """Drop uid's unlicensed cells in t after it lost its last anchor."""
    alloc = state.alloc
    if alloc.holds_dedicated(uid, t):
        return
    dead = [(kk, tt) for kk, tt in alloc.resources_of(uid)
            if tt == t and alloc.spectrum.is_unlicensed(kk)]
    for kk, tt in dead:
        alloc.release(uid, kk, tt)


def _swap(state: MatchingState, k: int, t: int, add: int,
          remove: int) -> None:
    state.alloc.release(remove, k, t)
    _cascade_release(state, remove, t)
    state.alloc.assign(add, k, t)


def build_preferences(uid: int, state: MatchingState) -> PreferenceList:
    """Candidate cells in descending-rate order under the current matching.

    Drops cells below the detection threshold, cells whose present matched
    set previously rejected this vehicle, and unlicensed cells in subframes
    where the vehicle holds no dedicated anchor. Rate ties break toward the
    lexicographically smaller (k, t).
    """
    alloc, chan = state.alloc, state.chan
    held = alloc.resources_of(uid)
    scored = []
    for t in range(1, alloc.subframes + 1):
        anchored = alloc.holds_dedicated(uid, t)
        for k in range(1, alloc.spectrum.k_total + 1):
            if (k, t) in held:
                continue
            if alloc.spectrum.is_unlicensed(k) and not anchored:
                continue
            if state.is_incompatible(uid, k, t):
                continue
            co = alloc.users_of(k, t)
            if not chan.active(uid, t, co):
                continue
            scored.append((-chan.rate(uid, t, co), k, t))
    scored.sort()
    return PreferenceList(uid, [(k, t) for _, k, t in scored])


def is_blocking_pair(uid: int, resource: Resource, state: MatchingState,
                     lam: float) -> bool:
    """Whether vehicle and resource would both strictly gain by matching.

    Gated by feasibility: quotas on both sides, V2I exclusivity and the
    dedicated-anchor condition; infeasible additions never block.
    """
    k, t = resource.k, resource.t
    alloc = state.alloc
    members = alloc.users_of(k, t)
    if (k, t) in alloc.resources_of(uid):
        return False
    if alloc.load(uid) >= state.scenario.quotas.per_vehicle:
        return False
    if len(members) >= state.scenario.quotas.per_resource:
        return False
    if (state.users[uid].kind == "v2i"
            and any(state.users[v].kind == "v2i" for v in members)):
        return False
    if alloc.spectrum.is_unlicensed(k) and not alloc.holds_dedicated(uid, t):
        return False
    if state.is_incompatible(uid, k, t):
        return False
    if not state.chan.active(uid, t, members):
        return False
    stay = _option_score(state, k, t, frozenset(members), lam)
    join = _option_score(state, k, t, frozenset(members) | {uid}, lam)
    if not join > stay:
        return False
    # vehicle side: the extra cell strictly raises its rate sum
    return state.chan.rate(uid, t, members) > 0.0


def resource_decide(resource: Resource, proposer: int, state: MatchingState,
                    lam: float) -> DecisionOutcome:
    """Resolve one proposal; on rejection or eviction the loser records the
    cell's post-decision matched set as incompatible.

    Admissions weigh utility against the interference penalty, but the
    head-to-head rankings (the exclusive-user contest and the saturated
    eviction) compare cell utility alone, so who beats whom at a cell does
    not drift with the rest of the allocation. A proposer only displaces an
    incumbent it strictly beats; every eviction therefore raises the cell's
    utility, which rules out displacement cycles.
    """
    k, t = resource.k, resource.t
    alloc = state.alloc
    members = frozenset(alloc.users_of(k, t))
    users = state.users

    if users[proposer].kind == "v2i":
        incumbent = next((v for v in sorted(members)
                          if users[v].kind == "v2i"), None)
        if incumbent is not None:
            u_inc = _cell_utility(state, t, members)
            u_prop = _cell_utility(state, t,
                                   members - {incumbent} | {proposer})
            if u_prop > u_inc:
                _swap(state, k, t, add=proposer, remove=incumbent)
                state.record_incompatible(incumbent, k, t)
                return DecisionOutcome(True, incumbent)
            state.record_incompatible(proposer, k, t)
            return DecisionOutcome(False)

    if len(members) < state.scenario.quotas.per_resource:
        if is_blocking_pair(proposer, resource, state, lam):
            alloc.assign(proposer, k, t)
            return DecisionOutcome(True)
        state.record_incompatible(proposer, k, t)
        return DecisionOutcome(False)

    # saturated: drop the least-contributing candidate; equivalently keep
    # the set whose remaining utility is highest
    pool = members | {proposer}
    scores = {c: _cell_utility(state, t, pool - {c}) for c in pool}
    top = max(scores.values())
    if scores[proposer] == top:
        # the proposer is among the least contributors; never trade an
        # incumbent for an equal one
        state.record_incompatible(proposer, k, t)
        return DecisionOutcome(False)
    evictee = max(c for c in members if scores[c] == top)
    _swap(state, k, t, add=proposer, remove=evictee)
    state.record_incompatible(evictee, k, t)
    return DecisionOutcome(True, evictee)


def _consumable(state: MatchingState, uid: int, k: int, t: int) -> bool:
    """Entry still proposable: memo and anchor can go stale mid-process."""
    if state.is_incompatible(uid, k, t):
        return False
    if (state.alloc.spectrum.is_unlicensed(k)
            and not state.alloc.holds_dedicated(uid, t)):
        return False
    return (k, t) not in state.alloc.resources_of(uid)


def run_matching_process(state: MatchingState, lam: float) -> int:
    """Rounds of simultaneous proposals until a round makes none.

    Each round every unsaturated vehicle consumes entries until one is
    proposable (stale entries are dropped silently); decisions are applied
    in ascending (k, t) then proposer id. Returns the proposal count.
    """
    s_max = state.scenario.quotas.per_vehicle
    total = 0
    while True:
        state.round_index += 1
        intents = []
        for uid in sorted(state.prefs):
            if state.alloc.load(uid) >= s_max:
                continue
            entries = state.prefs[uid].entries
            while entries:
                k, t = entries.pop(0)
                if _consumable(state, uid, k, t):
                    intents.append((uid, k, t))
                    break
        made = 0
        for uid, k, t in sorted(intents, key=lambda i: (i[1], i[2], i[0])):
            if not _consumable(state, uid, k, t):
                continue  # invalidated by an earlier decision this round
            state.proposal_count += 1
            made += 1
            if state.proposal_count > state.proposal_cap:
                raise MatchingError(
                    f"proposal count {state.proposal_count} exceeds the "
                    f"runaway bound {state.proposal_cap}")
            resource_decide(Resource(k, t), uid, state, lam)
        total += made
        if made == 0:
            return total


@dataclass(frozen=True)
class MatchingResult:
    alloc: Allocation
    trace: tuple[TraceRow, ...]
    proposal_count: int
    process_count: int
    state: MatchingState


def _trace_row(state: MatchingState, index: int, proposals: int,
               lam: float) -> TraceRow:
    br = objective(state.alloc, state.chan, lam)
    return TraceRow(index, proposals, br.active_count, br.value)


def _random_initialize(state: MatchingState, rng) -> None:
    """One random dedicated cell per vehicle where quotas permit."""
    alloc = state.alloc
    q = state.scenario.quotas.per_resource
    for uid in rng.permutation(len(state.users)):
        uid = int(uid)
        options = []
        for t in range(1, alloc.subframes + 1):
            for k in range(1, alloc.spectrum.k_dedicated + 1):
                cell = alloc.users_of(k, t)
                if len(cell) >= q:
                    continue
                if (state.users[uid].kind == "v2i"
                        and any(state.users[v].kind == "v2i" for v in cell)):
                    continue
                options.append((k, t))
        if options:
            k, t = options[int(rng.integers(len(options)))]
            alloc.assign(uid, k, t)


def run_dvrma(scenario, lam: float, seed, *, chan: ChannelState = None,
              unit_fading: bool = False) -> MatchingResult:
    """Full run: random init, then processes of proposal rounds until the
    first round of a process yields none.

    With `chan` supplied the seed drives only the initialization draw, so
    paired algorithms can share one channel realization.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    if chan is None:
        chan_ss, init_ss = seed.spawn(2)
        chan = ChannelState(scenario, seed=chan_ss, unit_fading=unit_fading)
        rng = np.random.default_rng(init_ss)
    else:
        rng = np.random.default_rng(seed)

    state = MatchingState(chan)
    _random_initialize(state, rng)
    trace = [_trace_row(state, 0, 0, lam)]
    s_max = state.scenario.quotas.per_vehicle
    process = 0
    while True:
        process += 1
        state.prefs = OrderedDict(
            (u.uid, build_preferences(u.uid, state))
            for u in state.users if state.alloc.load(u.uid) < s_max)
        made = run_matching_process(state, lam)
        trace.append(_trace_row(state, process, made, lam))
        if made == 0:
            break
    return MatchingResult(state.alloc, tuple(trace), state.proposal_count,
                          process, state)


def is_pairwise_stable(state: MatchingState,
                       lam: float) -> tuple[bool, tuple | None]:
    """Exhaustive blocking-pair scan; returns the first witness if any."""
    alloc = state.alloc
    for u in state.users:
        for t in range(1, alloc.subframes + 1):
            for k in range(1, alloc.spectrum.k_total + 1):
                if (k, t) in alloc.resources_of(u.uid):
                    continue
                if is_blocking_pair(u.uid, Resource(k, t), state, lam):
                    return False, (u.uid, k, t)
    return True, None


def trace_to_csv(trace) -> str:
    lines = ["process_index,proposals,active_count,objective_value"]
    for r in trace:
        lines.append(f"{r.process_index},{r.proposals},{r.active_count},"
                     f"{r.objective_value:.9g}")
    return "\n".join(lines) + "\n"
