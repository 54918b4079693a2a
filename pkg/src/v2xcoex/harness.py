"""Experiment orchestration: JSON sweep configs, seeded replications, CSV rows.

One result row per (sweep point, replication).  A sweep point is one element
of the cross product speed x lambda x SINR threshold x spectrum mode x
algorithm.  Points that share (speed, replication) reuse a single scenario
and fading realization, so comparisons across lambda, threshold, mode and
algorithm are paired; only the axes that change the random draws enter the
child seed.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .baselines import run_greedy
from .channel import ChannelState, PhyParams, db_to_linear, dbm_to_watts
from .matching import run_dvrma
from .scenario import ScenarioConfig, ScenarioError, generate_urban
from .schedule import (active_by_class, check_constraints, coverage_ratio,
                       objective)

MODES = ("shared", "dedicated")
ALGORITHMS = ("dvrma", "greedy")
FADING_MODELS = ("rayleigh", "none")


class ConfigError(ValueError):
    """Raised for malformed experiment configs; message names the field."""


class HarnessError(RuntimeError):
    """An infeasible allocation reached the recording stage."""


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class SweepAxes:
    speeds_kmh: tuple
    lams: tuple
    gammas_db: tuple
    modes: tuple
    algorithms: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a base scenario, axis lists, replication count, seed.

    `base` carries the per-point placeholders: its speed and SINR threshold
    are overwritten from the sweep axes before each run.
    """

    base: ScenarioConfig
    fading: str
    sweep: SweepAxes
    replications: int
    seed: int
    out: str = None

    def scenario_config(self, speed_kmh: float,
                        gamma_db: float) -> ScenarioConfig:
        phy = self.base.phy.with_overrides(
            sinr_threshold=db_to_linear(gamma_db))
        return replace(self.base, speed_kmh=speed_kmh, phy=phy)

    def n_rows(self) -> int:
        s = self.sweep
        return (len(s.speeds_kmh) * len(s.lams) * len(s.gammas_db)
                * len(s.modes) * len(s.algorithms) * self.replications)


_SCENARIO_FIELDS = {f.name for f in fields(ScenarioConfig)} - {"speed_kmh",
                                                               "phy"}
_PHY_KEYS = ("tx_power_dbm", "rx_threshold_dbm", "noise_density_dbm_hz",
             "antenna_gain_db", "alpha", "bandwidth_hz", "waiting_interval_s",
             "fading")
_SWEEP_KEYS = ("speeds_kmh", "lams", "gammas_db", "modes", "algorithms")
_TOP_KEYS = ("scenario", "phy", "sweep", "replications", "seed", "out")


def _reject_unknown(doc: dict, allowed, path: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown key '{path}{key}'")


def _number(doc: dict, key: str, default, path: str):
    val = doc.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"'{path}{key}' must be a number")
    return val


def _int(doc: dict, key: str, default, path: str) -> int:
    val = doc.get(key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"'{path}{key}' must be an integer")
    return val


def _number_list(doc: dict, key: str, default, path: str) -> tuple:
    val = doc.get(key, default)
    if (not isinstance(val, (list, tuple)) or not val
            or any(isinstance(x, bool) or not isinstance(x, (int, float))
                   for x in val)):
        raise ConfigError(f"'{path}{key}' must be a non-empty number list")
    return tuple(float(x) for x in val)


def _choice_list(doc: dict, key: str, default, allowed, path: str) -> tuple:
    val = doc.get(key, default)
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(f"'{path}{key}' must be a non-empty list")
    for x in val:
        if x not in allowed:
            raise ConfigError(
                f"'{path}{key}' entry {x!r} not one of {sorted(allowed)}")
    return tuple(val)


def _phy_from_json(doc: dict) -> tuple:
    """Table-style radio block in dB units; returns (PhyParams, fading)."""
    _reject_unknown(doc, _PHY_KEYS, "phy.")
    bw = _number(doc, "bandwidth_hz", 1e4, "phy.")
    if bw <= 0:
        raise ConfigError("'phy.bandwidth_hz' must be positive")
    density = _number(doc, "noise_density_dbm_hz", -174.0, "phy.")
    fading = doc.get("fading", "rayleigh")
    if fading not in FADING_MODELS:
        raise ConfigError(
            f"'phy.fading' must be one of {sorted(FADING_MODELS)}")
    phy = PhyParams.defaults().with_overrides(
        tx_power_w=dbm_to_watts(_number(doc, "tx_power_dbm", 23.0, "phy.")),
        rx_threshold_w=dbm_to_watts(
            _number(doc, "rx_threshold_dbm", -75.0, "phy.")),
        noise_w=dbm_to_watts(density + 10.0 * np.log10(bw)),
        gain_factor=db_to_linear(
            _number(doc, "antenna_gain_db", -31.5, "phy.")),
        alpha=_number(doc, "alpha", 3.0, "phy."),
        subchannel_bw_hz=bw,
        waiting_interval_s=_number(doc, "waiting_interval_s", 0.01, "phy."),
    )
    return phy, fading


def config_from_json(doc: dict) -> ExperimentConfig:
    """Build and validate a config from a parsed JSON document.

    Every key is optional; unknown keys anywhere are hard errors naming the
    offending path, so a typo in a sweep axis cannot silently fall back to a
    default.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "")

    scn_doc = doc.get("scenario", {})
    if not isinstance(scn_doc, dict):
        raise ConfigError("'scenario' must be an object")
    _reject_unknown(scn_doc, _SCENARIO_FIELDS, "scenario.")

    phy_doc = doc.get("phy", {})
    if not isinstance(phy_doc, dict):
        raise ConfigError("'phy' must be an object")
    phy, fading = _phy_from_json(phy_doc)

    base = ScenarioConfig(phy=phy)
    for name in sorted(_SCENARIO_FIELDS):
        if name not in scn_doc:
            continue
        current = getattr(base, name)
        if isinstance(current, int):
            base = replace(base, **{name: _int(scn_doc, name, None,
                                               "scenario.")})
        else:
            base = replace(base, **{name: float(_number(scn_doc, name, None,
                                                        "scenario."))})

    sweep_doc = doc.get("sweep", {})
    if not isinstance(sweep_doc, dict):
        raise ConfigError("'sweep' must be an object")
    _reject_unknown(sweep_doc, _SWEEP_KEYS, "sweep.")
    sweep = SweepAxes(
        speeds_kmh=_number_list(sweep_doc, "speeds_kmh", [30.0], "sweep."),
        lams=_number_list(sweep_doc, "lams", [0.0026], "sweep."),
        gammas_db=_number_list(sweep_doc, "gammas_db", [0.0], "sweep."),
        modes=_choice_list(sweep_doc, "modes", ["shared"], MODES, "sweep."),
        algorithms=_choice_list(sweep_doc, "algorithms", ["dvrma"],
                                ALGORITHMS, "sweep."),
    )
    if any(lam < 0 for lam in sweep.lams):
        raise ConfigError("'sweep.lams' entries must be >= 0")

    replications = _int(doc, "replications", 1, "")
    if replications < 1:
        raise ConfigError("'replications' must be >= 1")
    seed = _int(doc, "seed", 0, "")
    if seed < 0:
        raise ConfigError("'seed' must be >= 0")
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("'out' must be a string path")

    cfg = ExperimentConfig(base=base, fading=fading, sweep=sweep,
                           replications=replications, seed=seed, out=out)
    for speed in sweep.speeds_kmh:  # surface scenario errors at parse time
        try:
            cfg.scenario_config(speed, sweep.gammas_db[0]).validate()
        except ScenarioError as err:
            raise ConfigError(f"'sweep.speeds_kmh': {err}") from err
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: not valid JSON ({err})") from err
    return config_from_json(doc)


# --- result rows --------------------------------------------------------------

RESULT_COLUMNS = (
    "speed_kmh", "lam", "gamma_db", "mode", "algorithm", "replication",
    "seed", "active_count", "active_v2i_dedicated", "active_v2i_unlicensed",
    "active_v2v_dedicated", "active_v2v_unlicensed", "interference_ratio",
    "proposal_count", "process_count", "wall_time")

_INT_COLUMNS = {"replication", "seed", "active_count", "active_v2i_dedicated",
                "active_v2i_unlicensed", "active_v2v_dedicated",
                "active_v2v_unlicensed", "proposal_count", "process_count"}
_STR_COLUMNS = {"mode", "algorithm"}


@dataclass(frozen=True)
class ResultRow:
    speed_kmh: float
    lam: float
    gamma_db: float
    mode: str
    algorithm: str
    replication: int
    seed: int
    active_count: int
    active_v2i_dedicated: int
    active_v2i_unlicensed: int
    active_v2v_dedicated: int
    active_v2v_unlicensed: int
    interference_ratio: float
    proposal_count: int
    process_count: int
    wall_time: float


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple


def _fmt(val) -> str:
    if isinstance(val, str):
        return val
    if isinstance(val, (int, np.integer)):
        return str(int(val))
    return "%.9g" % val


def result_to_csv(result: ExperimentResult) -> str:
    lines = [",".join(RESULT_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in RESULT_COLUMNS))
    return "\n".join(lines) + "\n"


def result_from_csv(text: str) -> ExperimentResult:
    lines = text.strip("\n").split("\n")
    if not lines or lines[0] != ",".join(RESULT_COLUMNS):
        raise ValueError("unexpected result header "
                         f"{lines[0] if lines else ''!r}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(RESULT_COLUMNS):
            raise ValueError(f"malformed result line {ln!r}")
        kw = {}
        for col, raw in zip(RESULT_COLUMNS, parts):
            if col in _STR_COLUMNS:
                kw[col] = raw
            elif col in _INT_COLUMNS:
                kw[col] = int(raw)
            else:
                kw[col] = float(raw)
        rows.append(ResultRow(**kw))
    return ExperimentResult(rows=tuple(rows))


def write_result(result: ExperimentResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(result_to_csv(result))


def read_result(path: str) -> ExperimentResult:
    with open(path, encoding="utf-8") as fh:
        return result_from_csv(fh.read())


# --- execution ----------------------------------------------------------------

def child_seed(master: int, speed_idx: int,
               replication: int) -> np.random.SeedSequence:
    """Seed for one (scenario point, replication) draw.

    Only speed changes the geometry and fading draws, so lambda, threshold,
    mode and algorithm all reopen the same sequence: paired comparisons.
    """
    return np.random.SeedSequence(master, spawn_key=(speed_idx, replication))


def _run_cell(cfg: ExperimentConfig, speed_idx: int, lam: float,
              gamma_db: float, mode: str, algorithm: str,
              rep: int) -> ResultRow:
    speed = cfg.sweep.speeds_kmh[speed_idx]
    child = child_seed(cfg.seed, speed_idx, rep)
    seed_u64 = int(child.generate_state(1, np.uint64)[0])
    scn_ss, chan_ss, init_ss = child.spawn(3)

    scenario = generate_urban(cfg.scenario_config(speed, gamma_db),
                              seed=scn_ss)
    if mode == "dedicated":
        scenario = scenario.dedicated_view()
    chan = ChannelState(scenario, seed=chan_ss,
                        unit_fading=cfg.fading == "none")

    start = time.perf_counter()
    if algorithm == "dvrma":
        run = run_dvrma(scenario, lam, init_ss, chan=chan)
        alloc = run.alloc
        proposals, processes = run.proposal_count, run.process_count
    else:
        run = run_greedy(scenario, chan=chan)
        alloc = run.alloc
        # effort column carries the SINR comparison count for the baseline
        proposals, processes = sum(run.comparisons.values()), 1
    wall = time.perf_counter() - start

    bad = check_constraints(alloc, scenario)
    if bad:
        raise HarnessError(f"{algorithm} produced violations: "
                           + "; ".join(str(v) for v in bad))
    breakdown = objective(alloc, chan, lam)
    split = active_by_class(alloc, chan)
    return ResultRow(
        speed_kmh=speed, lam=lam, gamma_db=gamma_db, mode=mode,
        algorithm=algorithm, replication=rep, seed=seed_u64,
        active_count=breakdown.active_count,
        active_v2i_dedicated=split["v2i_dedicated"],
        active_v2i_unlicensed=split["v2i_unlicensed"],
        active_v2v_dedicated=split["v2v_dedicated"],
        active_v2v_unlicensed=split["v2v_unlicensed"],
        interference_ratio=coverage_ratio(alloc, chan),
        proposal_count=proposals, process_count=processes, wall_time=wall)


def _run_cell_args(args) -> ResultRow:
    return _run_cell(*args)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Execute every sweep point x replication and collect one row each.

    Rows come back in deterministic nested axis order (speed, lambda,
    threshold, mode, algorithm, replication) regardless of the worker count.
    """
    sweep = cfg.sweep
    tasks = [(cfg, si, lam, gamma, mode, algorithm, rep)
             for si in range(len(sweep.speeds_kmh))
             for lam in sweep.lams
             for gamma in sweep.gammas_db
             for mode in sweep.modes
             for algorithm in sweep.algorithms
             for rep in range(cfg.replications)]
    if jobs <= 1 or len(tasks) <= 1:
        rows = [_run_cell_args(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_args, tasks, chunksize=1))
    return ExperimentResult(rows=tuple(rows))


# --- aggregation ---------------------------------------------------------------

GROUP_AXES = ("speed_kmh", "lam", "gamma_db", "mode", "algorithm")

_SUMMARY_METRICS = ("active_count", "active_v2i_dedicated",
                    "active_v2i_unlicensed", "active_v2v_dedicated",
                    "active_v2v_unlicensed", "interference_ratio",
                    "proposal_count", "process_count")


def summarize(result: ExperimentResult, group_by) -> list:
    """Mean and population std (ddof 0) of each metric per axis group.

    Wall time is left out so summaries of identical runs stay identical.
    Returns one dict per group, ordered by group key.
    """
    axes = tuple(group_by)
    if not axes:
        raise ValueError("group_by must name at least one axis")
    for axis in axes:
        if axis not in GROUP_AXES:
            raise ValueError(f"unknown group axis '{axis}'; "
                             f"choose from {', '.join(GROUP_AXES)}")
    if not result.rows:
        raise ValueError("cannot summarize an empty result")

    groups = {}
    for row in result.rows:
        groups.setdefault(tuple(getattr(row, a) for a in axes),
                          []).append(row)
    table = []
    for key in sorted(groups, key=lambda k: tuple(map(str, k))):
        rows = groups[key]
        entry = dict(zip(axes, key))
        entry["n"] = len(rows)
        for metric in _SUMMARY_METRICS:
            vals = np.array([getattr(r, metric) for r in rows], dtype=float)
            entry[f"{metric}_mean"] = float(vals.mean())
            entry[f"{metric}_std"] = float(vals.std())
        table.append(entry)
    return table


def summary_to_csv(table: list, group_by) -> str:
    axes = tuple(group_by)
    cols = list(axes) + ["n"]
    for metric in _SUMMARY_METRICS:
        cols += [f"{metric}_mean", f"{metric}_std"]
    lines = [",".join(cols)]
    for entry in table:
        lines.append(",".join(_fmt(entry[c]) for c in cols))
    return "\n".join(lines) + "\n"
