"""Experiment orchestration: per-trial solves, sweeps and CSV/JSON emission."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ao, conic, metrics, robust, sdr
from .channel import linear_to_db, sample_channels
from .config import ConfigError, ExperimentConfig, config_from_dict
from .metrics import BeampatternResult
from .radar import design_desired_covariance

logger = logging.getLogger(__name__)

PATTERN_HEADER = ("angle_deg", "desired_power_w", "achieved_power_w")
SWEEP_AXES = {"sinr_db": "sinr_db", "L": "geometry.n_elements", "eps": "uncertainty.values"}
ROBUST_SLACK = 1e-2
_AGGREGATED = ("objective", "pslr_db", "mse", "iterations", "min_sinr_db")


@dataclass
class RunSummary:
    """Per-trial records, their aggregate and the echoed configuration.

    ``timings`` (wall-clock seconds) and ``patterns`` are kept apart from
    ``trials`` so that the emitted summary is reproducible byte for byte.
    """

    config: dict
    trials: list
    aggregate: dict
    timings: list = field(default_factory=list)
    patterns: list = field(default_factory=list, repr=False)

    @property
    def method(self):
        return self.config["method"]

    @property
    def all_infeasible(self):
        return not any(t["status"] == ao.OK for t in self.trials)

    def to_dict(self):
        return {"method": self.method, "config": self.config, "trials": self.trials,
                "aggregate": self.aggregate}


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _floats(values):
    return [_finite(x) for x in np.ravel(values)]


def design(config):
    """Desired radar covariance for ``config`` (deterministic, shared by all trials)."""
    return design_desired_covariance(config.angular_grid(), float(config.p0),
                                     config.array_geometry(), config.controls.solver_tol)


def _design_ok(desired):
    return desired.status in (conic.OPTIMAL, conic.MAX_ITER) and np.all(np.isfinite(desired.R))


def _failed_trial(config, index, reason):
    record = {"trial": index, "seed": config.seed + index, "status": ao.INFEASIBLE,
              "stop_reason": reason, "objective": None, "xi_trace": [], "iterations": 0}
    record.update({k: None for k in ("pslr_db", "mse", "sinr_db", "min_sinr_db",
                                     "worst_case_sinr_db", "total_power_w", "max_modulus_error")})
    return record, {"trial": index, "total_s": 0.0}, None


def _solve(config, method, ch, desired, seed):
    targets, p0 = config.targets(), config.p0
    ccp, aoc = config.ccp_controls(), config.ao_controls()
    if method == "proposed":
        return ao.solve_joint(ch.estimated(), desired, targets, p0, ccp, aoc, seed)
    if method == "no_irs":
        return ao.solve_joint(ch.without_irs(), desired, targets, p0, ccp, aoc, seed,
                              optimize_irs=False)
    if method == "sdr":
        return sdr.solve_sdr(ch.estimated(), desired, targets, p0, aoc, seed)
    if method == "robust":
        return robust.solve_robust(ch, desired, targets, p0, None, ccp, aoc, seed)
    raise ValueError(f"unknown method {method!r}")


def _radar_trial(config, desired):
    grid, geom = config.angular_grid(), config.array_geometry()
    pattern = metrics.beampattern(desired.R, grid, geom)
    result = BeampatternResult(np.asarray(grid.angles), pattern, pattern)
    record = {"trial": 0, "seed": config.seed,
              "status": ao.OK if _design_ok(desired) else desired.status, "stop_reason": "",
              "objective": 0.0, "xi_trace": [],
              "pslr_db": _finite(metrics.pslr(pattern, grid)), "mse": 0.0, "iterations": 0,
              "sinr_db": None, "min_sinr_db": None, "worst_case_sinr_db": None,
              "total_power_w": _finite(np.real(np.trace(desired.R))),
              "sidelobe_margin": _finite(desired.t_opt)}
    return record, {"trial": 0, "total_s": 0.0}, result


def run_trial(config, desired, index):
    """One Monte Carlo trial; returns ``(record, timing, pattern)``."""
    seed = config.seed + index
    grid, geom = config.angular_grid(), config.array_geometry()
    ch = sample_channels(config.channel_model(), seed)
    method = config.method
    t0 = time.perf_counter()
    sol, trace = _solve(config, method, ch, desired, seed)
    elapsed = time.perf_counter() - t0
    record = {"trial": index, "seed": seed, "status": sol.status,
              "stop_reason": trace.stop_reason, "objective": _finite(sol.objective),
              "xi_trace": _floats(trace.xi), "iterations": trace.iterations,
              "pslr_db": None, "mse": None, "sinr_db": None, "min_sinr_db": None,
              "worst_case_sinr_db": None, "total_power_w": None, "max_modulus_error": None}
    timing = {"trial": index, "total_s": elapsed,
              "w_step_s": [s.get("w_time") for s in trace.steps],
              "v_step_s": [s.get("v_time") for s in trace.steps]}
    if sol.status != ao.OK:
        return record, timing, None
    truth = ch.without_irs() if method == "no_irs" else ch
    pat = metrics.pattern_result(desired.R, sol.w, grid, geom)
    sinr = metrics.achieved_sinr(truth, sol.w, sol.v, config.sigma2)
    record.update(pslr_db=_finite(metrics.pslr(pat.achieved, grid)),
                  mse=_finite(metrics.mse(pat.achieved, pat.desired)),
                  sinr_db=_floats(linear_to_db(sinr)),
                  min_sinr_db=_finite(linear_to_db(sinr.min())),
                  total_power_w=_finite(metrics.total_power(sol.w)),
                  max_modulus_error=_finite(np.max(np.abs(np.abs(sol.v) - 1.0))))
    if method == "robust":
        worst = metrics.worst_case_sinr_sampled(ch, sol.w, sol.v, config.sigma2,
                                                config.validation_samples, seed)
        record["worst_case_sinr_db"] = _floats(linear_to_db(worst))
        record["robust_validated"] = bool(
            np.all(worst >= config.targets().array * (1.0 - ROBUST_SLACK)))
    return record, timing, pat


def _trial_worker(args):
    config_dict, desired, index = args
    return run_trial(config_from_dict(config_dict), desired, index)


def aggregate(records):
    """Means and standard deviations over the feasible trials."""
    ok = [r for r in records if r["status"] == ao.OK]
    out = {"n_trials": len(records), "n_feasible": len(ok)}
    for key in _AGGREGATED:
        vals = [r[key] for r in ok if r.get(key) is not None]
        out[key] = ({"mean": float(np.mean(vals)), "std": float(np.std(vals))} if vals
                    else {"mean": None, "std": None})
    return out


def run(config):
    """Execute ``config.method`` on ``config.trials`` trials (seed of trial i: ``seed + i``)."""
    if not isinstance(config, ExperimentConfig):
        config = config_from_dict(config)
    desired = design(config)
    if config.method == "radar_only":
        results = [_radar_trial(config, desired)]
    elif not _design_ok(desired):
        logger.error("radar covariance design failed (%s)", desired.status)
        results = [_failed_trial(config, i, "radar_design_failed") for i in range(config.trials)]
    else:
        jobs = [(config.to_dict(), desired, i) for i in range(config.trials)]
        if config.workers > 1 and config.trials > 1:
            with ProcessPoolExecutor(max_workers=min(config.workers, config.trials)) as pool:
                results = list(pool.map(_trial_worker, jobs))
        else:
            results = [run_trial(config, desired, i) for i in range(config.trials)]
    records = [r for r, _, _ in results]
    for r in records:
        logger.info("trial %d (seed %d): %s, PSLR %s dB", r["trial"], r["seed"], r["status"],
                    r["pslr_db"])
    return RunSummary(config.to_dict(), records, aggregate(records),
                      [t for _, t, _ in results], [p for _, _, p in results])


def sweep_config(config, axis, value):
    if axis not in SWEEP_AXES:
        raise ConfigError([("axis", f"unknown sweep axis {axis!r}; "
                                    f"choose from {sorted(SWEEP_AXES)}")])
    changes = {SWEEP_AXES[axis]: value}
    if axis == "L":
        if float(value) != int(value):
            raise ConfigError([("values", f"L must be an integer, got {value}")])
        changes[SWEEP_AXES[axis]] = int(value)
    if axis == "eps" and config.uncertainty.mode == "none":
        changes["uncertainty.mode"] = "relative"
    return config.updated(changes)


def sweep(config, axis, values):
    """One :class:`RunSummary` per axis value; seeds are shared across values."""
    configs = [sweep_config(config, axis, v) for v in values]
    return [run(c) for c in configs]


# emission


def _write(path, writer):
    try:
        with open(path, "w", newline="") as fh:
            writer(fh)
    except OSError as err:
        raise OSError(err.errno, f"cannot write {path}: {err.strerror}") from err


def write_pattern_csv(pattern, path):
    def writer(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(PATTERN_HEADER)
        for row in zip(pattern.angles, pattern.desired, pattern.achieved):
            out.writerow([repr(float(x)) for x in row])

    _write(path, writer)


def read_pattern_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != PATTERN_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    return BeampatternResult(data[:, 0], data[:, 1], data[:, 2])


def _dump_json(obj, path):
    _write(path, lambda fh: fh.write(json.dumps(obj, indent=2, allow_nan=False) + "\n"))


def sweep_document(axis, values, summaries):
    return {"axis": axis, "values": list(values), "runs": [s.to_dict() for s in summaries]}


def emit(obj, path, format=None):
    """Write a pattern (CSV) or a summary / sweep (JSON) to ``path``."""
    format = format or ("csv" if str(path).endswith(".csv") else "json")
    if format == "csv":
        if not isinstance(obj, BeampatternResult):
            raise TypeError("CSV emission takes a BeampatternResult")
        write_pattern_csv(obj, path)
    elif format == "json":
        doc = obj.to_dict() if isinstance(obj, RunSummary) else obj
        _dump_json(doc, path)
    else:
        raise ValueError(f"unknown format {format!r}")
