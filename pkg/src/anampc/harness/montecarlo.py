"""Seeded Monte Carlo over the component intervals.

Draws are made up front from one generator, so run ``k`` sees the same
parameters whatever the worker count.  Runs are independent tasks mapped in
order; a failed run is recorded with its error and does not stop the batch.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..buck.model import BuckParams
from ..buck.simulate import SimulationDiverged
from .config import ExperimentConfig
from .experiments import run_load_step, run_line_step
from .metrics import FIELDS, MetricsReport, RunMetrics

DRAWN = ("R_L", "C_o", "L", "R_Co")
DIVERGENCE_LIMIT = 0.5  # fraction of V_o the tail may stray from the reference


@dataclass(frozen=True)
class McTask:
    index: int
    cfg: ExperimentConfig
    policy: object
    estimator: object
    values: tuple[float, ...]
    keep_trace: bool


@dataclass(frozen=True)
class McRun:
    index: int
    values: tuple[float, ...]
    status: str  # "ok", "diverged" or "error"
    error: str
    load: RunMetrics | None
    line: RunMetrics | None
    v_o: np.ndarray | None  # load-step output, when kept

    @property
    def divergent(self) -> bool:
        return self.status == "diverged"

    def sse_within_ripple(self) -> bool:
        """Steady-state error no larger than the ripple, for both scenarios."""
        return (self.status == "ok" and self.load.steady_state_error <= self.load.ripple
                and self.line.steady_state_error <= self.line.ripple)


def draw_parameters(cfg: ExperimentConfig, runs: int, seed: int) -> np.ndarray:
    """``runs x 4`` uniform draws of ``(R_L, C_o, L, R_Co)``; the first row is the nominal
    point when ``runs == 1``."""
    p = cfg.plant
    if runs == 1:
        return np.array([[getattr(p, k) for k in DRAWN]])
    rng = np.random.default_rng(seed)
    lo = np.array([p.ranges.get(k, (getattr(p, k),) * 2)[0] for k in DRAWN])
    hi = np.array([p.ranges.get(k, (getattr(p, k),) * 2)[1] for k in DRAWN])
    return lo + (hi - lo) * rng.random((runs, len(DRAWN)))


def _diverged(m: RunMetrics, V_o: float) -> bool:
    return not all(math.isfinite(v) for v in m.row()) or m.steady_state_error > DIVERGENCE_LIMIT * V_o


def run_one(task: McTask) -> McRun:
    cfg = task.cfg
    params: BuckParams = cfg.plant.with_values(**dict(zip(DRAWN, task.values)))
    try:
        load, tr = run_load_step(cfg, task.policy, params, estimator=task.estimator)
        line, _ = run_line_step(cfg, task.policy, params, estimator=task.estimator)
    except SimulationDiverged as e:
        return McRun(task.index, task.values, "diverged", str(e), None, None, None)
    except Exception as e:  # recorded, not fatal
        return McRun(task.index, task.values, "error", f"{type(e).__name__}: {e}", None, None, None)
    status = "diverged" if _diverged(load, cfg.plant.V_o) or _diverged(line, cfg.plant.V_o) else "ok"
    return McRun(task.index, task.values, status, "", load, line, tr.v_o if task.keep_trace else None)


@dataclass(frozen=True)
class McResult:
    runs: tuple[McRun, ...]
    seed: int
    t: np.ndarray | None  # time axis of the kept traces

    @property
    def divergent(self) -> int:
        return sum(r.divergent for r in self.runs)

    @property
    def failed(self) -> int:
        return sum(r.status == "error" for r in self.runs)

    @property
    def sse_within_ripple_fraction(self) -> float:
        return sum(r.sse_within_ripple() for r in self.runs) / max(1, len(self.runs))

    def reports(self, band_factor: float = 1.5) -> tuple[MetricsReport, MetricsReport]:
        return (MetricsReport.of("load_step", [r.load for r in self.runs], band_factor),
                MetricsReport.of("line_step", [r.line for r in self.runs], band_factor))

    def write_runs_csv(self, path) -> None:
        head = ["run", *DRAWN, "status"]
        head += [f"load_{k}" for k in FIELDS] + [f"line_{k}" for k in FIELDS]
        head += ["sse_within_ripple", "error"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head)
            for r in self.runs:
                row = [r.index, *(repr(float(v)) for v in r.values), r.status]
                for m in (r.load, r.line):
                    row += [repr(v) for v in m.row()] if m is not None else [""] * len(FIELDS)
                row += [int(r.sse_within_ripple()), r.error]
                w.writerow(row)

    def write_aggregate_csv(self, path, band_factor: float = 1.5) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scenario", "statistic", *FIELDS])
            for rep in self.reports(band_factor):
                w.writerow([rep.scenario, "mean", *(repr(rep.aggregate.mean[k]) for k in FIELDS)])
                w.writerow([rep.scenario, "worst", *(repr(rep.aggregate.worst[k]) for k in FIELDS)])
            w.writerow(["all", "runs", len(self.runs)] + [""] * (len(FIELDS) - 1))
            w.writerow(["all", "divergent", self.divergent] + [""] * (len(FIELDS) - 1))
            w.writerow(["all", "failed", self.failed] + [""] * (len(FIELDS) - 1))
            w.writerow(["all", "sse_within_ripple_fraction", repr(self.sse_within_ripple_fraction)]
                       + [""] * (len(FIELDS) - 1))


def monte_carlo(cfg: ExperimentConfig, policy, estimator=None, runs: int | None = None,
                seed: int | None = None, workers: int | None = None,
                keep_traces: bool = False) -> McResult:
    runs = cfg.montecarlo.runs if runs is None else runs
    seed = cfg.montecarlo.seed if seed is None else seed
    workers = cfg.montecarlo.workers if workers is None else workers
    draws = draw_parameters(cfg, runs, seed)
    tasks = [McTask(i, cfg, policy, estimator, tuple(float(v) for v in row), keep_traces)
             for i, row in enumerate(draws)]
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_one, tasks, chunksize=max(1, runs // (4 * workers))))
    else:
        results = [run_one(t) for t in tasks]
    t = None
    if keep_traces:
        n = cfg.sim.warmup_periods + cfg.sim.after_periods
        t = np.arange(n * cfg.sim.sub_steps + 1) * (cfg.plant.T / cfg.sim.sub_steps)
    return McResult(tuple(results), seed, t)
