"""Load- and line-step scenarios on the switched converter."""
from __future__ import annotations

from ..buck.model import BuckParams, equilibrium
from ..buck.simulate import Scenario, SimTrace, simulate
from .config import ExperimentConfig
from .metrics import RunMetrics, transient_metrics


def worst_case_load_step(params: BuckParams) -> float:
    """Largest extra load current: full rated current minus what ``R_L`` already draws."""
    return params.I_o_max - params.V_o / params.R_L


def _run(cfg: ExperimentConfig, policy, params: BuckParams, scenario: Scenario, estimator,
         kernel=None) -> tuple[RunMetrics, SimTrace]:
    sim = cfg.sim
    tr = simulate(params, scenario, policy=policy, estimator=estimator, sub_steps=sim.sub_steps,
                  latency=sim.latency, dcm=sim.dcm, V_in_nominal=cfg.plant.V_in, kernel=kernel)
    t_ev = sim.warmup_periods * params.T
    return transient_metrics(tr, t_ev, cfg.plant.V_o, sim.band_factor), tr


def _x0(params: BuckParams):
    return tuple(float(v) for v in equilibrium(params).x)


def run_load_step(cfg: ExperimentConfig, policy, params: BuckParams | None = None,
                  amplitude: float | None = None, estimator=None,
                  kernel=None) -> tuple[RunMetrics, SimTrace]:
    """Step ``i_o`` from 0 to ``amplitude`` (worst case by default) after the warm-up."""
    p = params or cfg.plant
    if amplitude is None:
        amplitude = cfg.sim.load_step if cfg.sim.load_step is not None else worst_case_load_step(p)
    n = cfg.sim.warmup_periods + cfg.sim.after_periods
    t_ev = cfg.sim.warmup_periods * p.T
    sc = Scenario.load_step(n, t_ev, 0.0, float(amplitude), cfg.plant.V_in, x0=_x0(p))
    return _run(cfg, policy, p, sc, estimator, kernel)


def run_line_step(cfg: ExperimentConfig, policy, params: BuckParams | None = None,
                  amplitude: float | None = None, estimator=None,
                  kernel=None) -> tuple[RunMetrics, SimTrace]:
    """Step ``V_in`` up by ``amplitude`` (10 V by default) after the warm-up, no extra load."""
    p = params or cfg.plant
    amplitude = cfg.sim.line_step if amplitude is None else amplitude
    n = cfg.sim.warmup_periods + cfg.sim.after_periods
    t_ev = cfg.sim.warmup_periods * p.T
    V0 = cfg.plant.V_in
    sc = Scenario.line_step(n, t_ev, V0, V0 + float(amplitude), 0.0, x0=_x0(p))
    return _run(cfg, policy, p, sc, estimator, kernel)
