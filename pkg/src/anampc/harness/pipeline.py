"""Compile a configuration into controller, reduced policy, netlist and certificate."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .. import serialize
from ..buck.model import BuckParams, Equilibrium, equilibrium, linearize
from ..empc import PwaController, solve_mpqp, verify_against_qp
from ..estimator import IoEstimator, design_io_estimator, optimal_RL
from ..mpc import AffineModel, MpcSpec, QpMpc, condense, input_box, move_block
from ..polykit import Polytope
from ..polykit.polytope import sample_uniform
from ..reduce import FinalPolicy, Reduction, reduce_controller
from ..stability import StabilityCertificate, certify_buck
from ..synth import Synthesis, SynthesisSettings, explain_deviations, synthesize
from .config import ExperimentConfig

PARAM_NAMES = ("i_L", "v_C", "i_o", "dV_in")


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    config: ExperimentConfig
    params: BuckParams
    equilibrium: Equilibrium
    model: AffineModel
    qp: QpMpc
    controller: PwaController
    reduction: Reduction
    estimator: IoEstimator | None
    synthesis: Synthesis
    certificate: StabilityCertificate
    checks: dict = field(default_factory=dict)

    @property
    def policy(self) -> FinalPolicy:
        return self.reduction.policy

    @property
    def ok(self) -> bool:
        """Every structural check passed and the certificate holds."""
        return all(self.checks.values()) and self.certificate.verdict

    def summary(self) -> str:
        pol = self.policy
        sep = pol.separator
        lines = [
            f"config = {self.config.name}",
            f"capacitor = {self.config.capacitor}",
            f"equilibrium duty = {self.equilibrium.D!r}",
            f"critical regions = {len(self.controller.regions)}",
            f"regions after merging = {len(self.reduction.merged.regions)}",
            f"unsaturated regions = {len(pol.regions)}",
            "rows per region = " + " ".join(str(r.poly.nrows) for r in pol.regions),
            f"separator = {'none' if sep is None else sep.kind}",
            f"comparators = {self.synthesis.n_comparators}",
            f"op-amps = {self.synthesis.n_opamps}",
            f"mux channels = {self.synthesis.mux_channels}",
            f"resistor series = {self.config.synth.series}",
            f"L_f = {self.certificate.L_f!r}",
            f"certified = {self.certificate.verdict}",
        ]
        lines += [f"check {k} = {'pass' if v else 'FAIL'}" for k, v in self.checks.items()]
        return "\n".join(lines) + "\n"


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except Exception as e:  # surfaced with the stage name
        raise PipelineError(name, e) from e


def mpc_spec(cfg: ExperimentConfig, eq: Equilibrium) -> MpcSpec:
    m = cfg.mpc
    Hu, hu = input_box(m.u_min, m.u_max)
    # blocking to Nc happens on the condensed QP
    return MpcSpec(m.Np, m.Np, m.Q, m.R, m.R_delta, [cfg.plant.V_o], [eq.D], eq.x, Hu=Hu, hu=hu)


def build_estimator(cfg: ExperimentConfig, params: BuckParams | None = None) -> IoEstimator | None:
    e = cfg.estimator
    if not e.enabled:
        return None
    p = params or cfg.plant
    R_L_hat = e.R_L_hat
    if R_L_hat is None:
        lo, hi = cfg.plant.ranges.get("R_L", (cfg.plant.R_L, cfg.plant.R_L))
        R_L_hat = optimal_RL(lo, hi)
    return design_io_estimator(p, R_L_hat, e.g_iL, e.g_io, cfg.plant.T / cfg.sim.sub_steps)


def build_controller(cfg: ExperimentConfig):
    p = cfg.plant
    eq = _stage("model", equilibrium, p)
    model = _stage("model", linearize, p, eq)
    qp = _stage("mpc", lambda: move_block(condense(model, mpc_spec(cfg, eq)), cfg.mpc.Nc))
    domain = Polytope.box(np.array(cfg.mpc.domain_lower), np.array(cfg.mpc.domain_upper))
    ctrl = _stage("mp-qp", solve_mpqp, qp, domain)
    if not ctrl.regions:
        raise PipelineError("mp-qp", ValueError("no full-dimensional critical region on the domain"))
    red = _stage("reduction", reduce_controller, ctrl, cfg.mpc.u_min, cfg.mpc.u_max)
    return eq, model, qp, ctrl, red


def run_pipeline(cfg: ExperimentConfig, out: str | None = None, check_samples: int = 2000) -> PipelineResult:
    """Run every stage; write ``policy.txt``, ``netlist.cir``, ``certificate.txt`` and
    ``summary.txt`` to ``out`` when given."""
    eq, model, qp, ctrl, red = build_controller(cfg)
    est = _stage("estimator", build_estimator, cfg)
    st = cfg.synth
    settings = SynthesisSettings(st.R_f, st.R_g, st.V_batt, st.V_0, st.headroom, st.series,
                                 cfg.estimator.R1)
    syn = _stage("synthesis", synthesize, red.policy, settings, est, PARAM_NAMES)
    cert = _stage("certificate", certify_buck, red.policy, cfg.plant, cfg.Q_lyap_matrix)
    res = PipelineResult(cfg, cfg.plant, eq, model, qp, ctrl, red, est, syn, cert)
    if check_samples:
        res.checks = _stage("checks", run_checks, res, check_samples)
    if out is not None:
        _stage("output", write_artifacts, res, out)
    return res


def run_checks(res: PipelineResult, samples: int) -> dict:
    rng = np.random.default_rng(12345)
    ctrl, pol = res.controller, res.policy
    qp_rep = verify_against_qp(ctrl, res.qp, samples, rng)
    P = sample_uniform(ctrl.domain, samples, rng)
    red_err = float(np.abs(pol.eval_many(P) - ctrl.eval_many(P)).max())
    dev = explain_deviations(pol, res.synthesis.text(), P[:1000])
    return {
        "explicit_vs_qp": qp_rep.ok,
        "reduction_exact": red_err <= 1e-6,
        "logic_table": res.synthesis.logic.check() == 0,
        "netlist_deviations_explained": dev.ok,
    }


def write_artifacts(res: PipelineResult, out: str) -> dict:
    os.makedirs(out, exist_ok=True)
    files = {
        "policy.txt": serialize.dumps(res.policy),
        "controller.txt": serialize.dumps(res.controller),
        "netlist.cir": res.synthesis.text(),
        "certificate.txt": res.certificate.report(),
        "summary.txt": res.summary(),
    }
    paths = {}
    for name, text in files.items():
        path = os.path.join(out, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        paths[name] = path
    return paths
