"""Command line driver: ``anampc {compile,simulate,montecarlo,verify,report}``."""
from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, ExperimentConfig, load, reference_config
from .pipeline import PipelineError, run_pipeline

EXIT_CHECKS = 1
EXIT_STAGE = 2
EXIT_UNCERTIFIED = 3


def _config(a) -> ExperimentConfig:
    cfg = load(a.config) if a.config else reference_config()
    return cfg.with_overrides(seed=a.seed, runs=getattr(a, "runs", None), series=a.series,
                              latency=a.latency)


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_compile(a) -> int:
    cfg = _config(a)
    res = run_pipeline(cfg, a.out)
    sys.stdout.write(res.summary())
    if not all(res.checks.values()):
        return EXIT_CHECKS
    return 0 if res.certificate.verdict else EXIT_UNCERTIFIED


def cmd_simulate(a) -> int:
    from .experiments import run_line_step, run_load_step
    from .plots import line_plot

    cfg = _config(a)
    res = run_pipeline(cfg, check_samples=0)
    os.makedirs(a.out, exist_ok=True)
    lines = [f"latency = {cfg.sim.latency!r}", f"estimator = {cfg.estimator.enabled}"]
    for name, fn in (("load_step", run_load_step), ("line_step", run_line_step)):
        m, tr = fn(cfg, res.policy, estimator=res.estimator)
        tr.write_csv(os.path.join(a.out, f"{name}.csv"))
        _write(os.path.join(a.out, f"{name}_vo.svg"), line_plot(tr.t, tr.v_o, f"{name}: output voltage"))
        lines.append(f"[{name}]")
        lines += [f"{k} = {v!r}" for k, v in zip(m.__dataclass_fields__, m.row())]
    lines.append(f"settling band = {cfg.sim.band_factor!r} x pre-event ripple (pk-pk)")
    text = "\n".join(lines) + "\n"
    _write(os.path.join(a.out, "simulate_metrics.txt"), text)
    sys.stdout.write(text)
    return 0


def cmd_montecarlo(a) -> int:
    from .montecarlo import monte_carlo
    from .plots import emit_plots

    cfg = _config(a)
    res = run_pipeline(cfg, check_samples=0)
    mc = monte_carlo(cfg, res.policy, res.estimator, keep_traces=True)
    os.makedirs(a.out, exist_ok=True)
    mc.write_runs_csv(os.path.join(a.out, "mc_runs.csv"))
    mc.write_aggregate_csv(os.path.join(a.out, "mc_aggregate.csv"), cfg.sim.band_factor)
    reports = mc.reports(cfg.sim.band_factor)
    traces = [r.v_o for r in mc.runs if r.v_o is not None]
    emit_plots(a.out, traces, reports, mc.t)
    text = "".join(r.text() for r in reports)
    text += (f"seed = {mc.seed}\nruns = {len(mc.runs)}\ndivergent = {mc.divergent}\n"
             f"failed = {mc.failed}\nsse_within_ripple_fraction = {mc.sse_within_ripple_fraction!r}\n")
    _write(os.path.join(a.out, "mc_summary.txt"), text)
    sys.stdout.write(text)
    return 0


def cmd_verify(a) -> int:
    from ..stability import empirical_lipschitz, lemma1_check
    from .pipeline import run_checks

    cfg = _config(a)
    res = run_pipeline(cfg, check_samples=0)
    checks = run_checks(res, 10_000)
    lemma = lemma1_check(seed=cfg.montecarlo.seed)
    lip = empirical_lipschitz(res.policy, cfg.plant, res.certificate.P, seed=cfg.montecarlo.seed)
    checks["lemma_bound"] = lemma.ok
    checks["empirical_lipschitz_below_L_f"] = lip.value <= res.certificate.L_f
    checks["contraction_certificate"] = res.certificate.verdict
    lines = [f"{'PASS' if v else 'FAIL'} {k}" for k, v in checks.items()]
    text = "\n".join(lines) + "\n"
    if a.out:
        os.makedirs(a.out, exist_ok=True)
        _write(os.path.join(a.out, "verify.txt"), text)
    sys.stdout.write(text)
    return 0 if all(checks.values()) else EXIT_CHECKS


REPORT_PARTS = ("summary.txt", "certificate.txt", "simulate_metrics.txt", "mc_summary.txt", "verify.txt")


def cmd_report(a) -> int:
    cfg = _config(a)
    if not os.path.exists(os.path.join(a.out, "summary.txt")):
        run_pipeline(cfg, a.out)
    parts = [f"# report for {cfg.name}", ""]
    for name in REPORT_PARTS:
        path = os.path.join(a.out, name)
        if not os.path.exists(path):
            parts += [f"## {name}", "(not generated)", ""]
            continue
        with open(path) as fh:
            parts += [f"## {name}", "```", fh.read().rstrip("\n"), "```", ""]
    svgs = sorted(f for f in os.listdir(a.out) if f.endswith(".svg"))
    parts += ["## plots"] + [f"![{f}]({f})" for f in svgs] + [""]
    text = "\n".join(parts)
    _write(os.path.join(a.out, "report.md"), text)
    print(os.path.join(a.out, "report.md"))
    return 0


def parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="INI experiment config (default: built-in ceramic reference)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="Monte Carlo / sampling seed")
    common.add_argument("--series", choices=("e24", "e96", "none"), default=None,
                        help="round resistors to a preferred-value series")
    common.add_argument("--latency", type=float, default=None, metavar="SECONDS",
                        help="measurement latency before each period")
    ap = argparse.ArgumentParser(prog="anampc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, hlp in (("compile", cmd_compile, "controller, policy, netlist and certificate"),
                          ("simulate", cmd_simulate, "nominal load and line steps"),
                          ("montecarlo", cmd_montecarlo, "seeded parameter sweep"),
                          ("verify", cmd_verify, "invariant suites"),
                          ("report", cmd_report, "collect artifacts into report.md")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        if name == "montecarlo":
            p.add_argument("--runs", type=int, default=None, help="number of Monte Carlo runs")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    a = parser().parse_args(argv)
    try:
        return a.func(a)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_STAGE
    except PipelineError as e:
        print(f"pipeline failed: {e}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    raise SystemExit(main())
