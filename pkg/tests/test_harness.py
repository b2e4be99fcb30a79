import os
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from anampc.buck.simulate import SimTrace
from anampc.harness import (ConfigError, MetricsReport, aggregate, draw_parameters, emit_plots,
                            empty_plot, ensemble_plot, histogram, line_plot, load, loads,
                            monte_carlo, parse_si, reference_config, run_line_step, run_load_step,
                            run_pipeline, transient_metrics)
from anampc.harness.cli import EXIT_STAGE, EXIT_UNCERTIFIED, main
from anampc.harness.pipeline import PipelineError
from anampc.harness.tuning import evaluate

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


# config

@pytest.mark.parametrize("text,value", [("7.7u", 7.7e-6), ("500k", 5e5), ("5m", 5e-3),
                                        ("2.2meg", 2.2e6), ("1M", 1e6), ("238.77u", 238.77e-6),
                                        ("-12", -12.0), ("1e-3k", 1.0), (".5", 0.5)])
def test_parse_si(text, value):
    assert parse_si(text) == value


@pytest.mark.parametrize("bad", ["", "1x", "k", "1.2.3", "5 m"])
def test_parse_si_rejects(bad):
    with pytest.raises(ConfigError):
        parse_si(bad)


@pytest.mark.parametrize("cap", ["ceramic", "electrolytic"])
def test_shipped_configs_equal_reference(cap):
    cfg = load(CONFIGS / f"buck_{cap}.ini")
    assert cfg == reference_config(cap)


def _ini(**edits):
    text = (CONFIGS / "buck_ceramic.ini").read_text()
    for old, new in edits.items():
        assert old in text
        text = text.replace(old, new)
    return text


@pytest.mark.parametrize("edit", [
    {"[plant]": "[plant]\nbogus = 1"},
    {"[mpc]": "[mpc]\nNq = 3"},
    {"V_in = 50\n": ""},
    {"capacitor = ceramic": "capacitor = tantalum"},
    {"series = none": "series = e12"},
    {"domain_lower = -5 4 -2 -12": "domain_lower = -5 4 -2"},
    {"domain_lower = -5 4 -2 -12": "domain_lower = 30 4 -2 -12"},
    {"Q_lyap = 1 0 0 1": "Q_lyap = 1 0 1"},
    {"enabled = true": "enabled = maybe"},
    {"[stability]": "[extra]\nx = 1\n[stability]"},
    {"L = 7.7u": "L = -7.7u"},
])
def test_config_errors(edit):
    with pytest.raises(ConfigError):
        loads(_ini(**edit))


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "nope.ini")


def test_overrides():
    cfg = reference_config().with_overrides(seed=9, runs=3, series="e96", latency=1e-7)
    assert (cfg.montecarlo.seed, cfg.montecarlo.runs) == (9, 3)
    assert cfg.synth.series == "e96" and cfg.sim.latency == 1e-7
    assert reference_config().with_overrides() == reference_config()


# metrics on a synthetic trace with known answers

def _synthetic(n=4, periods=30, dip=4.7, dip_samples=8, k_ev=10):
    N = n * periods + 1
    v = 5.0 + 0.005 * (-1.0) ** np.arange(N)
    v[k_ev * n:k_ev * n + dip_samples] = dip
    z = np.zeros(N)
    zp = np.zeros(periods)
    return SimTrace(np.arange(N) / n, z, v, v, z, z, z, z, zp, zp, np.zeros((periods, 4)), 1.0, n)


def test_metrics_synthetic_dip():
    m = transient_metrics(_synthetic(), 10.0, 5.0)
    assert m.ripple == pytest.approx(0.01)
    assert m.band == pytest.approx(0.015)
    assert m.undershoot == pytest.approx(0.3)
    assert m.settling_cycles == pytest.approx(2.0)
    assert m.steady_state_error == pytest.approx(0.0, abs=1e-12)
    assert m.overshoot_pct == pytest.approx(0.1)


def test_metrics_no_excursion_settles_at_once():
    m = transient_metrics(_synthetic(dip=5.005, dip_samples=1), 10.0, 5.0)
    assert m.settling_time == 0.0


def test_metrics_event_bounds():
    with pytest.raises(ValueError):
        transient_metrics(_synthetic(), 2.0, 5.0)
    with pytest.raises(ValueError):
        transient_metrics(_synthetic(), 25.0, 5.0)


def test_aggregate_skips_missing_runs():
    a = transient_metrics(_synthetic(), 10.0, 5.0)
    b = transient_metrics(_synthetic(dip=4.9), 10.0, 5.0)
    agg = aggregate([a, None, b])
    assert agg.count == 2
    assert agg.mean["undershoot"] == pytest.approx(0.2)
    assert agg.worst["undershoot"] == pytest.approx(0.3)
    assert aggregate([None]).count == 0
    assert "undershoot" in MetricsReport.of("x", [a, b]).text()


# experiments on the reference design

@pytest.fixture(scope="module")
def ref():
    cfg = reference_config()
    return cfg, run_pipeline(cfg, check_samples=0)


def test_zero_load_step_stays_on_orbit(ref):
    cfg, res = ref
    m, _ = run_load_step(cfg, res.policy, amplitude=0.0, estimator=res.estimator)
    assert m.settling_cycles == 0.0
    assert m.undershoot <= m.ripple
    assert m.post_ripple == pytest.approx(m.ripple, rel=1e-6)


def test_line_step_overshoot_grows_with_amplitude(ref):
    cfg, res = ref
    over = [run_line_step(cfg, res.policy, amplitude=a, estimator=res.estimator)[0].overshoot_pct
            for a in (2.0, 5.0, 10.0)]
    assert over[0] < over[1] < over[2]


# Monte Carlo

def test_draws_are_seeded_and_in_range():
    cfg = reference_config()
    a = draw_parameters(cfg, 50, 4)
    np.testing.assert_array_equal(a, draw_parameters(cfg, 50, 4))
    assert not np.array_equal(a, draw_parameters(cfg, 50, 5))
    for j, k in enumerate(("R_L", "C_o", "L", "R_Co")):
        lo, hi = cfg.plant.ranges[k]
        assert np.all((lo <= a[:, j]) & (a[:, j] <= hi))


def test_single_run_is_nominal():
    cfg = reference_config()
    p = cfg.plant
    np.testing.assert_array_equal(draw_parameters(cfg, 1, 0), [[p.R_L, p.C_o, p.L, p.R_Co]])


def test_monte_carlo_independent_of_worker_count(ref):
    cfg, res = ref
    one = monte_carlo(cfg, res.policy, res.estimator, runs=4, seed=2, workers=1)
    four = monte_carlo(cfg, res.policy, res.estimator, runs=4, seed=2, workers=4)
    assert [r.values for r in one.runs] == [r.values for r in four.runs]
    assert [r.load.row() for r in one.runs] == [r.load.row() for r in four.runs]
    assert [r.line.row() for r in one.runs] == [r.line.row() for r in four.runs]
    assert one.divergent == 0 and one.failed == 0


def test_monte_carlo_csv_is_reproducible(ref, tmp_path):
    cfg, res = ref
    paths = []
    for k in range(2):
        mc = monte_carlo(cfg, res.policy, res.estimator, runs=2, seed=8)
        path = tmp_path / f"runs{k}.csv"
        mc.write_runs_csv(path)
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]


# plots

def test_line_plot_single_polyline():
    svg = line_plot(np.linspace(0, 1, 5000), np.sin(np.linspace(0, 9, 5000)))
    assert svg.count("<polyline") == 1
    assert svg.startswith("<svg") or svg.startswith("<?xml")


def test_ensemble_plot_draws_envelope():
    t = np.linspace(0, 1, 100)
    Y = np.vstack([np.sin(t) + 0.01 * k for k in range(5)])
    svg = ensemble_plot(t, Y)
    assert svg.count("<polygon") == 1 and svg.count("<polyline") == 1
    assert "5 runs" in svg


def test_empty_inputs_give_placeholder():
    assert "no samples" in line_plot([], [])
    assert "no traces" in ensemble_plot([], [])
    assert "no data" in histogram([None, float("nan")], "h", "x")
    assert "caption" in empty_plot("t", "caption")


def test_emit_plots_writes_files(tmp_path):
    m = transient_metrics(_synthetic(), 10.0, 5.0)
    rep = MetricsReport.of("load_step", [m, m])
    t = np.arange(121) / 4
    paths = emit_plots(str(tmp_path), [np.ones(121), np.zeros(121)], [rep], t)
    names = sorted(os.path.basename(p) for p in paths)
    assert "vo_ensemble.svg" in names and "load_step_undershoot.svg" in names


# pipeline, tuning, CLI

def test_empty_domain_is_a_stage_error():
    cfg = reference_config()
    bad = replace(cfg, mpc=replace(cfg.mpc, domain_lower=(5.0, 4.0, -2.0, -12.0),
                                   domain_upper=(-5.0, 6.0, 17.0, 12.0)))
    with pytest.raises(PipelineError) as e:
        run_pipeline(bad, check_samples=0)
    assert e.value.stage == "mp-qp"


def test_full_control_horizon_builds():
    cfg = reference_config()
    res = run_pipeline(replace(cfg, mpc=replace(cfg.mpc, Nc=cfg.mpc.Np)), check_samples=0)
    assert len(res.policy.regions) >= 1


def test_tuning_reports_reference_candidate():
    c = evaluate(reference_config(), 1.0, 0.01, 0.01)
    assert c.regions == 2 and c.separable
    assert c.L_f > 1.0 and not c.accepted()
    assert "regions=2" in c.line()


def test_cli_compile_uncertified_exit(tmp_path, capsys):
    code = main(["compile", "--out", str(tmp_path)])
    assert code == EXIT_UNCERTIFIED
    out = capsys.readouterr().out
    assert "unsaturated regions = 2" in out and "certified = False" in out
    for name in ("policy.txt", "netlist.cir", "certificate.txt", "summary.txt"):
        assert (tmp_path / name).exists()


def test_cli_bad_config_exit(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[plant]\nV_in = fifty\n")
    assert main(["compile", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_STAGE
    assert "config error" in capsys.readouterr().err


def test_cli_rejects_unknown_series():
    with pytest.raises(SystemExit):
        main(["compile", "--series", "e12"])


def test_cli_simulate_and_report(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "load_step.csv").exists() and (tmp_path / "line_step_vo.svg").exists()
    assert main(["report", "--out", str(tmp_path)]) == 0
    report = (tmp_path / "report.md").read_text()
    assert "simulate_metrics.txt" in report and "(not generated)" in report
