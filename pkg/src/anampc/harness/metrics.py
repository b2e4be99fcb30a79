"""Transient metrics computed from a fine-grained trace.

The settling band is ``band_factor`` times the output ripple (pk-pk) measured
over the ``ripple_periods`` periods before the event.  The steady value is the
mean of the last ``tail_periods`` period means.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FIELDS = ("undershoot", "overshoot_pct", "settling_time", "settling_cycles", "steady_state_error",
          "ripple", "band", "post_ripple")


@dataclass(frozen=True)
class RunMetrics:
    undershoot: float  # V, reference minus the lowest post-event output
    overshoot_pct: float  # % of the reference, above the steady value
    settling_time: float  # s after the event
    settling_cycles: float
    steady_state_error: float  # V, |steady value - reference|
    ripple: float  # V pk-pk before the event
    band: float
    post_ripple: float  # V pk-pk over the tail

    def row(self) -> list[float]:
        return [getattr(self, k) for k in FIELDS]


def transient_metrics(trace, t_event: float, V_ref: float, band_factor: float = 1.5,
                      ripple_periods: int = 5, tail_periods: int = 10) -> RunMetrics:
    n, T = trace.sub_steps, trace.T
    k_ev = int(round(t_event / T))
    if not ripple_periods <= k_ev <= trace.n_periods - tail_periods:
        raise ValueError("event too close to either end of the trace")
    v = trace.v_o
    pre = v[(k_ev - ripple_periods) * n:k_ev * n]
    ripple = float(pre.max() - pre.min())
    steady = float(trace.period_mean("v_o")[-tail_periods:].mean())
    after = v[k_ev * n:]
    band = band_factor * ripple
    out = np.flatnonzero(np.abs(after - steady) > band)
    # the sample after the last excursion is the first one that stays inside
    settle = 0.0 if out.size == 0 else (out[-1] + 1) * T / n
    tail = v[-tail_periods * n - 1:]
    return RunMetrics(
        undershoot=float(V_ref - after.min()),
        overshoot_pct=float(max(0.0, after.max() - steady) / V_ref * 100.0),
        settling_time=float(settle),
        settling_cycles=float(settle / T),
        steady_state_error=abs(steady - V_ref),
        ripple=ripple,
        band=band,
        post_ripple=float(tail.max() - tail.min()),
    )


@dataclass(frozen=True)
class Aggregate:
    count: int
    mean: dict
    worst: dict


# larger is worse for every field
def aggregate(runs) -> Aggregate:
    runs = [r for r in runs if r is not None]
    if not runs:
        nan = {k: math.nan for k in FIELDS}
        return Aggregate(0, nan, dict(nan))
    M = np.array([r.row() for r in runs])
    return Aggregate(len(runs), dict(zip(FIELDS, M.mean(axis=0).tolist())),
                     dict(zip(FIELDS, M.max(axis=0).tolist())))


@dataclass(frozen=True)
class MetricsReport:
    """Per-run metrics of one scenario plus aggregates."""

    scenario: str
    runs: tuple
    aggregate: Aggregate
    band_rule: str

    @classmethod
    def of(cls, scenario: str, runs, band_factor: float = 1.5) -> "MetricsReport":
        runs = tuple(runs)
        return cls(scenario, runs, aggregate(runs),
                   f"settling band = {band_factor!r} x pre-event ripple (pk-pk)")

    def text(self) -> str:
        a = self.aggregate
        lines = [f"scenario = {self.scenario}", f"runs = {len(self.runs)}", f"valid = {a.count}",
                 self.band_rule]
        for k in FIELDS:
            lines.append(f"{k}: mean = {a.mean[k]!r} worst = {a.worst[k]!r}")
        return "\n".join(lines) + "\n"


