"""Sweep of the MPC weights used to pick the shipped reference tuning.

A candidate is accepted when the reduced policy has the target number of
unsaturated regions, the saturated regions are affinely separable, and the
contraction certificate holds.  Every candidate is reported, accepted or not.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from ..stability import certify_buck
from .config import ExperimentConfig
from .pipeline import PipelineError, build_controller

DEFAULT_GRID = dict(Q=(1.0,), R=(1e-3, 3e-3, 1e-2, 3e-2, 1e-1), R_delta=(0.0, 1e-2, 1e-1))


@dataclass(frozen=True)
class Candidate:
    Q: float
    R: float
    R_delta: float
    regions: int  # unsaturated, after reduction; -1 when the build failed
    separable: bool
    L_f: float
    error: str = ""

    def accepted(self, target_regions: int = 2) -> bool:
        return self.regions == target_regions and self.separable and self.L_f < 1.0

    def line(self) -> str:
        return (f"Q={self.Q!r} R={self.R!r} R_delta={self.R_delta!r} regions={self.regions} "
                f"separable={self.separable} L_f={self.L_f!r}" + (f" error={self.error}" if self.error else ""))


def evaluate(cfg: ExperimentConfig, Q: float, R: float, R_delta: float) -> Candidate:
    c = replace(cfg, mpc=replace(cfg.mpc, Q=Q, R=R, R_delta=R_delta))
    try:
        *_, red = build_controller(c)
    except PipelineError as e:
        return Candidate(Q, R, R_delta, -1, False, float("nan"), str(e))
    pol = red.policy
    separable = pol.separator is not None
    L_f = certify_buck(pol, c.plant, c.Q_lyap_matrix).L_f
    return Candidate(Q, R, R_delta, len(pol.regions), separable, L_f)


def sweep(cfg: ExperimentConfig, grid: dict | None = None) -> list[Candidate]:
    g = grid or DEFAULT_GRID
    return [evaluate(cfg, *combo) for combo in itertools.product(g["Q"], g["R"], g["R_delta"])]


def main(argv=None) -> int:
    import argparse

    from .config import load

    ap = argparse.ArgumentParser(description="Sweep MPC weights for a converter config.")
    ap.add_argument("--config", required=True)
    ap.add_argument("--target-regions", type=int, default=2)
    a = ap.parse_args(argv)
    found = 0
    for c in sweep(load(a.config)):
        ok = c.accepted(a.target_regions)
        found += ok
        print(("accept " if ok else "reject ") + c.line())
    print(f"{found} accepted")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
