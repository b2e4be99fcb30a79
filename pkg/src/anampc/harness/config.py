"""INI experiment configuration with SI-suffixed numbers (``7.7u``, ``500k``)."""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, replace

import numpy as np

from ..buck.model import CERAMIC, ELECTROLYTIC, BuckParams, case_study

# decimal exponents, so "7.7u" parses exactly like 7.7e-6
SI = {"f": -15, "p": -12, "n": -9, "u": -6, "µ": -6, "m": -3, "": 0, "k": 3, "meg": 6, "M": 6, "G": 9}
_NUM = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(meg|[fpnuµmkMG]?)$")


class ConfigError(ValueError):
    pass


def parse_si(text: str) -> float:
    """``'7.7u'`` -> 7.7e-6; ``'2.2meg'`` -> 2.2e6.  ``m`` is milli, ``M``/``meg`` mega."""
    m = _NUM.match(text.strip())
    if not m:
        raise ConfigError(f"not a number: {text!r}")
    mant = m.group(1)
    if "e" in mant.lower():
        base, exp = re.split("[eE]", mant)
        return float(f"{base}e{int(exp) + SI[m.group(2)]}")
    return float(f"{mant}e{SI[m.group(2)]}")


def parse_list(text: str) -> list[float]:
    return [parse_si(t) for t in text.replace(",", " ").split()]


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class MpcSettings:
    Np: int = 3
    Nc: int = 2
    Q: float = 1.0
    R: float = 0.01
    R_delta: float = 0.01
    u_min: float = 0.0
    u_max: float = 1.0
    domain_lower: tuple[float, ...] = (-5.0, 4.0, -2.0, -12.0)
    domain_upper: tuple[float, ...] = (25.0, 6.0, 17.0, 12.0)


@dataclass(frozen=True)
class EstimatorSettings:
    enabled: bool = True
    R_L_hat: float | None = None  # None: mean of the R_L interval
    g_iL: float = 0.2
    g_io: float = 0.1
    R1: float = 10e3


@dataclass(frozen=True)
class SynthSettings:
    series: str = "none"
    R_f: float = 10e3
    R_g: float = 10e3
    V_batt: float = 1.0
    V_0: float = 1.0
    headroom: float = 0.7


@dataclass(frozen=True)
class SimSettings:
    sub_steps: int = 64
    latency: float = 0.0
    dcm: bool = False
    warmup_periods: int = 40
    after_periods: int = 60
    load_step: float | None = None  # None: I_o_max - V_o / R_L of each draw
    line_step: float = 10.0
    band_factor: float = 1.5


@dataclass(frozen=True)
class MonteCarloSettings:
    runs: int = 500
    seed: int = 1
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    plant: BuckParams
    capacitor: str
    mpc: MpcSettings = field(default_factory=MpcSettings)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    synth: SynthSettings = field(default_factory=SynthSettings)
    sim: SimSettings = field(default_factory=SimSettings)
    montecarlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    Q_lyap: tuple[float, ...] = (1.0, 0.0, 0.0, 1.0)

    def with_overrides(self, seed=None, runs=None, series=None, latency=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None or runs is not None:
            mc = self.montecarlo
            cfg = replace(cfg, montecarlo=replace(mc, seed=mc.seed if seed is None else int(seed),
                                                  runs=mc.runs if runs is None else int(runs)))
        if series is not None:
            cfg = replace(cfg, synth=replace(cfg.synth, series=series))
        if latency is not None:
            cfg = replace(cfg, sim=replace(cfg.sim, latency=float(latency)))
        return cfg

    @property
    def Q_lyap_matrix(self) -> np.ndarray:
        return np.array(self.Q_lyap, dtype=float).reshape(2, 2)


PLANT_KEYS = ("V_in", "R_L", "C_o", "L", "R_Co", "f_sw", "I_o_max", "V_o")


def _section(cp, name):
    return cp[name] if cp.has_section(name) else {}


def _fill(cls, sec, conv):
    kw = {}
    for k, v in sec.items():
        if k not in conv:
            raise ConfigError(f"unknown key '{k}' in [{cls.__name__}]")
        kw[k] = conv[k](v)
    return cls(**kw)


def loads(text: str, name: str = "config") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (V_in, R_L)
    cp.read_string(text)
    known = {"plant", "mpc", "estimator", "synth", "simulation", "montecarlo", "stability"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    if not cp.has_section("plant"):
        raise ConfigError("missing [plant] section")
    pl = cp["plant"]
    capacitor = pl.get("capacitor", CERAMIC).strip()
    if capacitor not in (CERAMIC, ELECTROLYTIC):
        raise ConfigError(f"capacitor must be {CERAMIC} or {ELECTROLYTIC}")
    vals, ranges = {}, {}
    for k in PLANT_KEYS:
        if k not in pl:
            raise ConfigError(f"[plant] needs {k}")
        vals[k] = parse_si(pl[k])
        if f"{k}_range" in pl:
            lo, hi = parse_list(pl[f"{k}_range"])
            ranges[k] = (lo, hi)
    unknown = set(pl) - set(PLANT_KEYS) - {f"{k}_range" for k in PLANT_KEYS} - {"capacitor"}
    if unknown:
        raise ConfigError(f"unknown [plant] keys: {', '.join(sorted(unknown))}")
    try:
        plant = BuckParams(**vals, ranges=ranges)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    tup = lambda s: tuple(parse_list(s))
    opt = lambda s: None if s.strip().lower() == "auto" else parse_si(s)
    mpc = _fill(MpcSettings, _section(cp, "mpc"), {
        "Np": int, "Nc": int, "Q": parse_si, "R": parse_si, "R_delta": parse_si,
        "u_min": parse_si, "u_max": parse_si, "domain_lower": tup, "domain_upper": tup})
    est = _fill(EstimatorSettings, _section(cp, "estimator"), {
        "enabled": parse_bool, "R_L_hat": opt, "g_iL": parse_si, "g_io": parse_si, "R1": parse_si})
    syn = _fill(SynthSettings, _section(cp, "synth"), {
        "series": lambda s: s.strip().lower(), "R_f": parse_si, "R_g": parse_si,
        "V_batt": parse_si, "V_0": parse_si, "headroom": parse_si})
    sim = _fill(SimSettings, _section(cp, "simulation"), {
        "sub_steps": int, "latency": parse_si, "dcm": parse_bool, "warmup_periods": int,
        "after_periods": int, "load_step": opt, "line_step": parse_si, "band_factor": parse_si})
    mc = _fill(MonteCarloSettings, _section(cp, "montecarlo"), {
        "runs": int, "seed": int, "workers": int})
    Q_lyap = (1.0, 0.0, 0.0, 1.0)
    if cp.has_section("stability"):
        st = cp["stability"]
        if set(st) - {"Q_lyap"}:
            raise ConfigError("[stability] only takes Q_lyap")
        if "Q_lyap" in st:
            Q_lyap = tup(st["Q_lyap"])
            if len(Q_lyap) != 4:
                raise ConfigError("Q_lyap needs 4 entries (2x2, row major)")
    if len(mpc.domain_lower) != 4 or len(mpc.domain_upper) != 4:
        raise ConfigError("the converter domain has 4 coordinates")
    if any(lo >= hi for lo, hi in zip(mpc.domain_lower, mpc.domain_upper)):
        raise ConfigError("domain_lower must lie below domain_upper in every coordinate")
    if syn.series not in ("e24", "e96", "none"):
        raise ConfigError("series must be e24, e96 or none")
    return ExperimentConfig(name, plant, capacitor, mpc, est, syn, sim, mc, Q_lyap)


def load(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    return loads(text, os.path.splitext(os.path.basename(str(path)))[0])


def reference_config(capacitor: str = CERAMIC) -> ExperimentConfig:
    """The shipped reference tuning; identical to ``configs/buck_<capacitor>.ini``."""
    return ExperimentConfig(f"buck_{capacitor}", case_study(capacitor), capacitor)
