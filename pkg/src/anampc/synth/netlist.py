"""Assemble adders, comparators, logic and the MUX into a SPICE-style netlist.

Line syntax::

    R<name> <node> <node> <ohms>
    C<name> <node> <node> <farads>
    V<name> <node+> 0 DC <volts>
    X<name> <nodes...> <MODEL>      OPAMP, COMPARATOR, NOT, BUF, AND<k>, OR<k>,
                                    TIE0, TIE1, MUX<k>, SAMPLEHOLD

Lines starting with ``*@`` are machine-readable annotations (external
ports, pre-rounding values, rounding error bounds); other ``*`` lines are
comments.  Node names are fixed by role (``region{j}_in{i}`` and so on) so
the same policy always produces the same text.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..estimator import synth_estimator_circuit
from ..polykit import vertices
from .adder import NEGATIVE, POSITIVE, AdderDesign, synth_adder
from .comparator import (HEADROOM, ComparatorDesign, divider_gains, row_alpha, separator_alpha,
                         share_comparators, synth_comparator)
from .logic import LogicNetwork, bound_channels, logic_for_policy
from .series import round_to_series

FORMAT_VERSION = 1


class DanglingNode(ValueError):
    pass


@dataclass(frozen=True)
class Component:
    name: str
    nodes: tuple[str, ...]
    model: str  # "R", "C", "V" or a subcircuit model name
    value: float | None = None
    nominal: float | None = None  # before rounding

    @property
    def rounding_error(self) -> float:
        if self.value is None or self.nominal is None:
            return 0.0
        return (self.value - self.nominal) / self.nominal

    def line(self) -> str:
        if self.model in ("R", "C"):
            return f"{self.name} {' '.join(self.nodes)} {self.value!r}"
        if self.model == "V":
            return f"{self.name} {self.nodes[0]} 0 DC {self.value!r}"
        return f"{self.name} {' '.join(self.nodes)} {self.model}"


@dataclass
class Netlist:
    components: list[Component] = field(default_factory=list)
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    channels: tuple[str, ...] = ()
    annotations: list[str] = field(default_factory=list)
    header: list[str] = field(default_factory=list)

    def count(self, model_prefix: str) -> int:
        return sum(1 for c in self.components if c.model.startswith(model_prefix))

    def check_nodes(self) -> None:
        uses: dict[str, int] = {}
        for c in self.components:
            for n in c.nodes:
                uses[n] = uses.get(n, 0) + 1
        marked = set(self.inputs) | set(self.outputs) | {"0"}
        bad = sorted(n for n, k in uses.items() if k < 2 and n not in marked)
        if bad:
            raise DanglingNode(f"nodes with a single connection: {', '.join(bad)}")
        vals = [c.value for c in self.components if c.model in ("R", "C")]
        if any(v is None or not v > 0 for v in vals):
            raise ValueError("component values must be positive")

    def text(self) -> str:
        self.check_nodes()
        out = [f"* anampc netlist v{FORMAT_VERSION}", *self.header,
               "*@ external " + " ".join(self.inputs), "*@ output " + " ".join(self.outputs),
               "*@ channels " + " ".join(self.channels)]
        for c in self.components:
            if c.nominal is not None and c.model in ("R", "C"):
                out.append(f"*@ nominal {c.name} {c.nominal!r} {c.rounding_error!r}")
            out.append(c.line())
        out.extend(self.annotations)
        out.append(".end")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class SynthesisSettings:
    R_f: float = 10e3
    R_g: float = 10e3
    V_batt: float = 1.0
    V_0: float = 1.0
    headroom: float = HEADROOM
    series: str = "none"
    estimator_R1: float = 10e3


@dataclass(frozen=True)
class SignalRef:
    comparator: int  # index into the unshared comparator list
    negated: bool


@dataclass
class Synthesis:
    adders: list[AdderDesign]
    comparators: list[ComparatorDesign]  # every inequality, with sharing links
    region_rows: list[list[int]]  # per region, indices into ``comparators``
    separator_index: int | None
    logic: LogicNetwork
    netlist: Netlist
    settings: SynthesisSettings
    estimator_circuit: object | None = None

    @property
    def n_comparators(self) -> int:
        return sum(1 for c in self.comparators if not c.shared)

    @property
    def n_opamps(self) -> int:
        return len(self.adders)

    @property
    def mux_channels(self) -> int:
        return len(self.logic.channels)

    def text(self) -> str:
        return self.netlist.text()


def _root(comps: list[ComparatorDesign], k: int) -> SignalRef:
    link = comps[k].link
    if link is None:
        return SignalRef(k, False)
    return SignalRef(link[0], link[1])


def synthesize(policy, settings: SynthesisSettings | None = None, estimator=None,
               param_names=None) -> Synthesis:
    """Compile a reduced scalar policy into adders, comparators, logic and a netlist."""
    st = settings or SynthesisSettings()
    if policy.n_u != 1:
        raise ValueError("circuit synthesis needs a scalar input")
    n_p = policy.n_p
    adders = [synth_adder(r.K[0], float(r.l[0]), st.R_f, st.V_batt, j)
              for j, r in enumerate(policy.regions)]
    raw, region_rows = [], []
    for j, r in enumerate(policy.regions):
        rows = []
        for i in range(r.poly.nrows):
            rows.append(len(raw))
            raw.append(synth_comparator(row_alpha(r.poly.A[i], r.poly.b[i], st.V_0), st.V_0, st.R_g,
                                        st.headroom, f"region{j}_row{i}"))
        region_rows.append(rows)
    lower, upper = bound_channels(policy)
    sep_idx = None
    if lower and upper:
        sep = policy.separator
        sep_idx = len(raw)
        raw.append(synth_comparator(separator_alpha(sep.a, sep.b_off, st.V_0), st.V_0, st.R_g,
                                    st.headroom, "separator"))
    comps = share_comparators(raw)
    logic = logic_for_policy(policy)
    est_circuit = None
    if estimator is not None:
        est_circuit = synth_estimator_circuit(estimator, st.estimator_R1)
    net = _build_netlist(policy, adders, comps, region_rows, sep_idx, logic, st, n_p,
                         est_circuit, param_names)
    return Synthesis(adders, comps, region_rows, sep_idx, logic, net, st, est_circuit)


class _Builder:
    def __init__(self, series: str):
        self.series = series
        self.comps: list[Component] = []
        self.gates: set[str] = set()

    def passive(self, kind: str, name: str, a: str, b: str, value: float) -> float:
        v, _ = round_to_series(value, self.series)
        self.comps.append(Component(f"{kind}{name}", (a, b), kind, v, value))
        return v

    def source(self, name: str, node: str, value: float) -> None:
        self.comps.append(Component(f"V{name}", (node, "0"), "V", float(value)))

    def sub(self, name: str, nodes, model: str) -> None:
        self.comps.append(Component(f"X{name}", tuple(nodes), model))

    def inverted(self, node: str) -> str:
        out = f"{node}_n"
        if out not in self.gates:
            self.gates.add(out)
            self.sub(f"not_{node}", (node, out), "NOT")
        return out

    def gate(self, name: str, kind: str, ins: list[str], out: str) -> None:
        if len(ins) == 1:
            self.sub(name, (ins[0], out), "BUF")
        else:
            self.sub(name, (*ins, out), f"{kind}{len(ins)}")


def _z_nodes(n_p: int) -> list[str]:
    return [f"p{i + 1}" for i in range(n_p)] + ["vref"]


def _build_netlist(policy, adders, comps, region_rows, sep_idx, logic, st, n_p, est_circuit,
                   param_names) -> Netlist:
    b = _Builder(st.series)
    inputs = [f"p{i + 1}" for i in range(n_p)]
    # the fixed references only appear when some divider or adder reads them
    if any(i.index == n_p for ad in adders for i in ad.inputs):
        b.source("BATT", "vbatt", st.V_batt)
    if any(idx == n_p for c in comps if not c.shared for idx, _ in (*c.plus, *c.minus)):
        b.source("REF", "vref", st.V_0)
    lower, upper = bound_channels(policy)
    if lower:
        b.source("ULOW", "ulow", policy.u_lower)
    if upper:
        b.source("UHIGH", "uhigh", policy.u_upper)
    notes = []
    # adders
    for ad in adders:
        j = ad.region
        node = {POSITIVE: f"region{j}_ninv", NEGATIVE: f"region{j}_inv"}
        for inp in ad.inputs:
            src = "vbatt" if inp.index == n_p else f"p{inp.index + 1}"
            b.passive("R", f"_region{j}_in{inp.index}", src, node[inp.side], inp.R)
        b.passive("R", f"_region{j}_f", node[NEGATIVE], f"region{j}_out", ad.R_f)
        if ad.R_dummy is not None:
            b.passive("R", f"_region{j}_dummy", node[ad.dummy_side], "0", ad.R_dummy)
        b.sub(f"_region{j}_amp", (node[POSITIVE], node[NEGATIVE], f"region{j}_out"), "OPAMP")
    # comparators that are not shared
    z = _z_nodes(n_p)
    for k, c in enumerate(comps):
        if c.shared:
            continue
        for tag, side in (("p", c.plus), ("m", c.minus)):
            term = f"cmp{k}_{tag}"
            for idx, R in side:
                b.passive("R", f"_cmp{k}_{tag}{idx}", z[idx], term, R)
            b.passive("R", f"_cmp{k}_{tag}g", term, "0", c.R_g)
        b.sub(f"_cmp{k}", (f"cmp{k}_p", f"cmp{k}_m", f"cmp{k}_out"), "COMPARATOR")

    def signal(k: int) -> str:
        ref = _root(comps, k)
        base = f"cmp{ref.comparator}_out"
        return b.inverted(base) if ref.negated else base

    # region flags r_i and the separator sign s
    for j, rows in enumerate(region_rows):
        if rows:
            b.gate(f"_r{j + 1}", "AND", [signal(k) for k in rows], f"r{j + 1}")
        else:
            b.sub(f"_r{j + 1}", (f"r{j + 1}",), "TIE1")
    if sep_idx is not None:
        b.gate("_s", "BUF", [signal(sep_idx)], "s")
    # select lines
    for q, sop in zip(logic.outputs, logic.expressions):
        if not sop:
            b.sub(f"_{q}", (q,), "TIE0")
            continue
        terms = []
        for t, imp in enumerate(sop):
            lits = [name if v else b.inverted(name) for name, v in zip(logic.inputs, imp) if v is not None]
            if not lits:
                b.sub(f"_{q}_t{t}", (f"{q}_t{t}",), "TIE1")
                terms.append(f"{q}_t{t}")
            elif len(lits) == 1:
                terms.append(lits[0])
            else:
                b.gate(f"_{q}_t{t}", "AND", lits, f"{q}_t{t}")
                terms.append(f"{q}_t{t}")
        b.gate(f"_{q}", "OR", terms, q)
    chan_nodes = [f"region{j}_out" for j in range(len(policy.regions))]
    if lower:
        chan_nodes.append("ulow")
    if upper:
        chan_nodes.append("uhigh")
    b.sub("_mux", (*logic.outputs, *chan_nodes, "mux_out"), f"MUX{len(chan_nodes)}")
    b.sub("_sh", ("mux_out", "u"), "SAMPLEHOLD")
    outputs = ["u"]
    # logic inputs the minimized network never reads stay observable as probes
    used = {n for sop in logic.expressions for imp in sop
            for n, v in zip(logic.inputs, imp) if v is not None}
    outputs += [n for n in logic.inputs if n not in used]
    # the estimator block has its own sensed inputs and output
    if est_circuit is not None:
        e = est_circuit
        b.passive("R", "_est1", "il_sns", "est_ninv", e.R1)
        b.passive("R", "_est2", "est_ninv", "0", e.R2)
        b.passive("R", "_est3", "est_inv", "0", e.R3)
        b.passive("R", "_est4", "vo_sns", "est_inv", e.R4)
        b.passive("C", "_est1", "vo_sns", "est_inv", e.C1)
        b.passive("R", "_est5", "est_inv", "io_est", e.R5)
        b.passive("C", "_est2", "est_inv", "io_est", e.C2)
        b.sub("_est", ("est_ninv", "est_inv", "io_est"), "OPAMP")
        inputs += ["il_sns", "vo_sns"]
        outputs.append("io_est")
    comps_by_name = {c.name: c for c in b.comps}
    notes.extend(_error_annotations(policy, adders, comps, comps_by_name, n_p, st))
    names = param_names or [f"p{i + 1}" for i in range(n_p)]
    header = ["* inputs: " + ", ".join(f"p{i + 1} = {nm}" for i, nm in enumerate(names)),
              f"* series: {st.series}", f"* MUX channels: {', '.join(logic.channels)}"]
    header += [f"* {line}" for line in logic.text()]
    return Netlist(b.comps, tuple(inputs), tuple(outputs), tuple(chan_nodes), notes, header)


def _error_annotations(policy, adders, comps, by_name, n_p, st) -> list[str]:
    """Rounding error bounds: adder gain errors and comparator decision bands over the domain."""
    V = vertices(policy.domain)
    Zv = np.hstack([V, np.full((len(V), 1), st.V_0)])
    lines = []
    for ad in adders:
        j = ad.region
        vals = {i.index: by_name[f"R_region{j}_in{i.index}"].value for i in ad.inputs}
        vals["f"] = by_name[f"R_region{j}_f"].value
        if ad.R_dummy is not None:
            vals["dummy"] = by_name[f"R_region{j}_dummy"].value
        K = policy.regions[j]
        err = ad.realized_gains(vals) - np.append(K.K[0], K.l[0])
        bound = float(np.max(np.abs(np.hstack([V, np.ones((len(V), 1))]) @ err)))
        lines.append(f"*@ adder {j} gain_error " + " ".join(repr(float(v)) for v in err)
                     + f" bound {bound!r}")
    for k, c in enumerate(comps):
        if c.shared:
            continue
        coef = np.zeros(n_p + 1)
        for tag, side, sign in (("p", c.plus, 1.0), ("m", c.minus, -1.0)):
            if not side:
                continue
            Rs = [by_name[f"R_cmp{k}_{tag}{idx}"].value for idx, _ in side]
            gains = divider_gains(Rs, by_name[f"R_cmp{k}_{tag}g"].value)
            for (idx, _), g in zip(side, gains):
                coef[idx] = sign * g
        err = coef - np.sign(c.alpha) * c.gamma
        band = float(np.max(np.abs(Zv @ err)))
        lines.append(f"*@ comparator {k} coef " + " ".join(repr(float(v)) for v in np.sign(c.alpha) * c.gamma)
                     + f" band {band!r}")
    return lines
