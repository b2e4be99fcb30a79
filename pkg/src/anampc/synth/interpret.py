"""Evaluate a netlist text with ideal components.

Resistors, DC sources and ideal op-amps (``v+ = v-``, unlimited output) form
a linear network solved by modified nodal analysis.  Capacitors are open, so
only the static behaviour is reproduced.  Comparators output
``v+ >= v-``; gates and the MUX are evaluated in dependency order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

DIGITAL = re.compile(r"^(NOT|BUF|AND\d+|OR\d+|TIE0|TIE1)$")


class NetlistError(ValueError):
    pass


@dataclass(frozen=True)
class _Elem:
    name: str
    nodes: tuple[str, ...]
    model: str
    value: float | None


def parse(text: str):
    elems, meta = [], {"external": [], "output": [], "channels": [], "adder": {}, "comparator": {}}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line == ".end":
            continue
        if line.startswith("*@"):
            tok = line[2:].split()
            if tok[0] in ("external", "output", "channels"):
                meta[tok[0]] = tok[1:]
            elif tok[0] == "adder":
                i = tok.index("bound")
                meta["adder"][int(tok[1])] = (np.array([float(v) for v in tok[3:i]]), float(tok[i + 1]))
            elif tok[0] == "comparator":
                i = tok.index("band")
                meta["comparator"][int(tok[1])] = (np.array([float(v) for v in tok[3:i]]), float(tok[i + 1]))
            continue
        if line.startswith("*"):
            continue
        tok = line.split()
        head = tok[0][0].upper()
        if head in "RC":
            elems.append(_Elem(tok[0], (tok[1], tok[2]), head, float(tok[3])))
        elif head == "V":
            if tok[3].upper() != "DC":
                raise NetlistError(f"unsupported source line: {line}")
            elems.append(_Elem(tok[0], (tok[1], tok[2]), "V", float(tok[4])))
        elif head == "X":
            elems.append(_Elem(tok[0], tuple(tok[1:-1]), tok[-1].upper(), None))
        else:
            raise NetlistError(f"unsupported element: {line}")
    return elems, meta


class NetlistInterpreter:
    def __init__(self, text: str):
        self.elems, self.meta = parse(text)
        self.inputs = list(self.meta["external"])
        self._build_mna()
        self._order_digital()

    def _build_mna(self) -> None:
        analog = [e for e in self.elems if e.model in ("R", "V", "OPAMP")]
        nodes = []
        for e in analog:
            for n in e.nodes:
                if n != "0" and n not in nodes:
                    nodes.append(n)
        for n in self.inputs:
            if n not in nodes:
                nodes.append(n)
        idx = {n: i for i, n in enumerate(nodes)}
        sources = [e for e in analog if e.model == "V"]
        amps = [e for e in analog if e.model == "OPAMP"]
        nn = len(nodes)
        # one branch current per fixed source, per external input and per op-amp output
        size = nn + len(sources) + len(self.inputs) + len(amps)
        M = np.zeros((size, size))
        rhs = np.zeros(size)

        def stamp_v(row, a, b):
            if a != "0":
                M[idx[a], row] += 1.0
                M[row, idx[a]] += 1.0
            if b != "0":
                M[idx[b], row] -= 1.0
                M[row, idx[b]] -= 1.0

        for e in analog:
            if e.model == "R":
                g = 1.0 / e.value
                a, b = e.nodes
                for x, y, s in ((a, a, g), (b, b, g), (a, b, -g), (b, a, -g)):
                    if x != "0" and y != "0":
                        M[idx[x], idx[y]] += s
        row = nn
        for e in sources:
            stamp_v(row, e.nodes[0], e.nodes[1])
            rhs[row] = e.value
            row += 1
        self._input_rows = []
        for n in self.inputs:
            stamp_v(row, n, "0")
            self._input_rows.append(row)
            row += 1
        for e in amps:
            plus, minus, out = e.nodes
            # output current enters KCL at the output node; constraint v+ - v- = 0
            M[idx[out], row] += 1.0
            M[row, idx[plus]] += 1.0
            M[row, idx[minus]] -= 1.0
            row += 1
        if np.linalg.matrix_rank(M) < size:
            raise NetlistError("network equations are singular")
        self._M, self._rhs, self._idx = M, rhs, idx

    def _order_digital(self) -> None:
        self._cmp = [e for e in self.elems if e.model == "COMPARATOR"]
        gates = [e for e in self.elems if DIGITAL.match(e.model)]
        known = {e.nodes[2] for e in self._cmp}
        order = []
        while gates:
            ready = [g for g in gates if all(n in known for n in _gate_inputs(g))]
            if not ready:
                raise NetlistError("combinational loop or undriven logic input")
            for g in ready:
                order.append(g)
                known.add(g.nodes[-1])
                gates.remove(g)
        self._gates = order
        mux = [e for e in self.elems if e.model.startswith("MUX")]
        if len(mux) != 1:
            raise NetlistError("expected exactly one MUX")
        self._mux = mux[0]
        self._mux_k = int(self._mux.model[3:])
        self._sh = {e.nodes[1]: e.nodes[0] for e in self.elems if e.model == "SAMPLEHOLD"}

    def node_voltages(self, values) -> np.ndarray:
        """Analog node voltages for each row of external input values."""
        V = np.atleast_2d(np.asarray(values, dtype=float))
        if V.shape[1] != len(self.inputs):
            raise NetlistError(f"expected {len(self.inputs)} external inputs")
        R = np.tile(self._rhs, (V.shape[0], 1))
        R[:, self._input_rows] = V
        return np.linalg.solve(self._M, R.T).T

    def evaluate(self, values, probe: str = "u") -> np.ndarray:
        """Output voltage (the held MUX output by default) per row of inputs."""
        X = self.node_voltages(values)
        v = lambda n: np.zeros(X.shape[0]) if n == "0" else X[:, self._idx[n]]
        logic = {}
        for c in self._cmp:
            logic[c.nodes[2]] = v(c.nodes[0]) >= v(c.nodes[1])
        for g in self._gates:
            logic[g.nodes[-1]] = _gate(g, logic, X.shape[0])
        k = self._mux_k
        nsel = len(self._mux.nodes) - k - 1
        sel = np.zeros(X.shape[0], dtype=int)
        for b in range(nsel):
            sel |= logic[self._mux.nodes[b]].astype(int) << b
        if np.any(sel >= k):
            raise NetlistError("select lines address a missing MUX channel")
        chans = np.column_stack([v(n) for n in self._mux.nodes[nsel:nsel + k]])
        mux_out = chans[np.arange(X.shape[0]), sel]
        if probe == self._mux.nodes[-1] or self._sh.get(probe) == self._mux.nodes[-1]:
            return mux_out
        if probe in logic:
            return logic[probe]
        return v(probe)

    def evaluate_policy(self, P) -> np.ndarray:
        """Held output for parameter rows ``P``; other external inputs are grounded."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        V = np.zeros((P.shape[0], len(self.inputs)))
        for j, name in enumerate(self.inputs):
            if name.startswith("p") and name[1:].isdigit():
                V[:, j] = P[:, int(name[1:]) - 1]
        return self.evaluate(V)

    def signals(self, values) -> dict[str, np.ndarray]:
        X = self.node_voltages(values)
        v = lambda n: np.zeros(X.shape[0]) if n == "0" else X[:, self._idx[n]]
        logic = {c.nodes[2]: v(c.nodes[0]) >= v(c.nodes[1]) for c in self._cmp}
        for g in self._gates:
            logic[g.nodes[-1]] = _gate(g, logic, X.shape[0])
        return logic


def _gate_inputs(g: _Elem) -> tuple[str, ...]:
    return () if g.model in ("TIE0", "TIE1") else g.nodes[:-1]


def _gate(g: _Elem, logic: dict, n: int) -> np.ndarray:
    ins = [logic[x] for x in _gate_inputs(g)]
    m = g.model
    if m == "TIE0":
        return np.zeros(n, dtype=bool)
    if m == "TIE1":
        return np.ones(n, dtype=bool)
    if m == "NOT":
        return ~ins[0]
    if m == "BUF":
        return ins[0].copy()
    if m.startswith("AND"):
        return np.logical_and.reduce(ins)
    return np.logical_or.reduce(ins)


@dataclass(frozen=True)
class DeviationReport:
    samples: int
    deviating: int  # |u_circuit - u_policy| above ``tol``
    unexplained: int  # deviations outside every annotated error band
    max_deviation: float

    @property
    def ok(self) -> bool:
        return self.unexplained == 0


def explain_deviations(policy, text: str, P, tol: float = 1e-6) -> DeviationReport:
    """Compare a (rounded) netlist with the policy and account for each deviation.

    A deviation is explained when some comparator's ideal decision value lies
    inside its annotated band (the rounded comparator may flip), or when the
    selected adder's output differs by no more than its annotated gain error
    evaluated at that parameter.
    """
    it = NetlistInterpreter(text)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    u_c = it.evaluate_policy(P)
    u_p = policy.eval_unchecked(P)[:, 0]
    dev = np.abs(u_c - u_p)
    bad = np.flatnonzero(dev > tol)
    V_0 = next((e.value for e in it.elems if e.name == "VREF"), 1.0)
    Z = np.hstack([P, np.full((P.shape[0], 1), V_0)])
    near = np.zeros(P.shape[0], dtype=bool)
    for coef, band in it.meta["comparator"].values():
        near |= np.abs(Z @ coef) <= band
    ext = np.hstack([P, np.ones((P.shape[0], 1))])
    first = np.full(P.shape[0], -1)
    for j, reg in reversed(list(enumerate(policy.regions))):
        inside = np.all(P @ reg.poly.A.T <= reg.poly.b + 1e-9, axis=1)
        first[inside] = j
    unexplained = 0
    for i in bad:
        if near[i]:
            continue
        j = first[i]
        if j >= 0 and j in it.meta["adder"]:
            err, _ = it.meta["adder"][j]
            if dev[i] <= abs(ext[i] @ err) * (1 + 1e-9) + tol:
                continue
        unexplained += 1
    return DeviationReport(P.shape[0], int(bad.size), unexplained, float(dev.max(initial=0.0)))
